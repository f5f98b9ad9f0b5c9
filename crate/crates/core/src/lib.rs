//! Dependency-aware reduction of failure-inducing MicroC programs.
//!
//! The pipeline has three stages:
//!
//! 1. [`semgraph`] builds a dependency graph over declarations, statements
//!    and the expressions that reference them.
//! 2. [`redcore`] runs ddmin over the graph's reduction candidates. Every
//!    deletion goes through [`reconstruct`], which repairs surviving users of
//!    deleted providers so the candidate program still compiles.
//! 3. [`synred`] finishes with grammar-guided subtree deletion to a fixpoint.
//!
//! Candidate programs are judged by a property oracle ([`oracle`]), normally
//! an external command that exits 0 when the property holds.

pub mod ddmin;
pub mod frontend;
pub mod interp;
pub mod oracle;
pub mod pipeline;
pub mod reconstruct;
pub mod redcore;
pub mod report;
pub mod semgraph;
pub mod synred;

pub use frontend::{
    count_tokens, lex, parse, parse_source, print, tree_tokens, typecheck, Diagnostic, MicroCType, NodeId,
    SyntaxTree,
};
pub use oracle::{ExternalOracle, OracleConfig, OracleError, PropertyOracle, QueryEngine, Verdict, VerdictSource};
pub use pipeline::{run, verify_minimal, MinimalityReport, PipelineError, RunConfig, RunOutcome, Stages};
pub use report::{IterationRecord, ReductionReport, StageReport};
pub use semgraph::{build_graph, DependencyGraph, SemanticNodeId};
