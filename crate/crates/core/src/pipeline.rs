//! The full reduction pipeline and the post-hoc minimality check.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::frontend::{parse_source, print_tokens, typecheck, Diagnostic, FrontendError, SyntaxTree};
use crate::oracle::{OracleError, PropertyOracle, QueryEngine};
use crate::reconstruct::{apply, plan};
use crate::redcore::{reduce_accepted, ReduceError, SemanticOptions};
use crate::report::{Recorder, ReductionReport, StageReport};
use crate::semgraph::{build_graph, classify_semantic_nodes, DependencyGraph};
use crate::synred::{enumerate_sites, reduce_syntactic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stages {
    #[default]
    SemSyn,
    Sem,
    Syn,
}

impl FromStr for Stages {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sem+syn" => Ok(Stages::SemSyn),
            "sem" => Ok(Stages::Sem),
            "syn" => Ok(Stages::Syn),
            other => Err(format!("unknown stages `{other}` (expected sem+syn, sem or syn)")),
        }
    }
}

impl fmt::Display for Stages {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stages::SemSyn => "sem+syn",
            Stages::Sem => "sem",
            Stages::Syn => "syn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub stages: Stages,
    /// Run the semantic stage without dependency reconstruction.
    pub ablation_no_reconstruct: bool,
    pub cache: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { stages: Stages::SemSyn, ablation_no_reconstruct: false, cache: true }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Parse(#[from] FrontendError),
    #[error("input does not typecheck: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Type(Vec<Diagnostic>),
    #[error("the input does not satisfy the property")]
    InitialProperty,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Parse(_) | PipelineError::Type(_) => 2,
            PipelineError::InitialProperty => 3,
            PipelineError::Oracle(_) => 4,
            PipelineError::Config(_) | PipelineError::Internal(_) => 1,
        }
    }
}

impl From<ReduceError> for PipelineError {
    fn from(e: ReduceError) -> Self {
        match e {
            ReduceError::Oracle(e) => PipelineError::Oracle(e),
            ReduceError::InitialProperty => PipelineError::InitialProperty,
            ReduceError::Graph(e) => PipelineError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub program: String,
    pub report: ReductionReport,
    /// Dependency graph of the input.
    pub input_graph: DependencyGraph,
    pub input_tree: SyntaxTree,
}

/// Parses and typechecks `source`.
pub fn load(source: &str) -> Result<SyntaxTree, PipelineError> {
    let tree = parse_source(source)?;
    let errors: Vec<Diagnostic> = typecheck(&tree).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(PipelineError::Type(errors));
    }
    Ok(tree)
}

struct StageTotals {
    report: StageReport,
}

impl StageTotals {
    fn new(name: &str) -> Self {
        Self { report: StageReport { name: name.to_string(), ..Default::default() } }
    }

    fn add(&mut self, queries: usize, iterations: usize, seconds: f64, tokens_after: usize) {
        self.report.queries += queries;
        self.report.iterations += iterations;
        self.report.time_seconds += seconds;
        self.report.tokens_after = tokens_after;
    }
}

/// Reduces `source` against `oracle`.
///
/// With both stages, semantic and syntactic reduction alternate until a
/// syntactic round accepts nothing, so the result is at a fixpoint of both.
pub fn run(source: &str, oracle: Box<dyn PropertyOracle>, config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    if config.stages == Stages::Syn && config.ablation_no_reconstruct {
        return Err(PipelineError::Config("ablation applies to the semantic stage; it cannot be combined with syn".into()));
    }
    let started = Instant::now();
    let input_tree = load(source)?;
    let input_graph = build_graph(&input_tree).map_err(|e| PipelineError::Internal(e.to_string()))?;
    let engine = QueryEngine::new(oracle, config.cache);
    let printed = print_tokens(&input_tree);
    let tokens_before = printed.token_count();
    if !engine.check(&printed.text())?.accept {
        return Err(PipelineError::InitialProperty);
    }

    let options = SemanticOptions { reconstruct: !config.ablation_no_reconstruct };
    let mut sem = StageTotals::new("sem");
    let mut syn = StageTotals::new("syn");
    let mut log = Vec::new();
    let mut tree = input_tree.clone();
    loop {
        if config.stages != Stages::Syn {
            let (q0, t0) = (engine.queries(), Instant::now());
            let mut rec = Recorder::new("sem");
            let out = reduce_accepted(tree, &engine, options, &mut rec)?;
            tree = out.tree;
            sem.add(engine.queries() - q0, rec.iterations(), t0.elapsed().as_secs_f64(), print_tokens(&tree).token_count());
            log.extend(rec.records);
        }
        if config.stages == Stages::Sem {
            break;
        }
        let (q0, t0) = (engine.queries(), Instant::now());
        let mut rec = Recorder::new("syn");
        let out = reduce_syntactic(tree, &engine, &mut rec)?;
        tree = out.tree;
        syn.add(engine.queries() - q0, rec.iterations(), t0.elapsed().as_secs_f64(), print_tokens(&tree).token_count());
        log.extend(rec.records);
        if out.accepted == 0 || config.stages == Stages::Syn {
            break;
        }
        // A syntactic deletion may leave a program that no longer
        // typechecks; the semantic stage needs a compilable tree.
        if typecheck(&tree).iter().any(|d| d.is_error()) {
            break;
        }
    }

    let printed = print_tokens(&tree);
    let mut stages = Vec::new();
    if config.stages != Stages::Syn {
        stages.push(sem.report);
    }
    if config.stages != Stages::Sem {
        stages.push(syn.report);
    }
    let report = ReductionReport {
        tokens_before,
        tokens_after: printed.token_count(),
        queries: engine.queries(),
        time_seconds: started.elapsed().as_secs_f64(),
        iterations: log.len(),
        stages,
        log,
    };
    Ok(RunOutcome { program: printed.text(), report, input_graph, input_tree })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `semantic` or `syntactic`.
    pub kind: &'static str,
    pub description: String,
    pub tokens_after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MinimalityReport {
    pub semantic_checked: usize,
    pub syntactic_checked: usize,
    pub violations: Vec<Violation>,
}

impl MinimalityReport {
    pub fn is_minimal(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tries every single semantic deletion (with reconstruction) and every
/// single syntactic site deletion of `program`, reporting those the oracle
/// accepts and that shrink the program.
pub fn verify_minimal(program: &str, oracle: Box<dyn PropertyOracle>) -> Result<MinimalityReport, PipelineError> {
    let tree = parse_source(program)?;
    let engine = QueryEngine::new(oracle, true);
    let tokens = print_tokens(&tree).token_count();
    let mut report = MinimalityReport::default();

    if let Ok(graph) = build_graph(&tree) {
        for c in classify_semantic_nodes(&graph) {
            report.semantic_checked += 1;
            let Ok(p) = plan(&graph, &[c].into_iter().collect()) else { continue };
            let Ok(applied) = apply(&tree, &p) else { continue };
            let printed = print_tokens(&applied.tree);
            if printed.token_count() < tokens && engine.check(&printed.text())?.accept {
                let kind = graph.node(c).map(|n| n.kind.to_string()).unwrap_or_default();
                report.violations.push(Violation {
                    kind: "semantic",
                    description: format!("deleting {kind} {c}"),
                    tokens_after: printed.token_count(),
                });
            }
        }
    }

    for site in enumerate_sites(&tree) {
        report.syntactic_checked += 1;
        let printed = print_tokens(&site.apply(&tree));
        if printed.token_count() < tokens && engine.check(&printed.text())?.accept {
            report.violations.push(Violation {
                kind: "syntactic",
                description: format!("deleting {:?} at {}", site.kind, site.node),
                tokens_after: printed.token_count(),
            });
        }
    }
    Ok(report)
}
