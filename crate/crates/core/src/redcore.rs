//! Semantic reduction: ddmin over the dependency graph's candidates, with
//! every deletion repaired by dependency reconstruction.
//!
//! A candidate is accepted only when the oracle accepts it and it has fewer
//! tokens than the current program. Candidates whose reconstruction fails,
//! or that do not shrink the program, are rejected without a query. After
//! each accept the graph is updated and the candidates are re-classified.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ddmin::DdminState;
use crate::frontend::{print_tokens, typecheck, SyntaxTree};
use crate::oracle::{OracleError, QueryEngine, Verdict};
use crate::reconstruct::{apply, apply_unchecked, plan, plan_without_reconstruction};
use crate::report::Recorder;
use crate::semgraph::{
    build_graph, classify_semantic_nodes, prune_graph, update_graph, DependencyGraph, GraphError, SemanticNodeId,
};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("the input does not satisfy the property")]
    InitialProperty,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemanticOptions {
    /// When false, candidates are deleted exactly as requested: no group
    /// closure, no rewrites, no typecheck before the oracle.
    pub reconstruct: bool,
}

impl Default for SemanticOptions {
    fn default() -> Self {
        Self { reconstruct: true }
    }
}

#[derive(Debug)]
pub struct SemanticOutcome {
    pub tree: SyntaxTree,
    pub graph: DependencyGraph,
    pub accepted: usize,
}

/// Checks that the oracle accepts `tree`, then reduces it.
pub fn reduce_semantic(
    tree: SyntaxTree,
    engine: &QueryEngine,
    options: SemanticOptions,
    recorder: &mut Recorder,
) -> Result<SemanticOutcome, ReduceError> {
    let printed = print_tokens(&tree);
    if !engine.check(&printed.text())?.accept {
        return Err(ReduceError::InitialProperty);
    }
    reduce_accepted(tree, engine, options, recorder)
}

/// Reduces a tree already known to satisfy the property.
pub fn reduce_accepted(
    mut tree: SyntaxTree,
    engine: &QueryEngine,
    options: SemanticOptions,
    recorder: &mut Recorder,
) -> Result<SemanticOutcome, ReduceError> {
    let mut graph = build_graph(&tree)?;
    let mut tokens = print_tokens(&tree).token_count();
    let mut state = DdminState::new(classify_semantic_nodes(&graph));
    let mut accepted = 0;

    while let Some(chosen) = state.next_candidate() {
        let attempt = recorder.begin();
        let requested: BTreeSet<SemanticNodeId> = chosen.iter().copied().collect();
        let ids: Vec<u32> = chosen.iter().map(|id| id.0).collect();

        let planned = if options.reconstruct { plan(&graph, &requested) } else { Ok(plan_without_reconstruction(&requested)) };
        let Ok(planned) = planned else {
            recorder.record(attempt, ids, Verdict::precheck_reject(), tokens, false, None);
            state.reject();
            continue;
        };
        let plan_json = Some(planned.to_json());
        let applied = if options.reconstruct { apply(&tree, &planned) } else { Ok(apply_unchecked(&tree, &planned)) };
        let Ok(applied) = applied else {
            recorder.record(attempt, ids, Verdict::precheck_reject(), tokens, false, plan_json);
            state.reject();
            continue;
        };

        let printed = print_tokens(&applied.tree);
        let new_tokens = printed.token_count();
        let typechecks = !typecheck(&applied.tree).iter().any(|d| d.is_error());
        if new_tokens >= tokens {
            recorder.record(attempt, ids, Verdict::precheck_reject(), new_tokens, typechecks, plan_json);
            state.reject();
            continue;
        }

        let verdict = engine.check(&printed.text())?;
        recorder.record(attempt, ids, verdict, new_tokens, typechecks, plan_json);
        if !verdict.accept {
            state.reject();
            continue;
        }

        graph = if options.reconstruct {
            match update_graph(&graph, &applied.tree, &applied.deleted, &applied.placeholders) {
                Ok(g) => g,
                Err(e) => {
                    debug_assert!(false, "graph update failed: {e}");
                    build_graph(&applied.tree)?
                }
            }
        } else {
            prune_graph(&graph, &applied.tree, &applied.deleted)
        };
        tree = applied.tree;
        tokens = new_tokens;
        accepted += 1;
        state.accept(classify_semantic_nodes(&graph));
    }

    Ok(SemanticOutcome { tree, graph, accepted })
}
