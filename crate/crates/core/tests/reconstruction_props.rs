mod common;

use std::collections::BTreeSet;

use mcreduce_core::frontend::{parse_source, print, tree_tokens, typecheck};
use mcreduce_core::reconstruct::{apply, plan, PlanError};
use mcreduce_core::semgraph::{build_graph, classify_semantic_nodes, update_graph, DependencyGraph, SemanticNodeId};
use mcreduce_core::SyntaxTree;
use proptest::prelude::*;

struct Loaded {
    name: String,
    tree: SyntaxTree,
    graph: DependencyGraph,
    candidates: Vec<SemanticNodeId>,
}

fn loaded() -> Vec<Loaded> {
    common::corpus()
        .into_iter()
        .map(|item| {
            let tree = parse_source(&item.source).unwrap();
            let graph = build_graph(&tree).unwrap();
            let candidates = classify_semantic_nodes(&graph);
            Loaded { name: item.name, tree, graph, candidates }
        })
        .collect()
}

fn pick(candidates: &[SemanticNodeId], mask: u64) -> BTreeSet<SemanticNodeId> {
    candidates.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, c)| *c).collect()
}

/// Deletes `requested` with reconstruction and checks everything that must
/// hold of the result. Returns false if the plan was refused.
fn check_deletion(l: &Loaded, requested: &BTreeSet<SemanticNodeId>) -> Result<bool, TestCaseError> {
    let p = match plan(&l.graph, requested) {
        Ok(p) => p,
        Err(PlanError::NoRule { .. }) => return Ok(false),
        Err(e) => return Err(TestCaseError::fail(format!("{}: {e}", l.name))),
    };
    prop_assert!(requested.is_subset(&p.deletions));
    let applied = apply(&l.tree, &p).map_err(|e| TestCaseError::fail(format!("{}: {e}\n{:?}", l.name, requested)))?;
    prop_assert!(typecheck(&applied.tree).iter().all(|d| !d.is_error()));

    let text = print(&applied.tree);
    let reparsed = parse_source(&text).unwrap();
    prop_assert!(typecheck(&reparsed).iter().all(|d| !d.is_error()), "{}:\n{text}", l.name);

    let updated = update_graph(&l.graph, &applied.tree, &applied.deleted, &applied.placeholders)
        .map_err(|e| TestCaseError::fail(format!("{}: {e}", l.name)))?;
    prop_assert!(updated.check_invariants().is_ok());
    for id in &applied.deleted {
        prop_assert!(!updated.contains(*id));
    }
    let rebuilt = build_graph(&applied.tree).unwrap();
    prop_assert_eq!(classify_semantic_nodes(&updated), classify_semantic_nodes(&rebuilt), "{}", l.name);
    Ok(true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_reconstructed_deletion_compiles(masks in prop::collection::vec(any::<u64>(), 1..4)) {
        for l in loaded() {
            for &mask in &masks {
                check_deletion(&l, &pick(&l.candidates, mask))?;
            }
        }
    }
}

#[test]
fn every_single_candidate_deletion_compiles() {
    for l in loaded() {
        let mut planned = 0;
        for &c in &l.candidates {
            if check_deletion(&l, &[c].into_iter().collect()).unwrap() {
                planned += 1;
            }
        }
        assert!(planned > 0, "{}", l.name);
    }
}

#[test]
fn deleting_everything_leaves_nothing() {
    for l in loaded() {
        let all: BTreeSet<_> = l.candidates.iter().copied().collect();
        let p = plan(&l.graph, &all).unwrap();
        let applied = apply(&l.tree, &p).unwrap();
        assert_eq!(tree_tokens(&applied.tree), 0, "{}", l.name);
    }
}

#[test]
fn graphs_satisfy_their_invariants() {
    for l in loaded() {
        l.graph.check_invariants().unwrap_or_else(|e| panic!("{}: {e}", l.name));
        for (user, provider) in l.graph.edges() {
            assert!(l.graph.node(user).unwrap().roles.user, "{}", l.name);
            assert!(l.graph.node(provider).unwrap().roles.provider, "{}", l.name);
        }
    }
}
