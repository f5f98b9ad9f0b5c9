//! Grammar-guided syntactic reduction to a fixpoint.
//!
//! Two kinds of deletion sites exist. List elements are members of a
//! repeated production: top-level declarations, statements of a block and
//! struct fields. Optional subtrees are grammar-optional parts: an `else`
//! branch, an initializer, a return value and a whole parameter list.
//!
//! Each pass runs ddmin over every list, outer lists first, then tries the
//! optional sites one at a time, largest first. Passes repeat until one
//! accepts nothing. Candidates are not typechecked before they reach the
//! oracle.

use std::collections::BTreeSet;

use crate::ddmin::DdminState;
use crate::frontend::ast::*;
use crate::frontend::{print_tokens, typecheck, Printed};
use crate::oracle::{OracleError, QueryEngine, Verdict};
use crate::report::Recorder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ListOwner {
    Program,
    Struct(NodeId),
    Block(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptionalPart {
    Else,
    Initializer,
    ReturnValue,
    Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiteKind {
    ListElement(ListOwner),
    Optional(OptionalPart),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionSite {
    /// The deleted element, or the node owning the optional part.
    pub node: NodeId,
    pub kind: SiteKind,
    pub tokens: usize,
    pub position: usize,
    edit: TreeEdit,
}

impl DeletionSite {
    pub fn apply(&self, tree: &SyntaxTree) -> SyntaxTree {
        tree.edited(&self.edit)
    }

    fn key(&self) -> (NodeId, SiteKind) {
        (self.node, self.kind)
    }
}

/// Every single deletion that keeps the tree printable and re-parseable to
/// the same shape.
pub fn enumerate_sites(tree: &SyntaxTree) -> Vec<DeletionSite> {
    let printed = print_tokens(tree);
    let mut sites = Vec::new();
    for (owner, elems) in lists(tree) {
        for id in elems {
            let edit = TreeEdit { delete: [id].into_iter().collect(), ..Default::default() };
            sites.push(site(&printed, id, SiteKind::ListElement(owner), 0, edit));
        }
    }
    sites.extend(optional_sites(tree, &printed));
    sites.retain(|s| else_binding_is_unambiguous(&s.apply(tree).program));
    sites
}

fn site(printed: &Printed, id: NodeId, kind: SiteKind, extra: usize, edit: TreeEdit) -> DeletionSite {
    let r = printed.range(id).unwrap_or(0..0);
    DeletionSite { node: id, kind, tokens: r.len() + extra, position: r.start, edit }
}

/// Lists in preorder, each with its current elements in source order.
pub fn lists(tree: &SyntaxTree) -> Vec<(ListOwner, Vec<NodeId>)> {
    fn stmt(s: &Stmt, out: &mut Vec<(ListOwner, Vec<NodeId>)>) {
        match &s.kind {
            StmtKind::Block(b) => block(b, out),
            StmtKind::If { then_branch, else_branch, .. } => {
                stmt(then_branch, out);
                if let Some(e) = else_branch {
                    stmt(e, out);
                }
            }
            StmtKind::While { body, .. } | StmtKind::Labeled { body, .. } => stmt(body, out),
            _ => {}
        }
    }
    fn block(b: &Block, out: &mut Vec<(ListOwner, Vec<NodeId>)>) {
        out.push((ListOwner::Block(b.id), b.stmts.iter().map(|s| s.id).collect()));
        for s in &b.stmts {
            stmt(s, out);
        }
    }
    let mut out = vec![(ListOwner::Program, tree.program.items.iter().map(Item::id).collect())];
    for item in &tree.program.items {
        match item {
            Item::Struct(s) => out.push((ListOwner::Struct(s.id), s.fields.iter().map(|f| f.id).collect())),
            Item::FuncDef(f) => block(&f.body, &mut out),
            Item::FuncDecl(_) | Item::Var(_) => {}
        }
    }
    out
}

fn list_elements(tree: &SyntaxTree, owner: ListOwner) -> Option<Vec<NodeId>> {
    lists(tree).into_iter().find(|(o, _)| *o == owner).map(|(_, e)| e)
}

fn optional_sites(tree: &SyntaxTree, printed: &Printed) -> Vec<DeletionSite> {
    struct Walk<'a> {
        printed: &'a Printed,
        out: Vec<DeletionSite>,
    }
    impl Walk<'_> {
        fn params(&mut self, owner: NodeId, sig: &FuncSig) {
            if sig.params.is_empty() {
                return;
            }
            let tokens: usize = sig.params.iter().map(|p| self.printed.range(p.id).map_or(0, |r| r.len())).sum();
            let edit = TreeEdit { delete: sig.params.iter().map(|p| p.id).collect(), ..Default::default() };
            let first = self.printed.range(sig.params[0].id).map_or(0, |r| r.start);
            self.out.push(DeletionSite {
                node: owner,
                kind: SiteKind::Optional(OptionalPart::Params),
                tokens: tokens + sig.params.len() - 1,
                position: first,
                edit,
            });
        }
        fn init(&mut self, v: &VarDecl) {
            if let Some(e) = &v.init {
                let edit = TreeEdit { drop_init: [v.id].into_iter().collect(), ..Default::default() };
                let mut s = site(self.printed, e.id, SiteKind::Optional(OptionalPart::Initializer), 1, edit);
                s.node = v.id;
                self.out.push(s);
            }
        }
        fn stmt(&mut self, s: &Stmt) {
            match &s.kind {
                StmtKind::Var(v) => self.init(v),
                StmtKind::Return(Some(e)) => {
                    let edit = TreeEdit { drop_return_value: [s.id].into_iter().collect(), ..Default::default() };
                    let mut site = site(self.printed, e.id, SiteKind::Optional(OptionalPart::ReturnValue), 0, edit);
                    site.node = s.id;
                    self.out.push(site);
                }
                StmtKind::If { then_branch, else_branch, .. } => {
                    self.stmt(then_branch);
                    if let Some(e) = else_branch {
                        let edit = TreeEdit { drop_else: [s.id].into_iter().collect(), ..Default::default() };
                        let mut site = site(self.printed, e.id, SiteKind::Optional(OptionalPart::Else), 1, edit);
                        site.node = s.id;
                        self.out.push(site);
                        self.stmt(e);
                    }
                }
                StmtKind::While { body, .. } | StmtKind::Labeled { body, .. } => self.stmt(body),
                StmtKind::Block(b) => b.stmts.iter().for_each(|s| self.stmt(s)),
                _ => {}
            }
        }
    }
    let mut w = Walk { printed, out: Vec::new() };
    for item in &tree.program.items {
        match item {
            Item::Struct(s) => s.fields.iter().for_each(|f| w.init(f)),
            Item::FuncDecl(d) => w.params(d.id, &d.sig),
            Item::FuncDef(f) => {
                w.params(f.id, &f.sig);
                f.body.stmts.iter().for_each(|s| w.stmt(s));
            }
            Item::Var(v) => w.init(v),
        }
    }
    w.out
}

fn by_size(ids: Vec<NodeId>, printed: &Printed) -> Vec<NodeId> {
    let mut keyed: Vec<(usize, usize, NodeId)> = ids
        .into_iter()
        .map(|id| {
            let r = printed.range(id).unwrap_or(0..0);
            (r.len(), r.start, id)
        })
        .collect();
    keyed.sort_by_key(|&(len, start, _)| (std::cmp::Reverse(len), start));
    keyed.into_iter().map(|(_, _, id)| id).collect()
}

#[derive(Debug)]
pub struct SyntacticOutcome {
    pub tree: SyntaxTree,
    pub accepted: usize,
    pub passes: usize,
}

struct Driver<'a> {
    engine: &'a QueryEngine,
    recorder: &'a mut Recorder,
    tree: SyntaxTree,
    tokens: usize,
    accepted: usize,
}

impl Driver<'_> {
    /// Tries `candidate`; on success it becomes the current tree.
    fn attempt(&mut self, ids: Vec<u32>, candidate: SyntaxTree) -> Result<bool, OracleError> {
        let attempt = self.recorder.begin();
        let printed = print_tokens(&candidate);
        let tokens = printed.token_count();
        let typechecks = !typecheck(&candidate).iter().any(|d| d.is_error());
        if tokens >= self.tokens || !else_binding_is_unambiguous(&candidate.program) {
            self.recorder.record(attempt, ids, Verdict::precheck_reject(), tokens, typechecks, None);
            return Ok(false);
        }
        let verdict = self.engine.check(&printed.text())?;
        self.recorder.record(attempt, ids, verdict, tokens, typechecks, None);
        if verdict.accept {
            self.tree = candidate;
            self.tokens = tokens;
            self.accepted += 1;
        }
        Ok(verdict.accept)
    }

    fn list(&mut self, owner: ListOwner) -> Result<(), OracleError> {
        let Some(elems) = list_elements(&self.tree, owner) else { return Ok(()) };
        let mut state = DdminState::new(by_size(elems, &print_tokens(&self.tree)));
        while let Some(chosen) = state.next_candidate() {
            let edit = TreeEdit { delete: chosen.iter().copied().collect(), ..Default::default() };
            let candidate = self.tree.edited(&edit);
            if self.attempt(chosen.iter().map(|id| id.0).collect(), candidate)? {
                let survivors = list_elements(&self.tree, owner).unwrap_or_default();
                state.accept(by_size(survivors, &print_tokens(&self.tree)));
            } else {
                state.reject();
            }
        }
        Ok(())
    }

    fn optionals(&mut self) -> Result<(), OracleError> {
        let mut tried = BTreeSet::new();
        loop {
            let mut sites = optional_sites(&self.tree, &print_tokens(&self.tree));
            sites.sort_by_key(|s| (std::cmp::Reverse(s.tokens), s.position));
            let Some(next) = sites.into_iter().find(|s| !tried.contains(&s.key())) else {
                return Ok(());
            };
            tried.insert(next.key());
            let candidate = next.apply(&self.tree);
            self.attempt(vec![next.node.0], candidate)?;
        }
    }
}

/// Reduces a tree already known to satisfy the property.
pub fn reduce_syntactic(
    tree: SyntaxTree,
    engine: &QueryEngine,
    recorder: &mut Recorder,
) -> Result<SyntacticOutcome, OracleError> {
    let tokens = print_tokens(&tree).token_count();
    let mut d = Driver { engine, recorder, tree, tokens, accepted: 0 };
    let mut passes = 0;
    loop {
        passes += 1;
        let before = d.accepted;
        for (owner, _) in lists(&d.tree) {
            d.list(owner)?;
        }
        d.optionals()?;
        if d.accepted == before {
            break;
        }
    }
    Ok(SyntacticOutcome { tree: d.tree, accepted: d.accepted, passes })
}
