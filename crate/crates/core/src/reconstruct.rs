//! Dependency reconstruction.
//!
//! Deleting a provider leaves its users dangling. [`plan`] closes the
//! requested deletions under associated groups and subtree containment, then
//! picks a repair for every surviving user of a deleted provider:
//!
//! | provider  | user                 | repair                               |
//! |-----------|----------------------|--------------------------------------|
//! | struct    | type reference       | type becomes `void***`               |
//! | function  | call                 | default value of the return type     |
//! | function  | identifier           | `(void***)0`                         |
//! | variable  | identifier           | default value of the declared type   |
//! | label     | `goto`               | the `goto` is deleted                |
//! | parameter | argument             | deleted together with the parameter  |
//!
//! A call of a `void` function can only appear as an expression statement;
//! that statement becomes `;`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::check::typecheck;
use crate::frontend::Diagnostic;
use crate::semgraph::{DependencyGraph, NodeKind, SemanticNodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no default value for bare `void`")]
pub struct DefaultError;

/// `1` for `int`, `(T)0` for every other type. Node ids are all zero; callers
/// renumber before inserting the expression into a tree.
pub fn default_value_for(t: &MicroCType) -> Result<Expr, DefaultError> {
    if t.is_bare_void() {
        return Err(DefaultError);
    }
    if *t == MicroCType::INT {
        return Ok(Expr { id: NodeId(0), kind: ExprKind::Int(1) });
    }
    Ok(Expr {
        id: NodeId(0),
        kind: ExprKind::Cast {
            ty: TypeRef { id: NodeId(0), ty: t.clone() },
            operand: Box::new(Expr { id: NodeId(0), kind: ExprKind::Int(0) }),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Replacement {
    /// Replace the user expression with the default value of this type.
    Default(String),
    /// Replace the user type reference with `void***`.
    VoidPtr3,
    /// Replace the statement holding the user (a void call) with `;`.
    EmptyStatement(SemanticNodeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rewrite {
    pub user: SemanticNodeId,
    pub replacement: Replacement,
    #[serde(skip)]
    ty: Option<MicroCType>,
}

/// Deletions and rewrites for one candidate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReconstructionPlan {
    pub requested: BTreeSet<SemanticNodeId>,
    /// Graph nodes removed explicitly, closed under groups. Nodes inside
    /// them go with them.
    pub deletions: BTreeSet<SemanticNodeId>,
    /// Forward-declaration parameters removed along with their definition
    /// parameter. These are tree nodes, not graph nodes.
    pub mirror_deletions: BTreeSet<NodeId>,
    pub rewrites: Vec<Rewrite>,
}

impl ReconstructionPlan {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plan serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("node {0} is not a graph node")]
    UnknownNode(SemanticNodeId),
    #[error("no reconstruction rule for user {user} ({kind}) of deleted provider {provider}")]
    NoRule { user: SemanticNodeId, kind: NodeKind, provider: SemanticNodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ApplyError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ApplyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "reconstructed program does not typecheck")?;
        if let Some(d) = self.diagnostics.first() {
            write!(f, ": {d}")?;
        }
        Ok(())
    }
}

/// A reconstructed tree plus what changed, for the graph update.
#[derive(Debug, Clone)]
pub struct Applied {
    pub tree: SyntaxTree,
    pub deleted: BTreeSet<SemanticNodeId>,
    /// Rewritten user mapped to the node that replaced it.
    pub placeholders: BTreeMap<SemanticNodeId, NodeId>,
}

/// Plans the deletion of `requested` with reconstruction.
pub fn plan(graph: &DependencyGraph, requested: &BTreeSet<SemanticNodeId>) -> Result<ReconstructionPlan, PlanError> {
    if let Some(&id) = requested.iter().find(|id| !graph.contains(**id)) {
        return Err(PlanError::UnknownNode(id));
    }
    let mut deletions = requested.clone();
    let mut work: Vec<SemanticNodeId> = requested.iter().copied().collect();
    while let Some(id) = work.pop() {
        for g in graph.groups_of(id) {
            for &m in &g.members {
                if deletions.insert(m) {
                    work.push(m);
                }
            }
        }
    }

    let is_dead = |id: SemanticNodeId, deletions: &BTreeSet<SemanticNodeId>| {
        deletions.contains(&id) || graph.ancestors(id).any(|a| deletions.contains(&a))
    };
    let dead_structs: BTreeSet<&str> = graph
        .nodes()
        .filter(|n| n.kind == NodeKind::StructDecl && is_dead(n.id, &deletions))
        .filter_map(|n| n.name.as_deref())
        .collect();

    let mut broken: BTreeMap<SemanticNodeId, Vec<SemanticNodeId>> = BTreeMap::new();
    for (u, p) in graph.edges() {
        if is_dead(p, &deletions) && !is_dead(u, &deletions) {
            broken.entry(u).or_default().push(p);
        }
    }
    let mut users: Vec<SemanticNodeId> = broken.keys().copied().collect();
    users.sort_by_key(|&u| {
        let n = graph.node(u).expect("edge endpoint is a node");
        (n.position, std::cmp::Reverse(n.tokens))
    });

    let mut rewritten: BTreeSet<SemanticNodeId> = BTreeSet::new();
    let mut rewrites = Vec::new();
    let mut extra = BTreeSet::new();
    for u in users {
        if graph.ancestors(u).any(|a| rewritten.contains(&a) || extra.contains(&a)) {
            continue;
        }
        let node = graph.node(u).expect("edge endpoint is a node");
        let providers = &broken[&u];
        let no_rule = || PlanError::NoRule { user: u, kind: node.kind, provider: providers[0] };
        match node.kind {
            NodeKind::TypeRef | NodeKind::ReturnType => {
                rewrites.push(Rewrite { user: u, replacement: Replacement::VoidPtr3, ty: None });
            }
            NodeKind::Goto | NodeKind::FuncFwdDecl => {
                extra.insert(u);
                continue;
            }
            NodeKind::IdentUse | NodeKind::Call | NodeKind::Argument | NodeKind::Placeholder => {
                let only_params = providers.iter().all(|p| graph.node(*p).is_some_and(|n| n.kind == NodeKind::Param))
                    && node.kind == NodeKind::Argument;
                if only_params {
                    return Err(no_rule());
                }
                let ty = node.ty.clone().ok_or_else(no_rule)?;
                if ty.is_bare_void() {
                    let stmt = node.owner_stmt.ok_or_else(no_rule)?;
                    rewrites.push(Rewrite { user: u, replacement: Replacement::EmptyStatement(stmt), ty: None });
                } else {
                    let ty = match ty.struct_name() {
                        Some(s) if dead_structs.contains(s) => MicroCType::void_ptr3(),
                        _ => ty,
                    };
                    rewrites.push(Rewrite { user: u, replacement: Replacement::Default(ty.to_string()), ty: Some(ty) });
                }
            }
            _ => return Err(no_rule()),
        }
        rewritten.insert(u);
    }
    deletions.extend(extra);

    let mut mirror_deletions = BTreeSet::new();
    for &d in &deletions {
        if graph.node(d).is_some_and(|n| n.kind == NodeKind::Param) {
            mirror_deletions.extend(graph.mirrors(d).iter().copied());
        }
    }

    Ok(ReconstructionPlan { requested: requested.clone(), deletions, mirror_deletions, rewrites })
}

/// Plans the deletion of exactly `requested`: no group closure, no rewrites.
pub fn plan_without_reconstruction(requested: &BTreeSet<SemanticNodeId>) -> ReconstructionPlan {
    ReconstructionPlan { requested: requested.clone(), deletions: requested.clone(), ..Default::default() }
}

/// Applies `plan` and checks that the result compiles.
pub fn apply(tree: &SyntaxTree, plan: &ReconstructionPlan) -> Result<Applied, ApplyError> {
    let applied = apply_unchecked(tree, plan);
    let diagnostics: Vec<Diagnostic> = typecheck(&applied.tree).into_iter().filter(Diagnostic::is_error).collect();
    if diagnostics.is_empty() {
        Ok(applied)
    } else {
        Err(ApplyError { diagnostics })
    }
}

/// Applies `plan` without checking the result.
pub fn apply_unchecked(tree: &SyntaxTree, plan: &ReconstructionPlan) -> Applied {
    let mut base = tree.clone();
    let mut edit = TreeEdit { delete: plan.deletions.clone(), ..Default::default() };
    edit.delete.extend(plan.mirror_deletions.iter().copied());
    let mut placeholders = BTreeMap::new();
    for r in &plan.rewrites {
        let new_id = match &r.replacement {
            Replacement::Default(_) => {
                let ty = r.ty.as_ref().expect("default rewrites carry their type");
                let mut e = default_value_for(ty).expect("planned defaults are never void");
                renumber(&mut e, &mut base);
                let id = e.id;
                edit.replace_expr.insert(r.user, e);
                id
            }
            Replacement::VoidPtr3 => {
                let id = base.alloc_id();
                edit.replace_type.insert(r.user, TypeRef { id, ty: MicroCType::void_ptr3() });
                id
            }
            Replacement::EmptyStatement(stmt) => {
                let id = base.alloc_id();
                edit.empty_stmt.insert(*stmt, id);
                id
            }
        };
        placeholders.insert(r.user, new_id);
    }
    Applied { tree: base.edited(&edit), deleted: plan.deletions.clone(), placeholders }
}

fn renumber(e: &mut Expr, tree: &mut SyntaxTree) {
    e.id = tree.alloc_id();
    match &mut e.kind {
        ExprKind::Cast { ty, operand } => {
            ty.id = tree.alloc_id();
            renumber(operand, tree);
        }
        ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) => renumber(operand, tree),
        ExprKind::Binary { lhs, rhs, .. } => {
            renumber(lhs, tree);
            renumber(rhs, tree);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(|a| renumber(a, tree)),
        ExprKind::Int(_) | ExprKind::Ident(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::printer::expr_to_string;
    use crate::frontend::{parse_source, print, BaseType};
    use crate::semgraph::build_graph;

    fn default_text(t: MicroCType) -> String {
        expr_to_string(&default_value_for(&t).unwrap())
    }

    #[test]
    fn default_values() {
        assert_eq!(default_text(MicroCType::INT), "1");
        assert_eq!(default_text(MicroCType::new(BaseType::Int, 1)), "(int*)0");
        assert_eq!(default_text(MicroCType::new(BaseType::Struct("S".into()), 2)), "(struct S**)0");
        assert_eq!(default_value_for(&MicroCType::VOID), Err(DefaultError));
    }

    fn named(graph: &DependencyGraph, kind: NodeKind, name: &str) -> SemanticNodeId {
        graph.nodes().find(|n| n.kind == kind && n.name.as_deref() == Some(name)).unwrap().id
    }

    fn reduce(src: &str, kind: NodeKind, name: &str) -> (ReconstructionPlan, String) {
        let tree = parse_source(src).unwrap();
        let graph = build_graph(&tree).unwrap();
        let p = plan(&graph, &[named(&graph, kind, name)].into_iter().collect()).unwrap();
        let out = apply(&tree, &p).unwrap();
        (p, print(&out.tree))
    }

    #[test]
    fn unreferenced_declaration() {
        let (p, out) = reduce("int z; int main() { return 0; }", NodeKind::GlobalVar, "z");
        assert!(p.rewrites.is_empty());
        assert_eq!(out, "int main() {\n  return 0;\n}\n");
    }

    #[test]
    fn void_call_becomes_empty_statement() {
        let (_, out) = reduce("void f() { } int main() { f(); return 0; }", NodeKind::FuncDef, "f");
        assert_eq!(out, "int main() {\n  ;\n  return 0;\n}\n");
    }

    #[test]
    fn nested_users_are_rewritten_outermost_first() {
        let src = "int f(int a) { return a; } int main() { return f(f(2)); }";
        let (p, out) = reduce(src, NodeKind::FuncDef, "f");
        assert_eq!(p.rewrites.len(), 1);
        assert_eq!(out, "int main() {\n  return 1;\n}\n");
    }

    #[test]
    fn deleting_a_parameter_removes_fwd_decl_mirror() {
        let src = "int f(int a); int main() { return f(3); } int f(int a) { return a; }";
        let (p, out) = reduce(src, NodeKind::Param, "a");
        assert_eq!(p.mirror_deletions.len(), 1);
        assert_eq!(out, "int f();\nint main() {\n  return f();\n}\nint f() {\n  return 1;\n}\n");
    }

    #[test]
    fn struct_deleted_with_its_typed_variable() {
        let src = "struct S { int v; }; int main() { struct S s; struct S* p = &s; return 0; }";
        let tree = parse_source(src).unwrap();
        let graph = build_graph(&tree).unwrap();
        let req = [named(&graph, NodeKind::StructDecl, "S"), named(&graph, NodeKind::LocalVar, "s")];
        let p = plan(&graph, &req.into_iter().collect()).unwrap();
        let out = apply(&tree, &p).unwrap();
        assert_eq!(print(&out.tree), "int main() {\n  void*** p = &(void***)0;\n  return 0;\n}\n");
    }
}
