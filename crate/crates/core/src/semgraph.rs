//! Semantic dependency graph.
//!
//! Declarations, statements and the expressions that reference declarations
//! are enrolled as graph nodes, keyed by their syntax tree id. Each node
//! carries a role set: providers define something (structs, functions,
//! variables, parameters, labels), users reference something, and return
//! types are conditioners. Edges point from user to provider.
//!
//! Associated groups tie together nodes that can only be deleted as a unit:
//! a parameter with the argument at its position in every call, and a
//! forward declaration with its definition.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::check::{analyze, Analysis, Resolved};
use crate::frontend::print_tokens;
use crate::frontend::printer::Printed;

/// Graph nodes share ids with the syntax tree nodes they stand for.
pub type SemanticNodeId = NodeId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RoleSet {
    pub provider: bool,
    pub user: bool,
    pub conditioner: bool,
}

impl RoleSet {
    pub const PROVIDER: RoleSet = RoleSet { provider: true, user: false, conditioner: false };
    pub const USER: RoleSet = RoleSet { provider: false, user: true, conditioner: false };
    pub const BOTH: RoleSet = RoleSet { provider: true, user: true, conditioner: false };
    pub const CONDITIONER: RoleSet = RoleSet { provider: false, user: false, conditioner: true };

    pub fn is_empty(&self) -> bool {
        !(self.provider || self.user || self.conditioner)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NodeKind {
    StructDecl,
    FuncFwdDecl,
    FuncDef,
    GlobalVar,
    LocalVar,
    Param,
    /// A labeled statement.
    Label,
    Statement,
    Goto,
    /// Identifier expression naming a variable, parameter or function.
    IdentUse,
    /// Call of a user function.
    Call,
    /// Argument expression of a call to a user function.
    Argument,
    /// Type reference naming a struct.
    TypeRef,
    ReturnType,
    /// Expression, type or statement synthesized by reconstruction.
    Placeholder,
}

impl NodeKind {
    /// Declaration- and statement-level kinds, the granularity at which
    /// deletion is attempted.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            NodeKind::StructDecl
                | NodeKind::FuncFwdDecl
                | NodeKind::FuncDef
                | NodeKind::GlobalVar
                | NodeKind::LocalVar
                | NodeKind::Param
                | NodeKind::Label
                | NodeKind::Statement
                | NodeKind::Goto
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticNode {
    pub id: SemanticNodeId,
    pub kind: NodeKind,
    pub roles: RoleSet,
    /// Nearest enrolled ancestor.
    pub parent: Option<SemanticNodeId>,
    /// Printed token count of the node's subtree.
    pub tokens: usize,
    /// Index of the node's first printed token.
    pub position: usize,
    pub name: Option<String>,
    /// Static type of an expression, declared type of a variable or
    /// parameter, or return type of a function.
    pub ty: Option<MicroCType>,
    /// Statement whose entire expression is this node, ignoring parentheses.
    pub owner_stmt: Option<NodeId>,
    pub placeholder: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum GroupKind {
    ParamArg,
    FwdDeclDef,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AssociatedGroup {
    pub kind: GroupKind,
    pub members: BTreeSet<SemanticNodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("program does not typecheck: {0}")]
    NotCompilable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UpdateError {
    #[error("edge {user} -> {provider} would dangle")]
    Dangling { user: SemanticNodeId, provider: SemanticNodeId },
    #[error("node {0} is not in the graph")]
    UnknownNode(SemanticNodeId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: BTreeMap<SemanticNodeId, SemanticNode>,
    edges: BTreeSet<(SemanticNodeId, SemanticNodeId)>,
    groups: Vec<AssociatedGroup>,
    /// Forward-declaration parameter ids that mirror a definition parameter.
    mirrors: BTreeMap<SemanticNodeId, Vec<NodeId>>,
}

impl DependencyGraph {
    pub fn nodes(&self) -> impl Iterator<Item = &SemanticNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: SemanticNodeId) -> Option<&SemanticNode> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: SemanticNodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (SemanticNodeId, SemanticNodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, user: SemanticNodeId, provider: SemanticNodeId) -> bool {
        self.edges.contains(&(user, provider))
    }

    pub fn groups(&self) -> &[AssociatedGroup] {
        &self.groups
    }

    pub fn providers_of(&self, user: SemanticNodeId) -> impl Iterator<Item = SemanticNodeId> + '_ {
        self.edges.range((user, NodeId(0))..=(user, NodeId(u32::MAX))).map(|&(_, p)| p)
    }

    pub fn users_of(&self, provider: SemanticNodeId) -> impl Iterator<Item = SemanticNodeId> + '_ {
        self.edges.iter().filter(move |&&(_, p)| p == provider).map(|&(u, _)| u)
    }

    pub fn groups_of(&self, id: SemanticNodeId) -> impl Iterator<Item = &AssociatedGroup> {
        self.groups.iter().filter(move |g| g.members.contains(&id))
    }

    pub fn mirrors(&self, param: SemanticNodeId) -> &[NodeId] {
        self.mirrors.get(&param).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Enrolled ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: SemanticNodeId) -> impl Iterator<Item = SemanticNodeId> + '_ {
        std::iter::successors(self.nodes.get(&id).and_then(|n| n.parent), |p| self.nodes.get(p).and_then(|n| n.parent))
    }

    /// Checks the structural invariants: edge endpoints exist and carry the
    /// right roles, and group members exist.
    pub fn check_invariants(&self) -> Result<(), String> {
        for n in self.nodes.values() {
            if n.roles.is_empty() {
                return Err(format!("node {} has no role", n.id));
            }
        }
        for &(u, p) in &self.edges {
            let (Some(un), Some(pn)) = (self.nodes.get(&u), self.nodes.get(&p)) else {
                return Err(format!("edge {u} -> {p} has a missing endpoint"));
            };
            if !un.roles.user || !pn.roles.provider {
                return Err(format!("edge {u} -> {p} violates roles"));
            }
        }
        for g in &self.groups {
            if let Some(m) = g.members.iter().find(|m| !self.nodes.contains_key(m)) {
                return Err(format!("group member {m} is not in the graph"));
            }
        }
        Ok(())
    }

    /// Graphviz rendering. Node labels are the kind plus the source byte
    /// span when known, otherwise the printed token range.
    pub fn to_dot(&self, tree: &SyntaxTree) -> String {
        let mut out = String::from("digraph dependencies {\n  node [shape=box];\n");
        for n in self.nodes.values() {
            let span = match tree.span(n.id) {
                Some(s) => format!("{}..{}", s.start, s.end),
                None => format!("tok {}..{}", n.position, n.position + n.tokens),
            };
            let name = n.name.as_deref().map(|s| format!(" {s}")).unwrap_or_default();
            let style = if n.roles.conditioner { ", style=dashed" } else { "" };
            let _ = writeln!(out, "  {} [label=\"{}{} [{}]\"{}];", n.id, n.kind, name, span, style);
        }
        for &(u, p) in &self.edges {
            let _ = writeln!(out, "  {u} -> {p};");
        }
        for (i, g) in self.groups.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{i} {{\n    label=\"{:?}\";\n    style=dotted;", g.kind);
            for m in &g.members {
                let _ = writeln!(out, "    {m};");
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the dependency graph of a compilable tree.
pub fn build_graph(tree: &SyntaxTree) -> Result<DependencyGraph, GraphError> {
    let analysis = analyze(tree);
    if let Some(e) = analysis.errors().next() {
        return Err(GraphError::NotCompilable(e.to_string()));
    }
    let mut b = Builder { tree, analysis: &analysis, graph: DependencyGraph::default(), calls: Vec::new() };
    for item in &tree.program.items {
        b.item(item);
    }
    b.finish();
    let mut graph = b.graph;
    refresh(&mut graph, tree, &analysis);
    Ok(graph)
}

/// Reduction candidates: declaration- and statement-level nodes with a
/// provider or user role, largest first, ties by position.
///
/// Forward declarations and arguments are left out since deleting the
/// definition or the parameter covers them through their group. Placeholders
/// are left out as well.
pub fn classify_semantic_nodes(graph: &DependencyGraph) -> Vec<SemanticNodeId> {
    let mut out: Vec<&SemanticNode> = graph
        .nodes
        .values()
        .filter(|n| n.kind.is_structural() && n.kind != NodeKind::FuncFwdDecl)
        .filter(|n| !n.placeholder && (n.roles.provider || n.roles.user))
        .collect();
    out.sort_by_key(|n| (std::cmp::Reverse(n.tokens), n.position));
    out.into_iter().map(|n| n.id).collect()
}

/// Updates `graph` after a reconstruction has been applied, yielding `tree`.
///
/// `deleted` lists the nodes removed on purpose. `placeholders` maps each
/// rewritten user to the node that replaced it. Nodes that vanished from the
/// tree as part of a removed or replaced subtree are dropped too. Each
/// placeholder inherits the edges of the user it replaced whose provider
/// survives, and takes its place in associated groups.
pub fn update_graph(
    graph: &DependencyGraph,
    tree: &SyntaxTree,
    deleted: &BTreeSet<SemanticNodeId>,
    placeholders: &BTreeMap<SemanticNodeId, NodeId>,
) -> Result<DependencyGraph, UpdateError> {
    update(graph, tree, deleted, placeholders, false)
}

/// Like [`update_graph`] for deletions made without reconstruction: edges
/// left dangling are dropped instead of reported.
pub fn prune_graph(graph: &DependencyGraph, tree: &SyntaxTree, deleted: &BTreeSet<SemanticNodeId>) -> DependencyGraph {
    update(graph, tree, deleted, &BTreeMap::new(), true).expect("lenient update cannot fail")
}

fn update(
    graph: &DependencyGraph,
    tree: &SyntaxTree,
    deleted: &BTreeSet<SemanticNodeId>,
    placeholders: &BTreeMap<SemanticNodeId, NodeId>,
    lenient: bool,
) -> Result<DependencyGraph, UpdateError> {
    if let Some(&id) = deleted.iter().find(|id| !graph.nodes.contains_key(id)) {
        return Err(UpdateError::UnknownNode(id));
    }
    let present = tree_ids(tree);
    let mut out = graph.clone();
    out.nodes.retain(|id, _| !deleted.contains(id) && present.contains(id));

    let lookup = expr_index(tree);
    for (&old, &new) in placeholders {
        let Some(old_node) = graph.nodes.get(&old) else { return Err(UpdateError::UnknownNode(old)) };
        let (kind, roles) = match old_node.kind {
            NodeKind::Argument => (NodeKind::Argument, RoleSet::USER),
            NodeKind::ReturnType => (NodeKind::ReturnType, RoleSet::CONDITIONER),
            _ => (NodeKind::Placeholder, RoleSet::USER),
        };
        out.nodes.insert(new, blank_node(new, kind, roles, None, true));
        for p in graph.providers_of(old).collect::<Vec<_>>() {
            if out.nodes.contains_key(&p) {
                out.edges.insert((new, p));
            }
        }
        for g in &mut out.groups {
            if g.members.remove(&old) {
                g.members.insert(new);
            }
        }
        // Struct references inside a synthesized cast.
        if let Some(expr) = lookup.get(&new) {
            let structs: HashMap<String, NodeId> = out
                .nodes
                .values()
                .filter(|n| n.kind == NodeKind::StructDecl)
                .filter_map(|n| Some((n.name.clone()?, n.id)))
                .collect();
            let mut refs = Vec::new();
            collect_struct_refs(expr, &mut refs);
            for (id, name) in refs {
                if let Some(&s) = structs.get(&name) {
                    out.nodes.insert(id, blank_node(id, NodeKind::TypeRef, RoleSet::USER, None, false));
                    out.edges.insert((id, s));
                }
            }
        }
    }

    let mut dangling = None;
    out.edges.retain(|&(u, p)| {
        let keep_u = out.nodes.contains_key(&u);
        let keep_p = out.nodes.contains_key(&p);
        if keep_u && !keep_p && dangling.is_none() && !lenient {
            dangling = Some((u, p));
        }
        keep_u && keep_p
    });
    if let Some((user, provider)) = dangling {
        return Err(UpdateError::Dangling { user, provider });
    }

    for g in &mut out.groups {
        g.members.retain(|m| out.nodes.contains_key(m));
    }
    out.groups.retain(|g| match g.kind {
        GroupKind::ParamArg => g.members.iter().any(|m| out.nodes[m].kind == NodeKind::Param),
        GroupKind::FwdDeclDef => g.members.len() == 2,
    });
    out.groups.sort();
    out.mirrors.retain(|p, _| out.nodes.contains_key(p));
    for m in out.mirrors.values_mut() {
        m.retain(|id| present.contains(id));
    }
    out.mirrors.retain(|_, m| !m.is_empty());

    refresh(&mut out, tree, &analyze(tree));
    Ok(out)
}

fn blank_node(id: NodeId, kind: NodeKind, roles: RoleSet, name: Option<String>, placeholder: bool) -> SemanticNode {
    SemanticNode {
        id,
        kind,
        roles,
        parent: None,
        tokens: 0,
        position: 0,
        name,
        ty: None,
        owner_stmt: None,
        placeholder,
    }
}

fn tree_ids(tree: &SyntaxTree) -> BTreeSet<NodeId> {
    let mut ids = BTreeSet::new();
    tree.program.visit_ids(&mut |id| {
        ids.insert(id);
    });
    ids
}

fn collect_struct_refs(e: &Expr, out: &mut Vec<(NodeId, String)>) {
    match &e.kind {
        ExprKind::Cast { ty, operand } => {
            if let Some(name) = ty.ty.struct_name() {
                out.push((ty.id, name.to_string()));
            }
            collect_struct_refs(operand, out);
        }
        ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) => collect_struct_refs(operand, out),
        ExprKind::Binary { lhs, rhs, .. } => {
            collect_struct_refs(lhs, out);
            collect_struct_refs(rhs, out);
        }
        ExprKind::Call { args, .. } => args.iter().for_each(|a| collect_struct_refs(a, out)),
        ExprKind::Int(_) | ExprKind::Ident(_) => {}
    }
}

/// Every expression in the tree by id.
fn expr_index(tree: &SyntaxTree) -> HashMap<NodeId, &Expr> {
    fn expr<'a>(e: &'a Expr, out: &mut HashMap<NodeId, &'a Expr>) {
        out.insert(e.id, e);
        match &e.kind {
            ExprKind::Call { args, .. } => args.iter().for_each(|a| expr(a, out)),
            ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) | ExprKind::Cast { operand, .. } => {
                expr(operand, out)
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                expr(lhs, out);
                expr(rhs, out);
            }
            ExprKind::Int(_) | ExprKind::Ident(_) => {}
        }
    }
    fn stmt<'a>(s: &'a Stmt, out: &mut HashMap<NodeId, &'a Expr>) {
        match &s.kind {
            StmtKind::Var(v) => v.init.iter().for_each(|e| expr(e, out)),
            StmtKind::Expr(e) => expr(e, out),
            StmtKind::Return(v) => v.iter().for_each(|e| expr(e, out)),
            StmtKind::If { cond, then_branch, else_branch } => {
                expr(cond, out);
                stmt(then_branch, out);
                else_branch.iter().for_each(|e| stmt(e, out));
            }
            StmtKind::While { cond, body } => {
                expr(cond, out);
                stmt(body, out);
            }
            StmtKind::Labeled { body, .. } => stmt(body, out),
            StmtKind::Block(b) => b.stmts.iter().for_each(|s| stmt(s, out)),
            StmtKind::Goto(_) | StmtKind::Empty => {}
        }
    }
    let mut out = HashMap::new();
    for item in &tree.program.items {
        match item {
            Item::Var(v) => v.init.iter().for_each(|e| expr(e, &mut out)),
            Item::FuncDef(f) => f.body.stmts.iter().for_each(|s| stmt(s, &mut out)),
            Item::Struct(_) | Item::FuncDecl(_) => {}
        }
    }
    out
}

struct Builder<'a> {
    tree: &'a SyntaxTree,
    analysis: &'a Analysis,
    graph: DependencyGraph,
    /// Calls to user functions with their argument ids.
    calls: Vec<(String, Vec<NodeId>)>,
}

impl Builder<'_> {
    fn enroll(&mut self, id: NodeId, kind: NodeKind, roles: RoleSet, name: Option<&str>) {
        let placeholder = self.tree.is_placeholder(id);
        let kind = if placeholder && !matches!(kind, NodeKind::Argument | NodeKind::ReturnType | NodeKind::TypeRef) {
            NodeKind::Placeholder
        } else {
            kind
        };
        self.graph.nodes.insert(id, blank_node(id, kind, roles, name.map(str::to_string), placeholder));
    }

    fn edge(&mut self, user: NodeId, provider: Option<NodeId>) {
        if let Some(p) = provider {
            self.graph.edges.insert((user, p));
        }
    }

    fn def_of(&self, name: &str) -> Option<NodeId> {
        self.analysis.functions.get(name).and_then(|f| f.def)
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Struct(s) => {
                self.enroll(s.id, NodeKind::StructDecl, RoleSet::PROVIDER, Some(&s.name));
                for f in &s.fields {
                    self.type_ref(&f.ty);
                }
            }
            Item::FuncDecl(d) => {
                self.enroll(d.id, NodeKind::FuncFwdDecl, RoleSet::USER, Some(&d.sig.name));
                let def = self.def_of(&d.sig.name);
                self.edge(d.id, def);
                self.return_type(&d.sig.ret);
                for p in &d.sig.params {
                    self.type_ref(&p.ty);
                }
                if let Some(def) = def {
                    self.graph.groups.push(AssociatedGroup {
                        kind: GroupKind::FwdDeclDef,
                        members: [d.id, def].into_iter().collect(),
                    });
                }
            }
            Item::FuncDef(f) => {
                self.enroll(f.id, NodeKind::FuncDef, RoleSet::PROVIDER, Some(&f.sig.name));
                self.return_type(&f.sig.ret);
                for p in &f.sig.params {
                    self.enroll(p.id, NodeKind::Param, RoleSet::BOTH, Some(&p.name));
                    self.type_ref(&p.ty);
                }
                for s in &f.body.stmts {
                    self.stmt(s);
                }
            }
            Item::Var(v) => {
                self.enroll(v.id, NodeKind::GlobalVar, RoleSet::PROVIDER, Some(&v.name));
                self.type_ref(&v.ty);
                if let Some(e) = &v.init {
                    self.expr(e, false);
                }
            }
        }
    }

    fn return_type(&mut self, t: &TypeRef) {
        let names_struct = self.analysis.struct_refs.get(&t.id).copied();
        let roles = RoleSet { user: names_struct.is_some(), ..RoleSet::CONDITIONER };
        self.enroll(t.id, NodeKind::ReturnType, roles, None);
        self.edge(t.id, names_struct);
    }

    fn type_ref(&mut self, t: &TypeRef) {
        if let Some(&s) = self.analysis.struct_refs.get(&t.id) {
            self.enroll(t.id, NodeKind::TypeRef, RoleSet::USER, None);
            self.edge(t.id, Some(s));
        } else if self.tree.is_placeholder(t.id) {
            self.enroll(t.id, NodeKind::Placeholder, RoleSet::USER, None);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Var(v) => {
                self.enroll(s.id, NodeKind::LocalVar, RoleSet::BOTH, Some(&v.name));
                self.type_ref(&v.ty);
                if let Some(e) = &v.init {
                    self.expr(e, false);
                }
            }
            StmtKind::Labeled { label, body } => {
                self.enroll(s.id, NodeKind::Label, RoleSet::BOTH, Some(label));
                self.stmt(body);
            }
            StmtKind::Goto(label) => {
                self.enroll(s.id, NodeKind::Goto, RoleSet::USER, Some(label));
                let target = self.analysis.gotos.get(&s.id).copied();
                self.edge(s.id, target);
            }
            kind => {
                self.enroll(s.id, NodeKind::Statement, RoleSet::USER, None);
                match kind {
                    StmtKind::Expr(e) => self.expr(e, false),
                    StmtKind::Return(v) => v.iter().for_each(|e| self.expr(e, false)),
                    StmtKind::If { cond, then_branch, else_branch } => {
                        self.expr(cond, false);
                        self.stmt(then_branch);
                        if let Some(e) = else_branch {
                            self.stmt(e);
                        }
                    }
                    StmtKind::While { cond, body } => {
                        self.expr(cond, false);
                        self.stmt(body);
                    }
                    StmtKind::Block(b) => b.stmts.iter().for_each(|s| self.stmt(s)),
                    _ => {}
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr, is_arg: bool) {
        let call = self.analysis.calls.get(&e.id).cloned();
        let ident = self.analysis.idents.get(&e.id).cloned();
        let kind = if is_arg {
            Some(NodeKind::Argument)
        } else if call.is_some() {
            Some(NodeKind::Call)
        } else if ident.is_some() {
            Some(NodeKind::IdentUse)
        } else if self.tree.is_placeholder(e.id) {
            Some(NodeKind::Placeholder)
        } else {
            None
        };
        if let Some(kind) = kind {
            let name = match &e.kind {
                ExprKind::Ident(n) | ExprKind::Call { callee: n, .. } => Some(n.as_str()),
                _ => None,
            };
            self.enroll(e.id, kind, RoleSet::USER, name);
        }
        if let Some(name) = &call {
            let def = self.def_of(name);
            self.edge(e.id, def);
        }
        match ident {
            Some(Resolved::Var(decl)) => self.edge(e.id, Some(decl)),
            Some(Resolved::Function(name)) => {
                let def = self.def_of(&name);
                self.edge(e.id, def);
            }
            None => {}
        }
        match &e.kind {
            ExprKind::Call { args, callee } => {
                let user_call = call.is_some();
                if user_call {
                    self.calls.push((callee.clone(), args.iter().map(|a| a.id).collect()));
                }
                for a in args {
                    self.expr(a, user_call);
                }
            }
            ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) => self.expr(operand, false),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs, false);
                self.expr(rhs, false);
            }
            ExprKind::Cast { ty, operand } => {
                self.type_ref(ty);
                self.expr(operand, false);
            }
            ExprKind::Int(_) | ExprKind::Ident(_) => {}
        }
    }

    /// Parameter/argument edges and groups, and forward-declaration mirrors.
    fn finish(&mut self) {
        let defs: HashMap<&str, &FuncDef> = self.tree.function_defs().map(|f| (f.sig.name.as_str(), f)).collect();
        let mut groups: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for f in defs.values() {
            for p in &f.sig.params {
                groups.entry(p.id).or_default().insert(p.id);
            }
        }
        for (callee, args) in std::mem::take(&mut self.calls) {
            let Some(f) = defs.get(callee.as_str()) else { continue };
            for (p, a) in f.sig.params.iter().zip(args) {
                self.graph.edges.insert((a, p.id));
                groups.entry(p.id).or_default().insert(a);
            }
        }
        self.graph
            .groups
            .extend(groups.into_values().map(|members| AssociatedGroup { kind: GroupKind::ParamArg, members }));
        self.graph.groups.sort();

        for item in &self.tree.program.items {
            let Item::FuncDecl(d) = item else { continue };
            let Some(f) = defs.get(d.sig.name.as_str()) else { continue };
            if f.sig.params.len() != d.sig.params.len() {
                continue;
            }
            for (p, m) in f.sig.params.iter().zip(&d.sig.params) {
                self.graph.mirrors.entry(p.id).or_default().push(m.id);
            }
        }
    }
}

/// Recomputes the tree-derived attributes of every node: parent, token
/// weight, position, type and owning statement.
fn refresh(graph: &mut DependencyGraph, tree: &SyntaxTree, analysis: &Analysis) {
    let printed = print_tokens(tree);
    let mut r = Refresher { graph, printed: &printed, analysis, stack: Vec::new() };
    for item in &tree.program.items {
        r.item(item);
    }
}

struct Refresher<'a> {
    graph: &'a mut DependencyGraph,
    printed: &'a Printed,
    analysis: &'a Analysis,
    stack: Vec<NodeId>,
}

impl Refresher<'_> {
    /// Updates `id` if enrolled; returns whether it was pushed on the stack.
    fn visit(&mut self, id: NodeId, ty: Option<MicroCType>) -> bool {
        let parent = self.stack.last().copied();
        let Some(n) = self.graph.nodes.get_mut(&id) else { return false };
        n.parent = parent;
        let range = self.printed.range(id).unwrap_or(0..0);
        n.tokens = range.len();
        n.position = range.start;
        n.ty = ty;
        n.owner_stmt = None;
        self.stack.push(id);
        true
    }

    fn leave(&mut self, pushed: bool) {
        if pushed {
            self.stack.pop();
        }
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Struct(s) => {
                let pushed = self.visit(s.id, None);
                for f in &s.fields {
                    self.type_ref(&f.ty);
                }
                self.leave(pushed);
            }
            Item::FuncDecl(d) => {
                let pushed = self.visit(d.id, Some(d.sig.ret.ty.clone()));
                self.sig(&d.sig, false);
                self.leave(pushed);
            }
            Item::FuncDef(f) => {
                let pushed = self.visit(f.id, Some(f.sig.ret.ty.clone()));
                self.sig(&f.sig, true);
                for s in &f.body.stmts {
                    self.stmt(s);
                }
                self.leave(pushed);
            }
            Item::Var(v) => {
                let pushed = self.visit(v.id, self.analysis.decl_types.get(&v.id).cloned());
                self.type_ref(&v.ty);
                if let Some(e) = &v.init {
                    self.expr(e);
                }
                self.leave(pushed);
            }
        }
    }

    fn sig(&mut self, sig: &FuncSig, def: bool) {
        self.type_ref(&sig.ret);
        for p in &sig.params {
            let pushed = if def { self.visit(p.id, self.analysis.decl_types.get(&p.id).cloned()) } else { false };
            self.type_ref(&p.ty);
            self.leave(pushed);
        }
    }

    fn type_ref(&mut self, t: &TypeRef) {
        let pushed = self.visit(t.id, Some(t.ty.clone()));
        self.leave(pushed);
    }

    fn stmt(&mut self, s: &Stmt) {
        let pushed = self.visit(s.id, self.analysis.decl_types.get(&s.id).cloned());
        match &s.kind {
            StmtKind::Var(v) => {
                self.type_ref(&v.ty);
                if let Some(e) = &v.init {
                    self.expr(e);
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e);
                let mut top = e;
                while let ExprKind::Paren(inner) = &top.kind {
                    top = inner;
                }
                if let Some(n) = self.graph.nodes.get_mut(&top.id) {
                    n.owner_stmt = Some(s.id);
                }
            }
            StmtKind::Return(v) => v.iter().for_each(|e| self.expr(e)),
            StmtKind::If { cond, then_branch, else_branch } => {
                self.expr(cond);
                self.stmt(then_branch);
                if let Some(e) = else_branch {
                    self.stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.stmt(body);
            }
            StmtKind::Labeled { body, .. } => self.stmt(body),
            StmtKind::Block(b) => b.stmts.iter().for_each(|s| self.stmt(s)),
            StmtKind::Goto(_) | StmtKind::Empty => {}
        }
        self.leave(pushed);
    }

    fn expr(&mut self, e: &Expr) {
        let pushed = self.visit(e.id, self.analysis.expr_types.get(&e.id).cloned());
        match &e.kind {
            ExprKind::Call { args, .. } => args.iter().for_each(|a| self.expr(a)),
            ExprKind::Unary { operand, .. } | ExprKind::Paren(operand) => self.expr(operand),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Cast { ty, operand } => {
                self.type_ref(ty);
                self.expr(operand);
            }
            ExprKind::Int(_) | ExprKind::Ident(_) => {}
        }
        self.leave(pushed);
    }
}
