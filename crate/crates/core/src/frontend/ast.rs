//! Syntax tree for MicroC compilation units.
//!
//! Every node that a reduction stage may address carries a [`NodeId`]. Ids are
//! assigned in source order by the parser and are never reused within one
//! tree lineage: edits keep the ids of surviving nodes and draw fresh ids for
//! anything they synthesize.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::lexer::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    Int,
    Void,
    Struct(String),
}

/// A MicroC type: a base plus a pointer depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MicroCType {
    pub base: BaseType,
    pub pointer_depth: u32,
}

impl MicroCType {
    pub const INT: MicroCType = MicroCType { base: BaseType::Int, pointer_depth: 0 };
    pub const VOID: MicroCType = MicroCType { base: BaseType::Void, pointer_depth: 0 };

    pub fn new(base: BaseType, pointer_depth: u32) -> Self {
        Self { base, pointer_depth }
    }

    /// `void***`, the stand-in for deleted struct types and function values.
    pub fn void_ptr3() -> Self {
        Self::new(BaseType::Void, 3)
    }

    pub fn is_pointer(&self) -> bool {
        self.pointer_depth > 0
    }

    pub fn is_bare_void(&self) -> bool {
        self.base == BaseType::Void && self.pointer_depth == 0
    }

    pub fn struct_name(&self) -> Option<&str> {
        match &self.base {
            BaseType::Struct(name) => Some(name),
            _ => None,
        }
    }

    pub fn pointer_to(&self) -> Self {
        Self::new(self.base.clone(), self.pointer_depth + 1)
    }
}

impl fmt::Display for MicroCType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            BaseType::Int => f.write_str("int")?,
            BaseType::Void => f.write_str("void")?,
            BaseType::Struct(name) => write!(f, "struct {name}")?,
        }
        for _ in 0..self.pointer_depth {
            f.write_str("*")?;
        }
        Ok(())
    }
}

/// A type as written in the source. Struct references are semantic users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRef {
    pub id: NodeId,
    pub ty: MicroCType,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Struct(StructDecl),
    FuncDecl(FuncDecl),
    FuncDef(FuncDef),
    Var(VarDecl),
}

impl Item {
    pub fn id(&self) -> NodeId {
        match self {
            Item::Struct(s) => s.id,
            Item::FuncDecl(f) => f.id,
            Item::FuncDef(f) => f.id,
            Item::Var(v) => v.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructDecl {
    pub id: NodeId,
    pub name: String,
    pub fields: Vec<VarDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncSig {
    pub ret: TypeRef,
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDecl {
    pub id: NodeId,
    pub sig: FuncSig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncDef {
    pub id: NodeId,
    pub sig: FuncSig,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub id: NodeId,
    pub ty: TypeRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub id: NodeId,
    pub ty: TypeRef,
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: NodeId,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: NodeId,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Var(VarDecl),
    Expr(Expr),
    Return(Option<Expr>),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    Goto(String),
    Labeled {
        label: String,
        body: Box<Stmt>,
    },
    Block(Block),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    AddrOf,
    Deref,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::AddrOf => "&",
            UnaryOp::Deref => "*",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Eq,
    Assign,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Eq => "==",
            BinOp::Assign => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub id: NodeId,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Ident(String),
    Call { callee: String, args: Vec<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Cast { ty: TypeRef, operand: Box<Expr> },
    Paren(Box<Expr>),
}

/// A parsed compilation unit plus the bookkeeping the reducers need.
#[derive(Debug, Clone, Default)]
pub struct SyntaxTree {
    pub program: Program,
    next_id: u32,
    /// Nodes synthesized by dependency reconstruction.
    placeholders: BTreeSet<NodeId>,
    /// Byte spans in the text the tree was parsed from.
    spans: HashMap<NodeId, Span>,
}

impl PartialEq for SyntaxTree {
    fn eq(&self, other: &Self) -> bool {
        self.program == other.program
    }
}

impl SyntaxTree {
    pub(crate) fn from_parts(program: Program, next_id: u32, spans: HashMap<NodeId, Span>) -> Self {
        Self { program, next_id, placeholders: BTreeSet::new(), spans }
    }

    pub fn alloc_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn span(&self, id: NodeId) -> Option<Span> {
        self.spans.get(&id).cloned()
    }

    pub fn is_placeholder(&self, id: NodeId) -> bool {
        self.placeholders.contains(&id)
    }

    pub fn placeholders(&self) -> &BTreeSet<NodeId> {
        &self.placeholders
    }

    pub fn mark_placeholder(&mut self, id: NodeId) {
        self.placeholders.insert(id);
    }

    /// True when the two trees have the same shape, ignoring node ids.
    pub fn same_shape(&self, other: &SyntaxTree) -> bool {
        let mut a = self.program.clone();
        let mut b = other.program.clone();
        a.visit_ids_mut(&mut |id| *id = NodeId(0));
        b.visit_ids_mut(&mut |id| *id = NodeId(0));
        a == b
    }

    pub fn contains(&self, id: NodeId) -> bool {
        let mut found = false;
        self.program.visit_ids(&mut |n| found |= n == id);
        found
    }

    pub fn item(&self, id: NodeId) -> Option<&Item> {
        self.program.items.iter().find(|i| i.id() == id)
    }

    pub fn function_defs(&self) -> impl Iterator<Item = &FuncDef> {
        self.program.items.iter().filter_map(|i| match i {
            Item::FuncDef(f) => Some(f),
            _ => None,
        })
    }

    /// Returns a copy with `edit` applied. Synthesized filler statements are
    /// recorded as placeholders.
    pub fn edited(&self, edit: &TreeEdit) -> SyntaxTree {
        let mut out = self.clone();
        let mut fillers = Vec::new();
        {
            let mut ctx = EditCtx { edit, next_id: &mut out.next_id, fillers: &mut fillers };
            ctx.program(&mut out.program);
        }
        out.placeholders.extend(fillers);
        let replaced = edit.replace_expr.values().map(|e| e.id).chain(edit.replace_type.values().map(|t| t.id));
        for id in replaced.chain(edit.empty_stmt.values().copied()) {
            out.placeholders.insert(id);
        }
        out
    }
}

/// A batch of structural edits, keyed by node id.
///
/// Deleting a node removes it from whatever list holds it. Statements in a
/// mandatory position (an `if` or `while` body, a label target) become `;`.
/// Deleting an initializer, return value, or `else` branch drops the optional
/// part.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeEdit {
    pub delete: BTreeSet<NodeId>,
    pub replace_expr: BTreeMap<NodeId, Expr>,
    pub replace_type: BTreeMap<NodeId, TypeRef>,
    /// Variable declarations whose initializer should be dropped.
    pub drop_init: BTreeSet<NodeId>,
    /// `if` statements whose `else` branch should be dropped.
    pub drop_else: BTreeSet<NodeId>,
    /// `return` statements whose value should be dropped.
    pub drop_return_value: BTreeSet<NodeId>,
    /// Statements to replace by `;`, mapped to the id of the new statement.
    pub empty_stmt: BTreeMap<NodeId, NodeId>,
}

impl TreeEdit {
    pub fn is_empty(&self) -> bool {
        self.delete.is_empty()
            && self.replace_expr.is_empty()
            && self.replace_type.is_empty()
            && self.drop_init.is_empty()
            && self.drop_else.is_empty()
            && self.drop_return_value.is_empty()
            && self.empty_stmt.is_empty()
    }
}

struct EditCtx<'a> {
    edit: &'a TreeEdit,
    next_id: &'a mut u32,
    fillers: &'a mut Vec<NodeId>,
}

impl EditCtx<'_> {
    fn program(&mut self, program: &mut Program) {
        program.items.retain(|i| !self.edit.delete.contains(&i.id()));
        for item in &mut program.items {
            match item {
                Item::Struct(s) => {
                    s.fields.retain(|f| !self.edit.delete.contains(&f.id));
                    for field in &mut s.fields {
                        self.var(field);
                    }
                }
                Item::FuncDecl(f) => self.sig(&mut f.sig),
                Item::FuncDef(f) => {
                    self.sig(&mut f.sig);
                    self.block(&mut f.body);
                }
                Item::Var(v) => self.var(v),
            }
        }
    }

    fn sig(&mut self, sig: &mut FuncSig) {
        self.type_ref(&mut sig.ret);
        sig.params.retain(|p| !self.edit.delete.contains(&p.id));
        for p in &mut sig.params {
            self.type_ref(&mut p.ty);
        }
    }

    fn type_ref(&mut self, t: &mut TypeRef) {
        if let Some(new) = self.edit.replace_type.get(&t.id) {
            *t = new.clone();
        }
    }

    fn var(&mut self, v: &mut VarDecl) {
        self.type_ref(&mut v.ty);
        if self.edit.drop_init.contains(&v.id) {
            v.init = None;
        }
        if v.init.as_ref().is_some_and(|e| self.edit.delete.contains(&e.id)) {
            v.init = None;
        }
        if let Some(init) = &mut v.init {
            self.expr(init);
        }
    }

    fn block(&mut self, b: &mut Block) {
        b.stmts.retain(|s| !self.edit.delete.contains(&s.id));
        for s in &mut b.stmts {
            self.stmt(s);
        }
    }

    fn boxed_stmt(&mut self, s: &mut Box<Stmt>) {
        if self.edit.delete.contains(&s.id) {
            let id = NodeId(*self.next_id);
            *self.next_id += 1;
            self.fillers.push(id);
            **s = Stmt { id, kind: StmtKind::Empty };
        } else {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let sid = s.id;
        if let Some(&id) = self.edit.empty_stmt.get(&sid) {
            *s = Stmt { id, kind: StmtKind::Empty };
            return;
        }
        match &mut s.kind {
            StmtKind::Var(v) => self.var(v),
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Return(value) => {
                if self.edit.drop_return_value.contains(&sid)
                    || value.as_ref().is_some_and(|e| self.edit.delete.contains(&e.id))
                {
                    *value = None;
                }
                if let Some(e) = value {
                    self.expr(e);
                }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.expr(cond);
                self.boxed_stmt(then_branch);
                if self.edit.drop_else.contains(&sid)
                    || else_branch.as_ref().is_some_and(|e| self.edit.delete.contains(&e.id))
                {
                    *else_branch = None;
                }
                if let Some(e) = else_branch {
                    self.stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.boxed_stmt(body);
            }
            StmtKind::Labeled { body, .. } => self.boxed_stmt(body),
            StmtKind::Block(b) => self.block(b),
            StmtKind::Goto(_) | StmtKind::Empty => {}
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        if let Some(new) = self.edit.replace_expr.get(&e.id) {
            *e = new.clone();
            return;
        }
        match &mut e.kind {
            ExprKind::Int(_) | ExprKind::Ident(_) => {}
            ExprKind::Call { args, .. } => {
                args.retain(|a| !self.edit.delete.contains(&a.id));
                for a in args {
                    self.expr(a);
                }
            }
            ExprKind::Unary { operand, .. } => self.expr(operand),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Cast { ty, operand } => {
                self.type_ref(ty);
                self.expr(operand);
            }
            ExprKind::Paren(inner) => self.expr(inner),
        }
    }
}

impl Program {
    /// Calls `f` on every node id in source order.
    pub fn visit_ids(&self, f: &mut dyn FnMut(NodeId)) {
        let mut p = self.clone();
        p.visit_ids_mut(&mut |id| f(*id));
    }

    pub fn visit_ids_mut(&mut self, f: &mut dyn FnMut(&mut NodeId)) {
        for item in &mut self.items {
            match item {
                Item::Struct(s) => {
                    f(&mut s.id);
                    for field in &mut s.fields {
                        var_ids(field, f);
                    }
                }
                Item::FuncDecl(d) => {
                    f(&mut d.id);
                    sig_ids(&mut d.sig, f);
                }
                Item::FuncDef(d) => {
                    f(&mut d.id);
                    sig_ids(&mut d.sig, f);
                    block_ids(&mut d.body, f);
                }
                Item::Var(v) => var_ids(v, f),
            }
        }
    }
}

fn sig_ids(sig: &mut FuncSig, f: &mut dyn FnMut(&mut NodeId)) {
    f(&mut sig.ret.id);
    for p in &mut sig.params {
        f(&mut p.id);
        f(&mut p.ty.id);
    }
}

fn var_ids(v: &mut VarDecl, f: &mut dyn FnMut(&mut NodeId)) {
    f(&mut v.id);
    f(&mut v.ty.id);
    if let Some(e) = &mut v.init {
        expr_ids(e, f);
    }
}

fn block_ids(b: &mut Block, f: &mut dyn FnMut(&mut NodeId)) {
    f(&mut b.id);
    for s in &mut b.stmts {
        stmt_ids(s, f);
    }
}

fn stmt_ids(s: &mut Stmt, f: &mut dyn FnMut(&mut NodeId)) {
    f(&mut s.id);
    match &mut s.kind {
        StmtKind::Var(v) => var_ids(v, f),
        StmtKind::Expr(e) => expr_ids(e, f),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                expr_ids(e, f);
            }
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            expr_ids(cond, f);
            stmt_ids(then_branch, f);
            if let Some(e) = else_branch {
                stmt_ids(e, f);
            }
        }
        StmtKind::While { cond, body } => {
            expr_ids(cond, f);
            stmt_ids(body, f);
        }
        StmtKind::Labeled { body, .. } => stmt_ids(body, f),
        StmtKind::Block(b) => block_ids(b, f),
        StmtKind::Goto(_) | StmtKind::Empty => {}
    }
}

fn expr_ids(e: &mut Expr, f: &mut dyn FnMut(&mut NodeId)) {
    f(&mut e.id);
    match &mut e.kind {
        ExprKind::Int(_) | ExprKind::Ident(_) => {}
        ExprKind::Call { args, .. } => {
            for a in args {
                expr_ids(a, f);
            }
        }
        ExprKind::Unary { operand, .. } => expr_ids(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            expr_ids(lhs, f);
            expr_ids(rhs, f);
        }
        ExprKind::Cast { ty, operand } => {
            f(&mut ty.id);
            expr_ids(operand, f);
        }
        ExprKind::Paren(inner) => expr_ids(inner, f),
    }
}

/// True if `stmt` ends in an `if` without `else`, so that an `else` printed
/// after it would bind to that inner `if`.
pub fn ends_in_open_if(stmt: &Stmt) -> bool {
    match &stmt.kind {
        StmtKind::If { else_branch: None, .. } => true,
        StmtKind::If { else_branch: Some(e), .. } => ends_in_open_if(e),
        StmtKind::While { body, .. } | StmtKind::Labeled { body, .. } => ends_in_open_if(body),
        _ => false,
    }
}

/// Checks that printing the tree and parsing it back yields the same shape.
/// Only the dangling-`else` case can break this for trees built by edits.
pub fn else_binding_is_unambiguous(program: &Program) -> bool {
    fn stmt_ok(s: &Stmt) -> bool {
        match &s.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                if else_branch.is_some() && ends_in_open_if(then_branch) {
                    return false;
                }
                stmt_ok(then_branch) && else_branch.as_deref().is_none_or(stmt_ok)
            }
            StmtKind::While { body, .. } | StmtKind::Labeled { body, .. } => stmt_ok(body),
            StmtKind::Block(b) => b.stmts.iter().all(stmt_ok),
            _ => true,
        }
    }
    program.items.iter().all(|item| match item {
        Item::FuncDef(f) => f.body.stmts.iter().all(stmt_ok),
        _ => true,
    })
}
