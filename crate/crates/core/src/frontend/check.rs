//! Name resolution and type checking.
//!
//! A tree is *compilable* when [`typecheck`] reports no errors. The same pass
//! records what every identifier, call, struct reference and `goto` resolves
//! to; the dependency graph is built from those tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::lexer::Span;

pub const BUILTIN_PRINT: &str = "print";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Option<Span>,
    pub node: Option<NodeId>,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.span {
            Some(s) => write!(f, "{sev} at {}..{}: {}", s.start, s.end, self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// What an identifier expression refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolved {
    /// A variable or parameter, by the id of its declaring node (the item for
    /// globals, the statement for locals, the parameter for parameters).
    Var(NodeId),
    /// A function used as a value.
    Function(String),
}

#[derive(Debug, Clone, Default)]
pub struct FunctionInfo {
    pub ret: Option<MicroCType>,
    pub params: Vec<MicroCType>,
    pub def: Option<NodeId>,
    pub decls: Vec<NodeId>,
}

/// Resolution tables and diagnostics for one tree.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub diagnostics: Vec<Diagnostic>,
    /// Identifier expressions (not callees).
    pub idents: BTreeMap<NodeId, Resolved>,
    /// Call expressions to user functions, by callee name.
    pub calls: BTreeMap<NodeId, String>,
    /// Type references that name a struct, mapped to the struct declaration.
    pub struct_refs: BTreeMap<NodeId, NodeId>,
    /// `goto` statements mapped to their labeled statement.
    pub gotos: BTreeMap<NodeId, NodeId>,
    /// Declared type of every variable and parameter declaration.
    pub decl_types: BTreeMap<NodeId, MicroCType>,
    pub functions: BTreeMap<String, FunctionInfo>,
    /// Static type of every expression that typed successfully.
    pub expr_types: BTreeMap<NodeId, MicroCType>,
}

impl Analysis {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn is_compilable(&self) -> bool {
        self.errors().next().is_none()
    }
}

/// Returns all diagnostics for `tree`. An empty error list means compilable.
pub fn typecheck(tree: &SyntaxTree) -> Vec<Diagnostic> {
    analyze(tree).diagnostics
}

pub fn analyze(tree: &SyntaxTree) -> Analysis {
    let mut cx = Checker {
        tree,
        out: Analysis::default(),
        scopes: vec![HashMap::new()],
        structs: HashMap::new(),
        labels: HashMap::new(),
        current_ret: None,
    };
    for item in &tree.program.items {
        cx.item(item);
    }
    for (name, info) in &cx.out.functions {
        if info.def.is_none() {
            for &d in &info.decls {
                let span = tree.span(d);
                cx.out.diagnostics.push(Diagnostic {
                    severity: Severity::Error,
                    message: format!("function `{name}` is declared but never defined"),
                    span,
                    node: Some(d),
                });
            }
        }
    }
    cx.out
}

#[derive(Debug, Clone)]
enum Symbol {
    Var { decl: NodeId, ty: MicroCType },
    Func,
}

struct Checker<'a> {
    tree: &'a SyntaxTree,
    out: Analysis,
    scopes: Vec<HashMap<String, Symbol>>,
    structs: HashMap<String, NodeId>,
    labels: HashMap<String, NodeId>,
    current_ret: Option<MicroCType>,
}

pub fn unifies(a: &MicroCType, b: &MicroCType) -> bool {
    a == b || (a.is_pointer() && b.is_pointer() && (a.base == BaseType::Void || b.base == BaseType::Void))
}

impl Checker<'_> {
    fn error(&mut self, node: NodeId, message: impl Into<String>) {
        self.out.diagnostics.push(Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span: self.tree.span(node),
            node: Some(node),
        });
    }

    fn warning(&mut self, node: NodeId, message: impl Into<String>) {
        self.out.diagnostics.push(Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span: self.tree.span(node),
            node: Some(node),
        });
    }

    fn lookup(&self, name: &str) -> Option<&Symbol> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn declare(&mut self, node: NodeId, name: &str, sym: Symbol) {
        if name == BUILTIN_PRINT && self.scopes.len() == 1 {
            self.error(node, format!("`{name}` is a builtin and cannot be redeclared"));
            return;
        }
        let scope = self.scopes.last_mut().expect("scope stack is never empty");
        if scope.contains_key(name) {
            self.error(node, format!("redeclaration of `{name}`"));
            return;
        }
        scope.insert(name.to_string(), sym);
    }

    /// Validates a written type. `self_struct` names a struct whose body is
    /// being checked (pointers to it are allowed).
    fn check_type(&mut self, t: &TypeRef, allow_bare_void: bool, self_struct: Option<(&str, NodeId)>) -> Option<MicroCType> {
        if t.ty.is_bare_void() && !allow_bare_void {
            self.error(t.id, "`void` is not a value type here");
            return None;
        }
        if let Some(name) = t.ty.struct_name() {
            if let Some((own, own_id)) = self_struct.filter(|(own, _)| *own == name) {
                if !t.ty.is_pointer() {
                    self.error(t.id, format!("struct `{own}` cannot contain itself"));
                    return None;
                }
                self.out.struct_refs.insert(t.id, own_id);
            } else if let Some(&decl) = self.structs.get(name) {
                self.out.struct_refs.insert(t.id, decl);
            } else {
                self.error(t.id, format!("unknown struct `{name}`"));
                return None;
            }
        }
        Some(t.ty.clone())
    }

    fn item(&mut self, item: &Item) {
        match item {
            Item::Struct(s) => {
                if self.structs.contains_key(&s.name) {
                    self.error(s.id, format!("redefinition of struct `{}`", s.name));
                }
                let mut names = HashMap::new();
                for f in &s.fields {
                    self.check_type(&f.ty, false, Some((&s.name, s.id)));
                    if f.init.is_some() {
                        self.error(f.id, "struct fields cannot have initializers");
                    }
                    if names.insert(f.name.clone(), ()).is_some() {
                        self.error(f.id, format!("duplicate field `{}`", f.name));
                    }
                }
                self.structs.entry(s.name.clone()).or_insert(s.id);
            }
            Item::FuncDecl(d) => {
                self.signature(d.id, &d.sig, false);
            }
            Item::FuncDef(d) => {
                let params = self.signature(d.id, &d.sig, true);
                self.current_ret = d.sig.ret.ty.clone().into();
                self.scopes.push(HashMap::new());
                for (p, ty) in d.sig.params.iter().zip(params) {
                    if let Some(ty) = ty {
                        self.out.decl_types.insert(p.id, ty.clone());
                        self.declare(p.id, &p.name, Symbol::Var { decl: p.id, ty });
                    }
                }
                self.labels.clear();
                self.collect_labels(&d.body.stmts);
                for s in &d.body.stmts {
                    self.stmt(s);
                }
                self.scopes.pop();
                self.current_ret = None;
            }
            Item::Var(v) => {
                let ty = self.check_type(&v.ty, false, None);
                if let Some(init) = &v.init {
                    let actual = self.value(init);
                    self.expect_unify(init.id, ty.as_ref(), actual.as_ref(), "initializer");
                }
                if let Some(ty) = ty {
                    if matches!(self.scopes[0].get(&v.name), Some(Symbol::Func)) {
                        self.error(v.id, format!("`{}` redeclared as a different kind of symbol", v.name));
                        return;
                    }
                    self.out.decl_types.insert(v.id, ty.clone());
                    self.declare(v.id, &v.name, Symbol::Var { decl: v.id, ty });
                }
            }
        }
    }

    /// Registers a function declaration or definition; returns parameter types.
    fn signature(&mut self, id: NodeId, sig: &FuncSig, is_def: bool) -> Vec<Option<MicroCType>> {
        let ret = self.check_type(&sig.ret, true, None);
        let mut seen = HashMap::new();
        let params: Vec<Option<MicroCType>> = sig
            .params
            .iter()
            .map(|p| {
                if seen.insert(p.name.clone(), ()).is_some() {
                    self.error(p.id, format!("duplicate parameter `{}`", p.name));
                }
                self.check_type(&p.ty, false, None)
            })
            .collect();

        if sig.name == BUILTIN_PRINT {
            self.error(id, format!("`{BUILTIN_PRINT}` is a builtin and cannot be redeclared"));
            return params;
        }
        if let Some(Symbol::Var { .. }) = self.scopes[0].get(&sig.name) {
            self.error(id, format!("`{}` redeclared as a different kind of symbol", sig.name));
            return params;
        }

        let complete = ret.is_some() && params.iter().all(Option::is_some);
        let param_tys: Vec<MicroCType> = params.iter().flatten().cloned().collect();
        let existing = self.out.functions.get(&sig.name).cloned();
        if let Some(prev) = &existing {
            if is_def && prev.def.is_some() {
                self.error(id, format!("redefinition of function `{}`", sig.name));
            }
            if complete && prev.ret.is_some() && (prev.ret != ret || prev.params != param_tys) {
                self.error(id, format!("conflicting types for `{}`", sig.name));
            }
        }
        let entry = self.out.functions.entry(sig.name.clone()).or_default();
        if entry.ret.is_none() && complete {
            entry.ret = ret;
            entry.params = param_tys;
        }
        if is_def {
            entry.def.get_or_insert(id);
        } else {
            entry.decls.push(id);
        }
        self.scopes[0].insert(sig.name.clone(), Symbol::Func);
        params
    }

    fn collect_labels(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.collect_labels_in(s);
        }
    }

    fn collect_labels_in(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Labeled { label, body } => {
                if self.labels.insert(label.clone(), s.id).is_some() {
                    self.error(s.id, format!("duplicate label `{label}`"));
                }
                self.collect_labels_in(body);
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                self.collect_labels_in(then_branch);
                if let Some(e) = else_branch {
                    self.collect_labels_in(e);
                }
            }
            StmtKind::While { body, .. } => self.collect_labels_in(body),
            StmtKind::Block(b) => self.collect_labels(&b.stmts),
            _ => {}
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Var(v) => {
                let ty = self.check_type(&v.ty, false, None);
                if let Some(init) = &v.init {
                    let actual = self.value(init);
                    self.expect_unify(init.id, ty.as_ref(), actual.as_ref(), "initializer");
                }
                if let Some(ty) = ty {
                    self.out.decl_types.insert(s.id, ty.clone());
                    self.declare(s.id, &v.name, Symbol::Var { decl: s.id, ty });
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::Return(value) => {
                let ret = self.current_ret.clone();
                match (value, ret) {
                    (Some(e), Some(ret)) if ret.is_bare_void() => {
                        self.expr(e);
                        self.error(s.id, "void function returns a value");
                    }
                    (Some(e), ret) => {
                        let actual = self.value(e);
                        self.expect_unify(e.id, ret.as_ref(), actual.as_ref(), "return value");
                    }
                    (None, Some(ret)) if !ret.is_bare_void() => {
                        self.warning(s.id, "non-void function returns without a value");
                    }
                    (None, _) => {}
                }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.condition(cond);
                self.nested(then_branch);
                if let Some(e) = else_branch {
                    self.nested(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.condition(cond);
                self.nested(body);
            }
            StmtKind::Goto(label) => match self.labels.get(label) {
                Some(&target) => {
                    self.out.gotos.insert(s.id, target);
                }
                None => self.error(s.id, format!("goto to undefined label `{label}`")),
            },
            StmtKind::Labeled { body, .. } => self.stmt(body),
            StmtKind::Block(b) => {
                self.scopes.push(HashMap::new());
                for st in &b.stmts {
                    self.stmt(st);
                }
                self.scopes.pop();
            }
            StmtKind::Empty => {}
        }
    }

    fn nested(&mut self, s: &Stmt) {
        self.scopes.push(HashMap::new());
        self.stmt(s);
        self.scopes.pop();
    }

    fn condition(&mut self, cond: &Expr) {
        if let Some(t) = self.value(cond) {
            if !(t == MicroCType::INT || t.is_pointer()) {
                self.error(cond.id, format!("condition has non-scalar type `{t}`"));
            }
        }
    }

    fn expect_unify(&mut self, node: NodeId, expected: Option<&MicroCType>, actual: Option<&MicroCType>, what: &str) {
        if let (Some(e), Some(a)) = (expected, actual) {
            if !unifies(e, a) {
                self.error(node, format!("{what} has type `{a}`, expected `{e}`"));
            }
        }
    }

    /// Types an expression used as a value (void is rejected).
    fn value(&mut self, e: &Expr) -> Option<MicroCType> {
        let t = self.expr(e)?;
        if t.is_bare_void() {
            self.error(e.id, "void value used in an expression");
            return None;
        }
        Some(t)
    }

    fn expr(&mut self, e: &Expr) -> Option<MicroCType> {
        let t = self.expr_inner(e);
        if let Some(t) = &t {
            self.out.expr_types.insert(e.id, t.clone());
        }
        t
    }

    fn expr_inner(&mut self, e: &Expr) -> Option<MicroCType> {
        match &e.kind {
            ExprKind::Int(_) => Some(MicroCType::INT),
            ExprKind::Ident(name) => match self.lookup(name).cloned() {
                Some(Symbol::Var { decl, ty }) => {
                    self.out.idents.insert(e.id, Resolved::Var(decl));
                    Some(ty)
                }
                Some(Symbol::Func) => {
                    self.out.idents.insert(e.id, Resolved::Function(name.clone()));
                    Some(MicroCType::void_ptr3())
                }
                None if name == BUILTIN_PRINT => {
                    self.error(e.id, "builtin `print` cannot be used as a value");
                    None
                }
                None => {
                    self.error(e.id, format!("unresolved identifier `{name}`"));
                    None
                }
            },
            ExprKind::Call { callee, args } => {
                let arg_tys: Vec<Option<MicroCType>> = args.iter().map(|a| self.value(a)).collect();
                match self.lookup(callee).cloned() {
                    Some(Symbol::Func) => {
                        self.out.calls.insert(e.id, callee.clone());
                        let info = self.out.functions.get(callee).cloned().unwrap_or_default();
                        if info.params.len() != args.len() {
                            self.error(
                                e.id,
                                format!(
                                    "arity mismatch: `{callee}` takes {} argument(s), {} given",
                                    info.params.len(),
                                    args.len()
                                ),
                            );
                        } else {
                            for ((a, actual), expected) in args.iter().zip(&arg_tys).zip(&info.params) {
                                self.expect_unify(a.id, Some(expected), actual.as_ref(), "argument");
                            }
                        }
                        info.ret
                    }
                    Some(Symbol::Var { .. }) => {
                        self.error(e.id, format!("`{callee}` is not a function"));
                        None
                    }
                    None if callee == BUILTIN_PRINT => {
                        if args.len() != 1 {
                            self.error(e.id, "arity mismatch: `print` takes 1 argument");
                        } else if let Some(t) = &arg_tys[0] {
                            if !(*t == MicroCType::INT || t.is_pointer()) {
                                self.error(args[0].id, format!("cannot print a value of type `{t}`"));
                            }
                        }
                        Some(MicroCType::VOID)
                    }
                    None => {
                        self.error(e.id, format!("unresolved identifier `{callee}`"));
                        None
                    }
                }
            }
            ExprKind::Unary { op, operand } => {
                let t = self.value(operand)?;
                match op {
                    UnaryOp::AddrOf => Some(t.pointer_to()),
                    UnaryOp::Deref => {
                        if t.is_pointer() {
                            Some(MicroCType::new(t.base, t.pointer_depth - 1))
                        } else {
                            self.error(e.id, format!("cannot dereference a value of type `{t}`"));
                            None
                        }
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.value(lhs);
                let r = self.value(rhs);
                let (l, r) = (l?, r?);
                let int = MicroCType::INT;
                let result = match op {
                    BinOp::Assign => unifies(&l, &r).then_some(l.clone()),
                    BinOp::Add => match (l.is_pointer(), r.is_pointer()) {
                        (false, false) if l == int && r == int => Some(int),
                        (true, false) if r == int => Some(l.clone()),
                        (false, true) if l == int => Some(r.clone()),
                        _ => None,
                    },
                    BinOp::Sub => match (l.is_pointer(), r.is_pointer()) {
                        (false, false) if l == int && r == int => Some(int),
                        (true, false) if r == int => Some(l.clone()),
                        (true, true) if unifies(&l, &r) => Some(int),
                        _ => None,
                    },
                    BinOp::Mul | BinOp::Div => (l == int && r == int).then_some(int),
                    BinOp::Lt => ((l == int && r == int) || (l.is_pointer() && unifies(&l, &r))).then_some(int),
                    BinOp::Eq => unifies(&l, &r).then_some(int),
                };
                if result.is_none() {
                    self.error(e.id, format!("invalid operands to `{}`: `{l}` and `{r}`", op.symbol()));
                }
                result
            }
            ExprKind::Cast { ty, operand } => {
                let target = self.check_type(ty, true, None);
                self.value(operand)?;
                target
            }
            ExprKind::Paren(inner) => self.expr(inner),
        }
    }
}
