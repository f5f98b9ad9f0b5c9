//! Deterministic pretty-printer.
//!
//! Layout: tokens are separated by one space, except that no space precedes
//! `;`, `,`, `)`, `:` or a call's `(`, and none follows `(`, a unary operator
//! or a cast. A newline follows every `;`, `{` and `}` (a `}` directly
//! followed by `;` or `else` stays on the same line). Lines are indented by
//! two spaces per open brace.

use std::collections::HashMap;
use std::ops::Range;

use super::ast::*;

#[derive(Debug, Clone)]
struct OutTok {
    text: String,
    /// No space before this token.
    attach: bool,
    /// No space after this token.
    glue: bool,
}

/// The printed token stream of a tree plus the token range of every node.
#[derive(Debug, Clone, Default)]
pub struct Printed {
    tokens: Vec<OutTok>,
    ranges: HashMap<NodeId, Range<usize>>,
}

impl Printed {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn lexemes(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    /// Token range of `id` in the printed output.
    pub fn range(&self, id: NodeId) -> Option<Range<usize>> {
        self.ranges.get(&id).cloned()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let mut depth: usize = 0;
        let mut line_start = true;
        let mut prev_glue = false;
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.text == "}" {
                depth = depth.saturating_sub(1);
            }
            if line_start {
                for _ in 0..depth {
                    out.push_str("  ");
                }
            } else if !tok.attach && !prev_glue {
                out.push(' ');
            }
            out.push_str(&tok.text);
            prev_glue = tok.glue;
            line_start = false;
            let next = self.tokens.get(i + 1).map(|t| t.text.as_str());
            match tok.text.as_str() {
                "{" => {
                    depth += 1;
                    out.push('\n');
                    line_start = true;
                }
                ";" => {
                    out.push('\n');
                    line_start = true;
                }
                "}" if !matches!(next, Some(";") | Some("else")) => {
                    out.push('\n');
                    line_start = true;
                }
                _ => {}
            }
        }
        out
    }
}

pub fn print(tree: &SyntaxTree) -> String {
    print_tokens(tree).text()
}

pub fn print_tokens(tree: &SyntaxTree) -> Printed {
    let mut e = Emitter::default();
    for item in &tree.program.items {
        e.item(item);
    }
    e.out
}

/// Prints a single expression, for diagnostics and logs.
pub fn expr_to_string(expr: &Expr) -> String {
    let mut e = Emitter::default();
    e.expr(expr);
    let text = e.out.text();
    text.trim_end().to_string()
}

#[derive(Default)]
struct Emitter {
    out: Printed,
}

impl Emitter {
    fn push(&mut self, text: &str, attach: bool, glue: bool) {
        self.out.tokens.push(OutTok { text: text.to_string(), attach, glue });
    }

    fn tok(&mut self, text: &str) {
        self.push(text, matches!(text, ";" | "," | ")" | ":"), text == "(");
    }

    fn open(&mut self) -> usize {
        self.out.tokens.len()
    }

    fn close(&mut self, id: NodeId, start: usize) {
        self.out.ranges.insert(id, start..self.out.tokens.len());
    }

    fn type_ref(&mut self, t: &TypeRef) {
        let s = self.open();
        match &t.ty.base {
            BaseType::Int => self.tok("int"),
            BaseType::Void => self.tok("void"),
            BaseType::Struct(name) => {
                self.tok("struct");
                self.tok(name);
            }
        }
        for _ in 0..t.ty.pointer_depth {
            self.push("*", true, false);
        }
        self.close(t.id, s);
    }

    fn item(&mut self, item: &Item) {
        let s = self.open();
        match item {
            Item::Struct(st) => {
                self.tok("struct");
                self.tok(&st.name);
                self.tok("{");
                for f in &st.fields {
                    self.var(f);
                }
                self.tok("}");
                self.tok(";");
            }
            Item::FuncDecl(f) => {
                self.sig(&f.sig);
                self.tok(";");
            }
            Item::FuncDef(f) => {
                self.sig(&f.sig);
                self.block(&f.body);
            }
            Item::Var(v) => {
                self.var_body(v);
            }
        }
        self.close(item.id(), s);
    }

    fn sig(&mut self, sig: &FuncSig) {
        self.type_ref(&sig.ret);
        self.tok(&sig.name);
        self.push("(", true, true);
        for (i, p) in sig.params.iter().enumerate() {
            if i > 0 {
                self.tok(",");
            }
            let s = self.open();
            self.type_ref(&p.ty);
            self.tok(&p.name);
            self.close(p.id, s);
        }
        self.tok(")");
    }

    fn var(&mut self, v: &VarDecl) {
        let s = self.open();
        self.var_body(v);
        self.close(v.id, s);
    }

    fn var_body(&mut self, v: &VarDecl) {
        self.type_ref(&v.ty);
        self.tok(&v.name);
        if let Some(init) = &v.init {
            self.tok("=");
            self.expr(init);
        }
        self.tok(";");
    }

    fn block(&mut self, b: &Block) {
        let s = self.open();
        self.tok("{");
        for st in &b.stmts {
            self.stmt(st);
        }
        self.tok("}");
        self.close(b.id, s);
    }

    fn stmt(&mut self, st: &Stmt) {
        let s = self.open();
        match &st.kind {
            StmtKind::Var(v) => self.var(v),
            StmtKind::Expr(e) => {
                self.expr(e);
                self.tok(";");
            }
            StmtKind::Return(value) => {
                self.tok("return");
                if let Some(e) = value {
                    self.expr(e);
                }
                self.tok(";");
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.tok("if");
                self.tok("(");
                self.expr(cond);
                self.tok(")");
                self.stmt(then_branch);
                if let Some(e) = else_branch {
                    self.tok("else");
                    self.stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.tok("while");
                self.tok("(");
                self.expr(cond);
                self.tok(")");
                self.stmt(body);
            }
            StmtKind::Goto(label) => {
                self.tok("goto");
                self.tok(label);
                self.tok(";");
            }
            StmtKind::Labeled { label, body } => {
                self.tok(label);
                self.tok(":");
                self.stmt(body);
            }
            StmtKind::Block(b) => self.block(b),
            StmtKind::Empty => self.tok(";"),
        }
        self.close(st.id, s);
    }

    fn expr(&mut self, e: &Expr) {
        let s = self.open();
        match &e.kind {
            ExprKind::Int(v) => self.tok(&v.to_string()),
            ExprKind::Ident(name) => self.tok(name),
            ExprKind::Call { callee, args } => {
                self.tok(callee);
                self.push("(", true, true);
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                    }
                    self.expr(a);
                }
                self.tok(")");
            }
            ExprKind::Unary { op, operand } => {
                self.push(op.symbol(), false, true);
                self.expr(operand);
            }
            ExprKind::Binary { op, lhs, rhs } => {
                self.expr(lhs);
                self.tok(op.symbol());
                self.expr(rhs);
            }
            ExprKind::Cast { ty, operand } => {
                self.tok("(");
                self.type_ref(ty);
                self.push(")", true, true);
                self.expr(operand);
            }
            ExprKind::Paren(inner) => {
                self.tok("(");
                self.expr(inner);
                self.tok(")");
            }
        }
        self.close(e.id, s);
    }
}
