//! Tree-walking interpreter for compiled MicroC programs.
//!
//! Values are 64-bit integers; a pointer is the index of a memory cell and
//! cell 0 is never allocated, so `(T*)0` is a null pointer. Every variable,
//! whatever its type, occupies one cell. `print(e)` writes the value of `e`
//! followed by a newline. Programs without `main` run nothing.
//!
//! Assignment to a non-lvalue evaluates both sides and discards the store;
//! `&` of a non-lvalue yields the address of a fresh temporary.

use std::collections::HashMap;

use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::check::BUILTIN_PRINT;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_steps: u64,
    pub max_call_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_steps: 1_000_000, max_call_depth: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuntimeErrorKind {
    Fault,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("runtime error: {message}")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub message: String,
    /// Output produced before the error.
    pub stdout: String,
}

/// Runs `main` and returns everything it printed.
pub fn run_program(tree: &SyntaxTree, limits: Limits) -> Result<String, RuntimeError> {
    let mut m = Machine {
        functions: HashMap::new(),
        function_index: HashMap::new(),
        globals: HashMap::new(),
        frames: Vec::new(),
        memory: vec![0],
        stdout: String::new(),
        steps: 0,
        limits,
    };
    for (i, item) in tree.program.items.iter().enumerate() {
        if let Item::FuncDef(f) = item {
            m.functions.entry(f.sig.name.as_str()).or_insert(f);
            m.function_index.entry(f.sig.name.clone()).or_insert(i as i64);
        }
    }
    let result = m.run(tree);
    match result {
        Ok(()) => Ok(m.stdout),
        Err(Fail { kind, message }) => Err(RuntimeError { kind, message, stdout: m.stdout }),
    }
}

/// Designator values for functions start here so they never look like
/// valid cell addresses in small programs.
const FUNCTION_VALUE_BASE: i64 = 1 << 40;

struct Fail {
    kind: RuntimeErrorKind,
    message: String,
}

type R<T> = Result<T, Fail>;

fn fault<T>(message: impl Into<String>) -> R<T> {
    Err(Fail { kind: RuntimeErrorKind::Fault, message: message.into() })
}

enum Flow {
    Normal,
    Return(i64),
    Goto(String),
}

struct Machine<'a> {
    functions: HashMap<&'a str, &'a FuncDef>,
    function_index: HashMap<String, i64>,
    globals: HashMap<String, usize>,
    frames: Vec<Vec<HashMap<String, usize>>>,
    memory: Vec<i64>,
    stdout: String,
    steps: u64,
    limits: Limits,
}

fn contains_label(s: &Stmt, label: &str) -> bool {
    match &s.kind {
        StmtKind::Labeled { label: l, body } => l == label || contains_label(body, label),
        StmtKind::If { then_branch, else_branch, .. } => {
            contains_label(then_branch, label) || else_branch.as_deref().is_some_and(|e| contains_label(e, label))
        }
        StmtKind::While { body, .. } => contains_label(body, label),
        StmtKind::Block(b) => b.stmts.iter().any(|s| contains_label(s, label)),
        _ => false,
    }
}

impl<'a> Machine<'a> {
    fn run(&mut self, tree: &'a SyntaxTree) -> R<()> {
        for item in &tree.program.items {
            if let Item::Var(v) = item {
                let value = match &v.init {
                    Some(e) => self.eval(e)?,
                    None => 0,
                };
                let addr = self.alloc(value);
                self.globals.insert(v.name.clone(), addr);
            }
        }
        if let Some(main) = self.functions.get("main").copied() {
            let args = vec![0; main.sig.params.len()];
            self.call(main, args)?;
        }
        Ok(())
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(Fail { kind: RuntimeErrorKind::StepLimit, message: "step limit exceeded".into() });
        }
        Ok(())
    }

    fn alloc(&mut self, value: i64) -> usize {
        self.memory.push(value);
        self.memory.len() - 1
    }

    fn cell(&self, addr: i64) -> R<usize> {
        if addr <= 0 || addr as u64 >= self.memory.len() as u64 {
            return fault(format!("invalid memory access at address {addr}"));
        }
        Ok(addr as usize)
    }

    fn scopes(&mut self) -> &mut Vec<HashMap<String, usize>> {
        self.frames.last_mut().expect("executing inside a frame")
    }

    fn declare_local(&mut self, name: &str, value: i64) {
        let addr = self.alloc(value);
        self.scopes().last_mut().expect("frame has a scope").insert(name.to_string(), addr);
    }

    fn lookup_var(&self, name: &str) -> Option<usize> {
        self.frames
            .last()
            .and_then(|scopes| scopes.iter().rev().find_map(|s| s.get(name).copied()))
            .or_else(|| self.globals.get(name).copied())
    }

    fn call(&mut self, f: &'a FuncDef, args: Vec<i64>) -> R<i64> {
        if self.frames.len() >= self.limits.max_call_depth {
            return fault("call depth limit exceeded");
        }
        let mut scope = HashMap::new();
        for (p, v) in f.sig.params.iter().zip(args) {
            scope.insert(p.name.clone(), self.alloc(v));
        }
        self.frames.push(vec![scope]);
        let flow = self.exec_list(&f.body.stmts, None);
        self.frames.pop();
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(0),
            Flow::Goto(l) => fault(format!("label `{l}` not found")),
        }
    }

    fn exec_list(&mut self, stmts: &'a [Stmt], mut seek: Option<String>) -> R<Flow> {
        let mut i = 0;
        loop {
            if let Some(label) = &seek {
                let Some(target) = stmts.iter().position(|s| contains_label(s, label)) else {
                    return Ok(Flow::Goto(seek.take().expect("seek is set")));
                };
                // Declarations jumped over still exist, uninitialized.
                for s in &stmts[i.min(target)..target] {
                    if let StmtKind::Var(v) = &s.kind {
                        self.declare_local(&v.name, 0);
                    }
                }
                i = target;
            }
            let Some(stmt) = stmts.get(i) else { return Ok(Flow::Normal) };
            match self.exec(stmt, seek.take())? {
                Flow::Normal => i += 1,
                Flow::Goto(label) => seek = Some(label),
                flow @ Flow::Return(_) => return Ok(flow),
            }
        }
    }

    fn exec(&mut self, stmt: &'a Stmt, seek: Option<String>) -> R<Flow> {
        self.tick()?;
        match &stmt.kind {
            StmtKind::Var(v) => {
                let value = match &v.init {
                    Some(e) => self.eval(e)?,
                    None => 0,
                };
                self.declare_local(&v.name, value);
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e)?,
                    None => 0,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                if let Some(label) = seek {
                    if contains_label(then_branch, &label) {
                        return self.exec_scoped(then_branch, Some(label));
                    }
                    let e = else_branch.as_deref().expect("label lies in one branch");
                    return self.exec_scoped(e, Some(label));
                }
                if self.eval(cond)? != 0 {
                    self.exec_scoped(then_branch, None)
                } else if let Some(e) = else_branch {
                    self.exec_scoped(e, None)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                let mut seek = seek;
                loop {
                    if seek.is_none() && self.eval(cond)? == 0 {
                        return Ok(Flow::Normal);
                    }
                    match self.exec_scoped(body, seek.take())? {
                        Flow::Normal => {}
                        flow => return Ok(flow),
                    }
                    self.tick()?;
                }
            }
            StmtKind::Goto(label) => Ok(Flow::Goto(label.clone())),
            StmtKind::Labeled { label, body } => {
                let seek = seek.filter(|l| l != label);
                self.exec(body, seek)
            }
            StmtKind::Block(b) => {
                self.scopes().push(HashMap::new());
                let flow = self.exec_list(&b.stmts, seek);
                self.scopes().pop();
                flow
            }
            StmtKind::Empty => Ok(Flow::Normal),
        }
    }

    fn exec_scoped(&mut self, stmt: &'a Stmt, seek: Option<String>) -> R<Flow> {
        self.scopes().push(HashMap::new());
        let flow = self.exec(stmt, seek);
        self.scopes().pop();
        flow
    }

    fn lvalue(&mut self, e: &'a Expr) -> R<Option<usize>> {
        match &e.kind {
            ExprKind::Ident(name) => Ok(self.lookup_var(name)),
            ExprKind::Unary { op: UnaryOp::Deref, operand } => {
                let p = self.eval(operand)?;
                Ok(Some(self.cell(p)?))
            }
            ExprKind::Paren(inner) => self.lvalue(inner),
            _ => Ok(None),
        }
    }

    fn eval(&mut self, e: &'a Expr) -> R<i64> {
        self.tick()?;
        match &e.kind {
            ExprKind::Int(v) => Ok(*v),
            ExprKind::Ident(name) => {
                if let Some(addr) = self.lookup_var(name) {
                    return Ok(self.memory[addr]);
                }
                match self.function_index.get(name) {
                    Some(i) => Ok(FUNCTION_VALUE_BASE + i),
                    None => fault(format!("unbound identifier `{name}`")),
                }
            }
            ExprKind::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                if self.lookup_var(callee).is_none() {
                    if let Some(f) = self.functions.get(callee.as_str()).copied() {
                        return self.call(f, values);
                    }
                    if callee == BUILTIN_PRINT {
                        let v = values.first().copied().unwrap_or(0);
                        self.stdout.push_str(&v.to_string());
                        self.stdout.push('\n');
                        return Ok(0);
                    }
                }
                fault(format!("call to unknown function `{callee}`"))
            }
            ExprKind::Unary { op: UnaryOp::AddrOf, operand } => match self.lvalue(operand)? {
                Some(addr) => Ok(addr as i64),
                None => {
                    let v = self.eval(operand)?;
                    Ok(self.alloc(v) as i64)
                }
            },
            ExprKind::Unary { op: UnaryOp::Deref, operand } => {
                let p = self.eval(operand)?;
                let addr = self.cell(p)?;
                Ok(self.memory[addr])
            }
            ExprKind::Binary { op: BinOp::Assign, lhs, rhs } => {
                let target = self.lvalue(lhs)?;
                if target.is_none() {
                    self.eval(lhs)?;
                }
                let v = self.eval(rhs)?;
                if let Some(addr) = target {
                    self.memory[addr] = v;
                }
                Ok(v)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                match op {
                    BinOp::Add => Ok(l.wrapping_add(r)),
                    BinOp::Sub => Ok(l.wrapping_sub(r)),
                    BinOp::Mul => Ok(l.wrapping_mul(r)),
                    BinOp::Div if r == 0 => fault("division by zero"),
                    BinOp::Div => Ok(l.wrapping_div(r)),
                    BinOp::Lt => Ok((l < r) as i64),
                    BinOp::Eq => Ok((l == r) as i64),
                    BinOp::Assign => unreachable!("handled above"),
                }
            }
            ExprKind::Cast { operand, .. } => self.eval(operand),
            ExprKind::Paren(inner) => self.eval(inner),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn run(src: &str) -> Result<String, RuntimeError> {
        run_program(&parse_source(src).unwrap(), Limits::default())
    }

    #[test]
    fn prints_values() {
        assert_eq!(run("int main() { print(1 + 2 * 3); print(7 / 2); return 0; }").unwrap(), "7\n3\n");
    }

    #[test]
    fn functions_and_recursion() {
        let src = "int fact(int n) { if (n < 2) return 1; return n * fact(n - 1); } int main() { print(fact(5)); }";
        assert_eq!(run(src).unwrap(), "120\n");
    }

    #[test]
    fn pointers_and_globals() {
        let src = "int g = 4; int main() { int x = 1; int* p = &x; *p = *p + g; int** pp = &p; print(**pp); }";
        assert_eq!(run(src).unwrap(), "5\n");
    }

    #[test]
    fn while_loops() {
        let src = "int main() { int i = 0; int s = 0; while (i < 5) { s = s + i; i = i + 1; } print(s); }";
        assert_eq!(run(src).unwrap(), "10\n");
    }

    #[test]
    fn gotos_forward_backward_and_nested() {
        let src = "int main() { int i = 0; top: i = i + 1; if (i < 3) goto top; print(i); goto skip; print(99); skip: print(4); }";
        assert_eq!(run(src).unwrap(), "3\n4\n");
        let nested = "int main() { goto inner; print(1); { int y = 9; inner: print(y); } }";
        assert_eq!(run(nested).unwrap(), "0\n");
    }

    #[test]
    fn null_dereference_faults() {
        let err = run("int main() { print(1); print(*(int*)0); }").unwrap_err();
        assert_eq!(err.kind, RuntimeErrorKind::Fault);
        assert_eq!(err.stdout, "1\n");
    }

    #[test]
    fn division_by_zero_faults() {
        assert!(run("int main() { print(1 / 0); }").is_err());
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let err = run("int main() { while (1) ; }").unwrap_err();
        assert_eq!(err.kind, RuntimeErrorKind::StepLimit);
        let err = run("int main() { L: goto L; }").unwrap_err();
        assert_eq!(err.kind, RuntimeErrorKind::StepLimit);
    }

    #[test]
    fn non_lvalue_assignment_is_harmless() {
        assert_eq!(run("int main() { 1 = 2; int* p = &1; print(*p); }").unwrap(), "1\n");
    }

    #[test]
    fn no_main_runs_nothing() {
        assert_eq!(run("int x = 3;").unwrap(), "");
    }
}
