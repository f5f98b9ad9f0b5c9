//! Recursive-descent parser producing a [`SyntaxTree`].

use std::collections::HashMap;

use thiserror::Error;

use super::ast::*;
use super::lexer::{Span, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {}..{}: {message}", span.start, span.end)]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

pub fn parse(tokens: &[Token]) -> Result<SyntaxTree, ParseError> {
    let mut p = Parser { tokens, pos: 0, next_id: 0, spans: HashMap::new() };
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(p.item()?);
    }
    Ok(SyntaxTree::from_parts(Program { items }, p.next_id, p.spans))
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    next_id: u32,
    spans: HashMap<NodeId, Span>,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + offset)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn eof_span(&self) -> Span {
        let end = self.tokens.last().map_or(0, |t| t.span.end);
        end..end
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let span = self.peek().map_or_else(|| self.eof_span(), |t| t.span.clone());
        ParseError { message: message.into(), span }
    }

    fn bump(&mut self) -> PResult<&'t Token> {
        let tok = self.peek().ok_or_else(|| self.error_here("unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, text: &str) -> PResult<&'t Token> {
        match self.peek() {
            Some(t) if t.is(text) => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(self.error_here(format!("expected `{text}`, found `{}`", t.lexeme))),
            None => Err(self.error_here(format!("expected `{text}`, found end of input"))),
        }
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek_is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t.lexeme.clone())
            }
            Some(t) => Err(self.error_here(format!("expected identifier, found `{}`", t.lexeme))),
            None => Err(self.error_here("expected identifier, found end of input")),
        }
    }

    fn start(&self) -> usize {
        self.peek().map_or_else(|| self.eof_span().start, |t| t.span.start)
    }

    fn prev_end(&self) -> usize {
        self.pos.checked_sub(1).map_or(0, |i| self.tokens[i].span.end)
    }

    fn new_id(&mut self, start: usize) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.spans.insert(id, start..start);
        id
    }

    fn close(&mut self, id: NodeId) {
        let end = self.prev_end();
        if let Some(span) = self.spans.get_mut(&id) {
            span.end = end.max(span.start);
        }
    }

    fn at_type(&self) -> bool {
        self.peek().is_some_and(|t| t.is("int") || t.is("void") || t.is("struct"))
    }

    fn type_ref(&mut self) -> PResult<TypeRef> {
        let id = self.new_id(self.start());
        let tok = self.bump()?;
        let base = match tok.lexeme.as_str() {
            "int" => BaseType::Int,
            "void" => BaseType::Void,
            "struct" => BaseType::Struct(self.ident()?),
            _ => {
                self.pos -= 1;
                return Err(self.error_here(format!("expected type, found `{}`", tok.lexeme)));
            }
        };
        let mut depth = 0;
        while self.eat("*") {
            depth += 1;
        }
        self.close(id);
        Ok(TypeRef { id, ty: MicroCType::new(base, depth) })
    }

    fn item(&mut self) -> PResult<Item> {
        let start = self.start();
        let is_struct_decl = self.peek_is("struct")
            && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(2).is_some_and(|t| t.is("{"));
        if is_struct_decl {
            let id = self.new_id(start);
            self.expect("struct")?;
            let name = self.ident()?;
            self.expect("{")?;
            let mut fields = Vec::new();
            while !self.peek_is("}") {
                if !self.at_type() {
                    return Err(self.error_here("expected field declaration"));
                }
                let field_start = self.start();
                let ty = self.type_ref()?;
                fields.push(self.var_decl_rest(field_start, ty)?);
            }
            self.expect("}")?;
            self.expect(";")?;
            self.close(id);
            return Ok(Item::Struct(StructDecl { id, name, fields }));
        }

        if !self.at_type() {
            return Err(self.error_here("expected declaration"));
        }
        let id = self.new_id(start);
        let ty = self.type_ref()?;
        if self.peek_at(1).is_some_and(|t| t.is("(")) {
            let name = self.ident()?;
            self.expect("(")?;
            let mut params = Vec::new();
            if !self.peek_is(")") {
                loop {
                    let pid = self.new_id(self.start());
                    let pty = self.type_ref()?;
                    let pname = self.ident()?;
                    self.close(pid);
                    params.push(Param { id: pid, ty: pty, name: pname });
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
            let sig = FuncSig { ret: ty, name, params };
            if self.eat(";") {
                self.close(id);
                return Ok(Item::FuncDecl(FuncDecl { id, sig }));
            }
            let body = self.block()?;
            self.close(id);
            return Ok(Item::FuncDef(FuncDef { id, sig, body }));
        }
        // Reuse the item id for the declaration itself.
        let decl = self.var_decl_with_id(id, ty)?;
        Ok(Item::Var(decl))
    }

    fn var_decl_rest(&mut self, start: usize, ty: TypeRef) -> PResult<VarDecl> {
        let id = self.new_id(start);
        self.var_decl_with_id(id, ty)
    }

    fn var_decl_with_id(&mut self, id: NodeId, ty: TypeRef) -> PResult<VarDecl> {
        let name = self.ident()?;
        let init = if self.eat("=") { Some(self.expr()?) } else { None };
        self.expect(";")?;
        self.close(id);
        Ok(VarDecl { id, ty, name, init })
    }

    fn block(&mut self) -> PResult<Block> {
        let id = self.new_id(self.start());
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.peek_is("}") {
            if self.at_end() {
                return Err(self.error_here("expected `}`, found end of input"));
            }
            stmts.push(self.stmt()?);
        }
        self.expect("}")?;
        self.close(id);
        Ok(Block { id, stmts })
    }

    /// A statement in a position where a declaration is not allowed.
    fn sub_stmt(&mut self) -> PResult<Box<Stmt>> {
        if self.at_type() {
            return Err(self.error_here("declaration not allowed here"));
        }
        Ok(Box::new(self.stmt()?))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let id = self.new_id(start);
        let tok = self.peek().ok_or_else(|| self.error_here("expected statement"))?;
        let kind = if self.at_type() {
            let ty = self.type_ref()?;
            StmtKind::Var(self.var_decl_rest(start, ty)?)
        } else if tok.is("return") {
            self.pos += 1;
            let value = if self.peek_is(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            StmtKind::Return(value)
        } else if tok.is("if") {
            self.pos += 1;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_branch = self.sub_stmt()?;
            let else_branch = if self.eat("else") { Some(self.sub_stmt()?) } else { None };
            StmtKind::If { cond, then_branch, else_branch }
        } else if tok.is("while") {
            self.pos += 1;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = self.sub_stmt()?;
            StmtKind::While { cond, body }
        } else if tok.is("goto") {
            self.pos += 1;
            let label = self.ident()?;
            self.expect(";")?;
            StmtKind::Goto(label)
        } else if tok.is("{") {
            StmtKind::Block(self.block()?)
        } else if tok.is(";") {
            self.pos += 1;
            StmtKind::Empty
        } else if tok.kind == TokenKind::Identifier && self.peek_at(1).is_some_and(|t| t.is(":")) {
            let label = self.ident()?;
            self.expect(":")?;
            let body = self.sub_stmt()?;
            StmtKind::Labeled { label, body }
        } else if tok.kind == TokenKind::Keyword && tok.is("else") {
            return Err(self.error_here("`else` without a matching `if`"));
        } else {
            let e = self.expr()?;
            self.expect(";")?;
            StmtKind::Expr(e)
        };
        self.close(id);
        Ok(Stmt { id, kind })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn binary(&mut self, start: usize, op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let id = self.new_id(start);
        self.close(id);
        Expr { id, kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) } }
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let start = self.start();
        let lhs = self.equality()?;
        if self.eat("=") {
            let rhs = self.assignment()?;
            return Ok(self.binary(start, BinOp::Assign, lhs, rhs));
        }
        Ok(lhs)
    }

    fn equality(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut lhs = self.relational()?;
        while self.eat("==") {
            let rhs = self.relational()?;
            lhs = self.binary(start, BinOp::Eq, lhs, rhs);
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut lhs = self.additive()?;
        while self.eat("<") {
            let rhs = self.additive()?;
            lhs = self.binary(start, BinOp::Lt, lhs, rhs);
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                break;
            };
            let rhs = self.multiplicative()?;
            lhs = self.binary(start, op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                break;
            };
            let rhs = self.unary()?;
            lhs = self.binary(start, op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let op = if self.peek_is("&") {
            Some(UnaryOp::AddrOf)
        } else if self.peek_is("*") {
            Some(UnaryOp::Deref)
        } else {
            None
        };
        if let Some(op) = op {
            let id = self.new_id(start);
            self.pos += 1;
            let operand = Box::new(self.unary()?);
            self.close(id);
            return Ok(Expr { id, kind: ExprKind::Unary { op, operand } });
        }
        let is_cast = self.peek_is("(")
            && self.peek_at(1).is_some_and(|t| t.is("int") || t.is("void") || t.is("struct"));
        if is_cast {
            let id = self.new_id(start);
            self.expect("(")?;
            let ty = self.type_ref()?;
            self.expect(")")?;
            let operand = Box::new(self.unary()?);
            self.close(id);
            return Ok(Expr { id, kind: ExprKind::Cast { ty, operand } });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let tok = self.peek().ok_or_else(|| self.error_here("expected expression, found end of input"))?;
        let id = self.new_id(start);
        let kind = match tok.kind {
            TokenKind::IntegerLiteral => {
                self.pos += 1;
                let value = tok
                    .lexeme
                    .parse::<i64>()
                    .map_err(|_| ParseError { message: "integer literal out of range".into(), span: tok.span.clone() })?;
                ExprKind::Int(value)
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.peek_is(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    ExprKind::Call { callee: tok.lexeme.clone(), args }
                } else {
                    ExprKind::Ident(tok.lexeme.clone())
                }
            }
            _ if tok.is("(") => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(")")?;
                ExprKind::Paren(Box::new(inner))
            }
            _ => return Err(self.error_here(format!("expected expression, found `{}`", tok.lexeme))),
        };
        self.close(id);
        Ok(Expr { id, kind })
    }
}
