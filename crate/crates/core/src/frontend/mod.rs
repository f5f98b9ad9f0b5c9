//! MicroC front end: lexing, parsing, printing, token counting and type
//! checking.

pub mod ast;
pub mod check;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{BaseType, MicroCType, NodeId, SyntaxTree, TreeEdit};
pub use check::{analyze, typecheck, Analysis, Diagnostic, Severity};
pub use lexer::{lex, LexError, Span, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use printer::{print, print_tokens, Printed};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Lexes and parses `source` in one step.
pub fn parse_source(source: &str) -> Result<SyntaxTree, FrontendError> {
    Ok(parse(&lex(source)?)?)
}

/// Number of lexical tokens in `source`.
pub fn count_tokens(source: &str) -> Result<usize, LexError> {
    Ok(lex(source)?.len())
}

/// Number of tokens the tree prints to.
pub fn tree_tokens(tree: &SyntaxTree) -> usize {
    print_tokens(tree).token_count()
}
