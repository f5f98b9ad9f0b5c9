//! Tokenizer for MicroC source text.

use std::fmt;
use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

/// Byte offsets into the source, half-open.
pub type Span = Range<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntegerLiteral,
    Punctuator,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.lexeme == text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at {}..{}: {message}", span.start, span.end)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

pub const KEYWORDS: &[&str] = &[
    "int", "void", "struct", "return", "if", "else", "while", "goto",
];

const PUNCTUATORS: &[u8] = b"(){};,:";

/// Splits `source` into tokens. Whitespace and comments are dropped.
pub fn lex(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;

    while pos < bytes.len() {
        let b = bytes[pos];
        if b.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if bytes[pos..].starts_with(b"//") {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        if bytes[pos..].starts_with(b"/*") {
            let start = pos;
            match source[pos + 2..].find("*/") {
                Some(end) => pos = pos + 2 + end + 2,
                None => {
                    return Err(LexError {
                        message: "unterminated block comment".into(),
                        span: start..bytes.len(),
                    })
                }
            }
            continue;
        }

        let start = pos;
        let kind = if b.is_ascii_alphabetic() || b == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            if KEYWORDS.contains(&&source[start..pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if b.is_ascii_digit() {
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos < bytes.len() && (bytes[pos].is_ascii_alphabetic() || bytes[pos] == b'_') {
                return Err(LexError {
                    message: "invalid suffix on integer literal".into(),
                    span: start..pos + 1,
                });
            }
            TokenKind::IntegerLiteral
        } else if bytes[pos..].starts_with(b"==") {
            pos += 2;
            TokenKind::Operator
        } else if b"+-*/<=&".contains(&b) {
            pos += 1;
            TokenKind::Operator
        } else if PUNCTUATORS.contains(&b) {
            pos += 1;
            TokenKind::Punctuator
        } else {
            let len = source[pos..].chars().next().map_or(1, char::len_utf8);
            return Err(LexError {
                message: format!("unexpected character {:?}", &source[pos..pos + len]),
                span: pos..pos + len,
            });
        };

        tokens.push(Token {
            kind,
            lexeme: source[start..pos].to_string(),
            span: start..pos,
        });
    }

    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexemes(src: &str) -> Vec<String> {
        lex(src).unwrap().into_iter().map(|t| t.lexeme).collect()
    }

    #[test]
    fn simple_declaration() {
        assert_eq!(lexemes("int x;"), ["int", "x", ";"]);
        let toks = lex("int x;").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword);
        assert_eq!(toks[1].kind, TokenKind::Identifier);
        assert_eq!(toks[2].kind, TokenKind::Punctuator);
    }

    #[test]
    fn empty_input() {
        assert!(lex("").unwrap().is_empty());
        assert!(lex("  // only a comment\n /* and another */ ").unwrap().is_empty());
    }

    #[test]
    fn spans_match_source() {
        let src = "int  main() { return a==b; } // tail";
        for tok in lex(src).unwrap() {
            assert_eq!(&src[tok.span.clone()], tok.lexeme);
        }
    }

    #[test]
    fn equality_is_one_token() {
        assert_eq!(lexemes("a==b=c"), ["a", "==", "b", "=", "c"]);
    }

    #[test]
    fn rejects_unknown_bytes() {
        let err = lex("int x = 1 % 2;").unwrap_err();
        assert_eq!(err.span, 10..11);
        assert!(lex("int 9x;").is_err());
        assert!(lex("/* open").is_err());
    }
}
