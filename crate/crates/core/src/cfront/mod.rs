//! C-subset front end: preprocessing, lexing and recursive-descent parsing.
//!
//! The accepted language is the slice of C that typical online-judge
//! submissions use: function definitions, scalar and array declarations,
//! structured control flow and the usual expression grammar. There is no
//! symbol table; calls to undeclared functions such as `printf` are fine.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod preprocess;

pub use ast::{ast_from_json, ast_to_json, AstNode, NodeKind, Preorder};
pub use lexer::{lex, Token, TokenKind};
pub use parser::parse;
pub use preprocess::preprocess;
pub use pretty::to_c;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontError {
    #[error("function-like macro `{name}` at line {line} is not supported")]
    FunctionLikeMacro { name: String, line: usize },
    #[error("unterminated comment starting at line {line}")]
    UnterminatedComment { line: usize },
    #[error("unknown character {ch:?} at {line}:{col}")]
    UnknownCharacter { ch: char, line: usize, col: usize },
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    SyntaxError { expected: String, found: String, line: usize, col: usize },
}

impl FrontError {
    /// Short machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            FrontError::FunctionLikeMacro { .. } => "function_like_macro",
            FrontError::UnterminatedComment { .. } => "unterminated_comment",
            FrontError::UnknownCharacter { .. } => "unknown_character",
            FrontError::SyntaxError { .. } => "syntax",
        }
    }

    /// `(line, col)` of the offending input, when known.
    pub fn position(&self) -> (Option<usize>, Option<usize>) {
        match self {
            FrontError::FunctionLikeMacro { line, .. } | FrontError::UnterminatedComment { line } => {
                (Some(*line), None)
            }
            FrontError::UnknownCharacter { line, col, .. } | FrontError::SyntaxError { line, col, .. } => {
                (Some(*line), Some(*col))
            }
        }
    }
}

/// Preprocess, lex and parse a complete source file.
pub fn parse_source(source: &str) -> Result<AstNode, FrontError> {
    let text = preprocess(source)?;
    let tokens = lex(&text)?;
    parse(&tokens)
}
