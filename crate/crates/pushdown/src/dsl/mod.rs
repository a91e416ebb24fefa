//! Front end for the pipeline DSL: lexer, parser, pretty-printer and the
//! typechecker that lowers a program to a [`PipelineTask`].

pub mod ast;
mod lexer;
mod parser;
pub mod pretty;
mod typecheck;

pub use parser::{parse, parse_expr};
pub use typecheck::{parse_atom, typecheck, PipelineTask, CNF_CAP};

use ast::Span;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Type,
    /// `fix` lambdas parse but have no semantics.
    Fix,
    Fold,
    Match,
    Cnf,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Type => "type error",
            ErrorKind::Fix => "unsupported fix",
            ErrorKind::Fold => "fold error",
            ErrorKind::Match => "match error",
            ErrorKind::Cnf => "normalization error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at {line}:{col}: {message}")]
pub struct DslError {
    pub kind: ErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Tokens that would have been accepted, for syntax errors.
    pub expected: Vec<String>,
}

impl DslError {
    pub fn new(kind: ErrorKind, span: Span, message: impl Into<String>) -> DslError {
        DslError { kind, line: span.line, col: span.col, message: message.into(), expected: Vec::new() }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> DslError {
        DslError::new(ErrorKind::Syntax, span, message)
    }

    pub fn expected(span: Span, what: &[&str], found: &str) -> DslError {
        let expected: Vec<String> = what.iter().map(|s| s.to_string()).collect();
        let message = if expected.len() == 1 {
            format!("expected {}, found {found}", expected[0])
        } else {
            format!("expected one of {}, found {found}", expected.join(", "))
        };
        DslError { expected, ..DslError::syntax(span, message) }
    }

    pub fn ty(span: Span, message: impl Into<String>) -> DslError {
        DslError::new(ErrorKind::Type, span, message)
    }
}
