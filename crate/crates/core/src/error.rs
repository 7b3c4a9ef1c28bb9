use std::fmt;

use thiserror::Error;

/// Position of a parse failure. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    Arity { func: String, got: usize },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::Arity { func, got } => {
                write!(f, "`{func}` takes exactly 1 argument, got {got}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Position,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: index range {lo}..{hi} is not admissible ({reason})")]
    Range {
        op: &'static str,
        lo: usize,
        hi: usize,
        reason: &'static str,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in signal at index {index}")]
    NonFinite { index: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("domain error in {component}: {detail}")]
    Domain { component: String, detail: String },

    #[error("singular shift transformation at q={q:?}, z={z:?}")]
    SingularTransform { q: Vec<f64>, z: Vec<f64> },

    #[error("implicit solve did not converge at step {step} (residual {residual:e})")]
    Integration { step: usize, residual: f64 },

    #[error("implicit solve did not converge (residual {residual:e})")]
    NotConverged { residual: f64 },

    #[error("singular Jacobian in implicit solve")]
    SingularJacobian,

    #[error("Lagrangian is not admissible at q={q:?}, v={v:?}: d2L/dv2 is singular")]
    NonAdmissible { q: Vec<f64>, v: Vec<f64> },

    #[error("field has form {got} but {expected} is required")]
    WrongForm { expected: &'static str, got: &'static str },

    #[error("no samples to evaluate")]
    EmptySamples,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::SingularTransform { .. }
                | Error::Integration { .. }
                | Error::NotConverged { .. }
                | Error::SingularJacobian
                | Error::NonAdmissible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
