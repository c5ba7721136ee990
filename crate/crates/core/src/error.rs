use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Byte range into expression source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        SourceSpan { start, end }
    }

    pub fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("cannot seed a jet with zero variables")]
    EmptySeed,
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("expected {expected} coefficients, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("multi-index has {found} entries, jet has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    IndexBeyondOrder { degree: usize, order: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {span}: {message}")]
    Syntax { message: String, span: SourceSpan },
    #[error("unknown identifier `{name}` at {span}")]
    UnknownIdentifier { name: String, span: SourceSpan },
    #[error("variable `{name}` at {span} is out of range for dimension {dimension}")]
    VariableOutOfRange {
        name: String,
        dimension: usize,
        span: SourceSpan,
    },
    #[error("exponent at {span} must be a numeric constant")]
    NonConstantExponent { span: SourceSpan },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnknownIdentifier { span, .. }
            | ParseError::VariableOutOfRange { span, .. }
            | ParseError::NonConstantExponent { span } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in {op} at {span}: argument {value}")]
    Domain {
        op: &'static str,
        value: f64,
        span: SourceSpan,
    },
    #[error("parameter `{name}` at {span} has no value")]
    UnboundParameter { name: String, span: SourceSpan },
    #[error("variable `{name}` at {span} is not bound in the environment")]
    UnboundVariable { name: String, span: SourceSpan },
}

impl EvalError {
    pub fn span(&self) -> SourceSpan {
        match self {
            EvalError::Domain { span, .. }
            | EvalError::UnboundParameter { span, .. }
            | EvalError::UnboundVariable { span, .. } => *span,
        }
    }
}

/// Crate-level error.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("in `{context}`: {source}")]
    ParseIn {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),
    #[error("metric rejected: {0}")]
    InvalidMetric(String),
    #[error("y = {y:?} is too close to the zero section (|y| < 1e-12)")]
    ZeroSection { y: Vec<f64> },
    #[error("fundamental tensor is not positive definite at x = {x:?}, y = {y:?} (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite {
        x: Vec<f64>,
        y: Vec<f64>,
        min_eigenvalue: f64,
    },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    NonConvergence { iterations: usize, last_update: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unsupported dimension {0} (supported: 2, 3, 4)")]
    UnsupportedDimension(usize),
    #[error("{context} at quadrature node {node}: {source}")]
    AtNode {
        node: usize,
        context: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{0}")]
    Io(String),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    /// Input problems (bad files, specs, flags) as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse(_)
            | Error::ParseIn { .. }
            | Error::InvalidSpec(_)
            | Error::InvalidMetric(_)
            | Error::UnsupportedDimension(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Argument(_) => true,
            Error::AtNode { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    pub(crate) fn at_node(node: usize, context: &'static str, source: Error) -> Self {
        Error::AtNode {
            node,
            context,
            source: Box::new(source),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
