use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable `{name}` has inconsistent bounds [{lower}, {upper}]")]
    InconsistentBounds { name: String, lower: f64, upper: f64 },

    #[error("constraint `{constraint}` references undeclared variable index {index}")]
    UnknownVariable { constraint: String, index: usize },

    #[error("non-finite coefficient in {context}")]
    NonFinite { context: String },

    #[error("iteration limit {limit} exceeded (phase {phase}, objective {objective})")]
    IterationLimit { limit: usize, phase: u8, objective: f64 },

    #[error("backend solver failure: {0}")]
    Backend(String),

    #[error("MPS format error on line {line}: {message}")]
    Mps { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, LpError>;
