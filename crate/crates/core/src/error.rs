use gridnwa_lp::LpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver: {0}")]
    Solver(#[from] LpError),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unbounded: {0}")]
    Unbounded(String),
    #[error("solution failed certification: {0}")]
    Uncertified(String),
    #[error("no convergence after {iterations} iterations (diagnostic {diagnostic:.3e})")]
    NonConvergence { iterations: usize, diagnostic: f64 },
    #[error("no sign change on the cost ray (option value {low:.2} at start, {high:.2} at end)")]
    NoSignChange { low: f64, high: f64 },
}

impl CoreError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    pub fn parse(source_name: impl Into<String>, message: impl ToString) -> Self {
        Self::Parse {
            source_name: source_name.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
