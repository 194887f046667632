use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("not found: {what} (best value {best})")]
    NotFound { what: String, best: f64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("orbit escaped the cube at step {step}")]
    Escaped { step: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
