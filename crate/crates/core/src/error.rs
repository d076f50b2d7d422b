use thiserror::Error;

use crate::diagnostics::TraceRecord;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("angle undefined: {0}")]
    UndefinedAngle(&'static str),
    #[error("iteration diverged at k = {k} (|z| = {norm:e})")]
    Divergence {
        k: usize,
        norm: f64,
        trace: Vec<TraceRecord>,
    },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
