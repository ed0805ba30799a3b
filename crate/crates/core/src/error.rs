use thiserror::Error;

use crate::config::Violation;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {}", list(.0))]
    InvalidConfig(Vec<Violation>),
    #[error("invalid cluster model: {0}")]
    InvalidModel(String),
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
