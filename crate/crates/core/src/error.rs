use thiserror::Error;

use crate::conic::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("HAP {hap} requesting content {content} is unreachable from every source")]
    Unreachable { content: usize, hap: usize },
    #[error("Gaussian randomization found no feasible beam set at HAP {hap}")]
    RandomizationFailed { hap: usize },
    #[error("non-finite loss in {0}")]
    NonFiniteLoss(&'static str),
    #[error("empty batch")]
    EmptyBatch,
    #[error("demand inconsistent with placement: {0}")]
    DemandInconsistent(String),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
