use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside the domain")]
    Domain { function: &'static str, value: f64 },

    #[error("lambda must exceed 1 (got {0})")]
    LambdaOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no root of the matching condition for lambda = {lambda} with t <= {bound}")]
    NoRoot { lambda: f64, bound: f64 },

    #[error("kernel singular at coincident points ({x1}, {x2})")]
    Singular { x1: f64, x2: f64 },

    #[error("grid has {nodes} nodes; direct quadrature is capped at {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("impulse target {target} not reachable: I(lambda psi_+) = {available}")]
    BracketFailure { target: f64, available: f64 },

    #[error("CFL number {ratio:.4} exceeds 0.5")]
    Cfl { ratio: f64 },

    #[error("non-finite values at t = {time}")]
    NonFinite { time: f64 },

    #[error("unknown perturbation kind `{0}`")]
    UnknownPerturbation(String),

    #[error("malformed field dump {path}: {reason}")]
    Dump { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
