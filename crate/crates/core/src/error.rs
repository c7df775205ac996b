use thiserror::Error;

/// Errors raised by the solvers, simulators and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("stock volatility has deficient row rank at v = {point:?}")]
    RankDeficient { point: Vec<f64> },

    #[error("point {point:?} lies outside the {set} set")]
    NotInSet { set: &'static str, point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("path {path} produced a non-finite state at step {step}")]
    Divergence { path: usize, step: usize },

    #[error(
        "{solver} did not converge after {iterations} iterations (last residual {residual:.3e})"
    )]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("time step {dt} exceeds the stability bound {bound:.3e} (node {node})")]
    StepSize { dt: f64, bound: f64, node: usize },

    #[error("generator dominance fails at v = {v:?}, z = {z:?} (G1 - G2 = {gap:.3e})")]
    Dominance { v: Vec<f64>, z: Vec<f64>, gap: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
