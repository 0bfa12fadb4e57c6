use thiserror::Error;

use crate::params::Violation;

/// Failures of the closed-form device equations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular input: {0}")]
    Singular(String),
}

/// Failures of the implicit time integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("time step {dt:.3e} s fell below dt_min at t = {t:.6e} s in segment `{segment}`; state: {state}")]
    StepTooSmall {
        t: f64,
        dt: f64,
        segment: String,
        state: String,
    },
    #[error("invalid waveform: {0}")]
    Waveform(String),
    #[error("non-finite value in solver: {0}")]
    NonFinite(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Config(#[from] crate::io::config::ConfigError),
    #[error("monte carlo: {0}")]
    MonteCarlo(String),
    #[error("calibration: {0}")]
    Fit(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
