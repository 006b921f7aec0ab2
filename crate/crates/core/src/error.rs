use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter combination. `field` names the offending parameter(s).
    #[error("configuration error ({field}): {message}")]
    Config { field: String, message: String },

    /// Every problem found in a configuration file.
    #[error("{}", crate::config::render_issues(.0))]
    Invalid(Vec<crate::config::ConfigIssue>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("relaxation did not converge at rho={rho} after {steps} steps (residual {residual:e})")]
    NonConvergence { rho: f64, steps: usize, residual: f64 },

    #[error("CFL violation: dt={dt:e} exceeds the stable step {required:e}")]
    Cfl { dt: f64, required: f64 },

    #[error("negative or non-finite value {value:e} at cell {cell}, node {node}, step {step}")]
    Negativity { cell: usize, node: usize, step: usize, value: f64 },

    #[error("density {rho} exceeds the maximum density at cell {cell}, step {step}")]
    Overshoot { cell: usize, step: usize, rho: f64 },

    #[error("vehicle collision: non-positive headway {headway:e} behind vehicle {index} (try a smaller dt)")]
    Collision { index: usize, headway: f64 },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
