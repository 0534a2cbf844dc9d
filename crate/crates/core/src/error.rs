use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeoflowError>;

#[derive(Debug, Error)]
pub enum GeoflowError {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("NTK Gram matrix is singular (lambda_min = {lambda_min:.3e})")]
    SingularKernel { lambda_min: f64 },

    #[error("invalid regulariser: {0}")]
    InvalidRegulariser(String),

    #[error("gradient flow diverged at step {step} (t = {t}): non-finite {quantity}")]
    Divergence {
        step: usize,
        t: f64,
        quantity: &'static str,
        last_good: Vec<f64>,
    },

    #[error("step-size guard failed: step {step_size:.3e} still violates 2*lambda_max*h < 1 after {halvings} halvings (lambda_max = {lambda_max:.3e})")]
    StepSizeGuard {
        step_size: f64,
        lambda_max: f64,
        halvings: usize,
    },

    #[error("rank collapse along control path at segment {segment} (lambda_min = {lambda_min:.3e})")]
    RankCollapse { segment: usize, lambda_min: f64 },

    #[error("points lie on different output fibres (output gap {gap:.3e} >= tolerance {tolerance:.3e})")]
    DifferentFibres { gap: f64, tolerance: f64 },

    #[error("fibre continuation failed: {0}")]
    Continuation(String),

    #[error("representative-map probe failed at c = {c:?}: {reason}")]
    ProbeFailed { c: Vec<f64>, reason: String },

    #[error("energy solves did not converge at c = {failed:?}")]
    EnergyGrid { failed: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GeoflowError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GeoflowError::Io {
            path: path.into(),
            source,
        }
    }
}
