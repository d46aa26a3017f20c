//! Error types shared across the crate.

use thiserror::Error;

use crate::expr::{DiffError, EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error(transparent)]
    Diff(#[from] DiffError),

    #[error("point is not admissible: x={x:?}, y={y:?}")]
    NotAdmissible { x: Vec<f64>, y: Vec<f64> },

    #[error("degenerate metric: |det g| = {det:.3e} below threshold {threshold:.3e}")]
    DegenerateMetric { det: f64, threshold: f64 },

    #[error("trajectory left the admissible domain at t = {t}")]
    DomainExit { t: f64 },

    #[error("integration step failure: {0}")]
    StepFailure(String),

    #[error("admissible sampler exhausted after {rejections} consecutive rejections")]
    SamplerExhausted { rejections: usize },

    #[error("chart map error: {0}")]
    Chart(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
