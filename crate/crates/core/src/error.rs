use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    ShapeMismatch {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("svd did not converge after {0} sweeps")]
    SvdNoConvergence(usize),

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("matrix is rank deficient: sigma_min {sigma_min:e} <= {threshold:e}")]
    RankDeficient { sigma_min: f64, threshold: f64 },

    #[error("rank failure with beta > 0 at anchor {anchor}")]
    RankFailure { anchor: usize },

    #[error("dataset has {size} samples, need more than k = {k}")]
    DatasetTooSmall { size: usize, k: usize },

    #[error("degenerate probe: joint {joint} moved by {delta:e} rad")]
    DegenerateProbe { joint: usize, delta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
