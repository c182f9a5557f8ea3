use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("selector matrix is rank deficient (singular values {smallest:e} / {largest:e})")]
    RankDeficient { smallest: f64, largest: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical blowup at step {step} (t = {time}){}", sample.map(|s| format!(" in sample {s}")).unwrap_or_default())]
    NumericalBlowup {
        step: u64,
        time: f64,
        sample: Option<usize>,
    },

    #[error("time grids of the trajectories do not match")]
    GridMismatch,

    #[error("model {0} has no diffusion coefficient and cannot be thermostatted")]
    UnsupportedModel(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach the index of the Monte Carlo sample that produced a blowup.
    pub fn with_sample(self, index: usize) -> Self {
        match self {
            Error::NumericalBlowup { step, time, .. } => Error::NumericalBlowup {
                step,
                time,
                sample: Some(index),
            },
            other => other,
        }
    }
}
