use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the model, from mode ingestion to trajectory integration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: estimate {estimate:e}, attained error {error:e}, requested {requested:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        requested: f64,
    },

    #[error("mode table {path}:{line}: {message}")]
    ModeTable {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no waist in (0, {base_waist}] keeps order {order} inside the core at fraction {threshold}")]
    Containment {
        order: usize,
        base_waist: f64,
        threshold: f64,
    },

    #[error("divergent mode loss at k = 0")]
    DivergentLoss,

    #[error("diffusion tensor is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("non-finite force at t = {t}: {detail}")]
    NonFiniteForce { t: f64, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable kind, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Quadrature { .. } => "quadrature",
            Error::ModeTable { .. } => "mode_table",
            Error::Containment { .. } => "containment",
            Error::DivergentLoss => "divergent_loss",
            Error::NotPsd { .. } => "not_psd",
            Error::NonFiniteForce { .. } => "non_finite_force",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}
