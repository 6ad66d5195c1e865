use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the solvers, problem oracles and data readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("factorization did not converge (matrix inf-norm {norm:e})")]
    Factorization { norm: f64 },

    #[error("shifted system singular at lambda = {lambda:e}")]
    SingularShift { lambda: f64 },

    #[error(
        "CRN bisection did not converge after {iterations} iterations \
         (bracket [{lo:e}, {hi:e}], best residual {residual:e})"
    )]
    CrnNonConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("iterates diverged (|z| > 1e12) with stepsize {stepsize}")]
    Divergence { stepsize: f64 },

    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("in epoch {epoch}: {source}")]
    AtEpoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_epoch(self, epoch: usize) -> Self {
        Error::AtEpoch {
            epoch,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_)
            | Error::Factorization { .. }
            | Error::SingularShift { .. }
            | Error::CrnNonConvergence { .. }
            | Error::Divergence { .. } => true,
            Error::AtStep { source, .. } | Error::AtEpoch { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
