use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter vector contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("cannot scale a zero vector to norm {target}")]
    ZeroScale { target: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible weight constraints: {n} edges x zeta {zeta} exceeds tau {tau}")]
    Infeasible { n: usize, zeta: f64, tau: f64 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
