//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed shapes, missing columns, inconsistent lengths. Distinct from
    /// dataset invariant violations, which are reported, not raised.
    #[error("structural error: {0}")]
    Structural(String),

    /// Bad or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Input data that cannot be ingested (beyond schema shape problems).
    #[error("data error: {0}")]
    Data(String),

    /// A regression stratum required by an estimator is empty.
    #[error("empty regression stratum at interval {interval}: {context}")]
    EmptyStratum { interval: usize, context: String },

    /// Numerical failure (non-finite inputs, singular systems, divergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
