use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A strategy is not admissible for the kernel it is evaluated under.
    #[error("inadmissible strategy: {0}")]
    Admissibility(String),

    /// A structural mismatch between inputs (grids, dimensions, variable sets).
    #[error("structural error: {0}")]
    Structural(String),

    /// A computation tried to consume the infinite value of a singular kernel.
    #[error("infinite value consumed in arithmetic: {0}")]
    InfiniteValue(String),

    /// A numerical procedure failed (quadrature, factorization, linear solve).
    #[error("numerical failure: {message} (achieved {achieved:e})")]
    Numerical { message: String, achieved: f64 },

    /// Exact scenario enumeration would exceed the configured cap.
    #[error("{combinations} scenario combinations exceed the exact-enumeration cap of {cap}; estimate with market_sim::monte_carlo_objective instead")]
    EnumerationCap { combinations: u128, cap: u128 },

    /// Invalid configuration or model parameters.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            achieved,
        }
    }
}
