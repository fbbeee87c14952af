use thiserror::Error;

/// Unified error type for the whole library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested configuration cannot be honoured (precision too small
    /// or too large, malformed RNG spec, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A result could not be certified to the required relative accuracy,
    /// even after exhausting the automatic precision escalations.
    #[error(
        "precision loss at n={n}: |value| ~ {value_mag:.3e} with absolute error bound ~ {error_mag:.3e} \
         after {escalations} escalation(s); raise the precision"
    )]
    PrecisionLoss {
        n: u64,
        value_mag: f64,
        error_mag: f64,
        escalations: u32,
    },

    /// The quadrature engine ran out of refinement levels before the
    /// requested tolerance was met.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A series or dynamic-programming truncation tolerance could not be
    /// reached within the allowed horizon.
    #[error("truncation tolerance unreachable: {0}")]
    Truncation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
