use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// An integrand returned NaN or an infinity at an interior sample point.
    #[error("integrand is not finite at x = {abscissa:e}")]
    NonFinite { abscissa: f64 },

    /// A spectral multiplier was asked for a value below its domain floor.
    #[error("spectral-domain error: coefficient index {index} lies below the multiplier floor {floor}")]
    SpectralDomain { index: usize, floor: f64 },

    #[error("overflow in series term {index}")]
    Overflow { index: usize },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("out of range: {0}")]
    Range(String),

    /// The right-hand side lies outside the range of the integral operator.
    #[error("not solvable: {0}")]
    Solvability(String),
}

impl Error {
    /// Prefixes the message with the operation that failed.
    pub(crate) fn context(self, what: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{what}: {m}")),
            Error::Divergence(m) => Error::Divergence(format!("{what}: {m}")),
            Error::Convergence(m) => Error::Convergence(format!("{what}: {m}")),
            Error::Range(m) => Error::Range(format!("{what}: {m}")),
            Error::Solvability(m) => Error::Solvability(format!("{what}: {m}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
