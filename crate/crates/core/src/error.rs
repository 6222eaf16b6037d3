use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The design has no signal direction the estimator can use
    /// (e.g. `Z Zᵀ = 0`, so `trace(I - V⁻¹)` vanishes).
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "no sign change of the SNR likelihood equation in [{lo:e}, {hi:e}] \
         (delta(lo) = {delta_lo:e}, delta(hi) = {delta_hi:e})"
    )]
    NoRoot {
        lo: f64,
        hi: f64,
        delta_lo: f64,
        delta_hi: f64,
    },

    #[error("quadrature did not reach tolerance {target:e} (achieved {achieved:e})")]
    Quadrature { achieved: f64, target: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn ensure_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
