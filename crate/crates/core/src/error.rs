use thiserror::Error;

/// Errors raised by kernel construction, symbol evaluation, the spectral
/// operators and the solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}; only n = 1 and n = 2 are implemented")]
    UnsupportedDim(usize),

    #[error("invalid kernel specification: {0}")]
    InvalidSpec(String),

    #[error("normalization failed: {0}")]
    NormalizationFailure(String),

    #[error("horizon {delta} outside the admissible range {range} for the {regime} regime")]
    OutOfRangeDelta {
        delta: f64,
        regime: &'static str,
        range: String,
    },

    #[error("kernel profile vanishes at r = {0}")]
    ZeroProfile(f64),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("symbol too small to invert ({value:e} at index {index})")]
    SingularSymbol { value: f64, index: usize },

    #[error("horizon {delta} does not fit in the torus of length {length}")]
    HorizonTooLarge { delta: f64, length: f64 },

    #[error("horizon {delta} is below the resolved range (h = {spacing}, need delta >= {min})")]
    UnresolvedHorizon { delta: f64, spacing: f64, min: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
