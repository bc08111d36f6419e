use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at {re}{im:+}i")]
    GammaPole { re: f64, im: f64 },

    #[error("value out of floating-point range: {0}")]
    Overflow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("structural violation: {}", .0.join("; "))]
    Structural(Vec<String>),

    #[error("no separating strip: {0}")]
    NoSeparatingStrip(String),

    #[error("mellin-barnes integral did not converge after {rounds} rounds (last relative change {last_change:.3e})")]
    NonConvergence { rounds: usize, last_change: f64 },

    #[error("imaginary residue {residue:.3e} exceeds threshold relative to result {value:.3e}")]
    ImaginaryResidue { value: f64, residue: f64 },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("eta = 1 is degenerate; use eta = 1 - 1e-6 (see FadingParams::with_eta_limit)")]
    EtaEqualsOne,

    #[error("invalid constellation size M = {0}: must be a multiple of 4 and at least 8")]
    InvalidConstellation(u32),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl Error {
    /// Errors caused by the caller's input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Structural(_)
                | Error::EtaEqualsOne
                | Error::InvalidConstellation(_)
                | Error::Serialization(_)
        )
    }
}
