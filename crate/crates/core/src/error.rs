use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant carries enough context to be rendered as a machine-readable
/// error document by the CLI (see [`Error::kind`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {t} lies outside the model domain [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("derivative/cumulant order {order} exceeds the supported cap {cap}")]
    UnsupportedOrder { order: usize, cap: usize },

    #[error("energy density {epsilon} is outside the range of F' ({lower}, {upper})")]
    OutOfSpectrum { epsilon: f64, lower: f64, upper: f64 },

    #[error("need at least {needed} coefficients, got {got}")]
    Arity { needed: usize, got: usize },

    #[error("Hankel determinant {n} is not positive: the moment sequence is not a valid measure")]
    IndefiniteMoments { n: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: String,
        iterations: usize,
        residual: f64,
        best: Option<(f64, f64)>,
    },

    #[error("energy window [{lower}, {upper}] leaves the range of F'")]
    SpectrumBound { lower: f64, upper: f64 },

    #[error("Lanczos L-function became non-positive at s = {s}")]
    Breakdown { s: f64 },

    #[error("equilibrium density is negative ({min_density:e}); the one-cut interval is invalid")]
    InvalidInterval { min_density: f64 },

    #[error("overlap integral does not converge: {0}")]
    NonIntegrable(String),

    #[error("energy {re}+{im}i lies on the support; the n-th root branch is undefined")]
    Branch { re: f64, im: f64 },

    #[error("continued fraction hit a zero denominator at level {level}")]
    Pole { level: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("at s = {s}: {source}")]
    AtS {
        s: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short stable identifier used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::UnsupportedOrder { .. } => "unsupported_order",
            Error::OutOfSpectrum { .. } => "out_of_spectrum",
            Error::Arity { .. } => "arity",
            Error::IndefiniteMoments { .. } => "indefinite_moments",
            Error::InvalidModel(_) => "invalid_model",
            Error::Degenerate(_) => "degenerate",
            Error::Convergence { .. } => "convergence",
            Error::SpectrumBound { .. } => "spectrum_bound",
            Error::Breakdown { .. } => "breakdown",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::NonIntegrable(_) => "non_integrable",
            Error::Branch { .. } => "branch",
            Error::Pole { .. } => "pole",
            Error::Parse(_) => "parse",
            Error::Internal(_) => "internal",
            Error::AtS { source, .. } => source.kind(),
        }
    }

    pub(crate) fn at_s(self, s: f64) -> Error {
        Error::AtS {
            s,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
