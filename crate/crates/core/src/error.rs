use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a scalar map (negative radius, non-positive exponent, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inversion of the unregularized map requested outside the open unit ball.
    #[error("value {y} lies outside the range of the constitutive map (|y| must be < 1 when epsilon = 0)")]
    DomainExceeded { y: f64 },

    #[error("{what} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("explicit step dt = {dt:e} exceeds the stability bound {bound:e}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed field snapshot: {0}")]
    Format(String),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("run for epsilon = {epsilon:e} failed: {source}")]
    AtEpsilon {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than by a
    /// failing numerical computation.
    pub fn is_configuration(&self) -> bool {
        match self {
            Error::Domain(_)
            | Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::Config(_)
            | Error::GridMismatch(_) => true,
            Error::AtTime { source, .. } | Error::AtEpsilon { source, .. } => {
                source.is_configuration()
            }
            _ => false,
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }
}
