use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("smoothing parameter must be positive for finite differences")]
    NonPositiveSmoothing,

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("service evaluation failed (|theta| = {theta_norm:.6e}, h = {h:?}): {reason}")]
    Service {
        theta_norm: f64,
        h: Vec<f64>,
        reason: String,
    },

    #[error("analytic {0} required when mu_s = 0")]
    MissingGradient(&'static str),

    #[error("numerical abort at iteration {iter}: {detail}")]
    NumericalAbort { iter: u64, detail: String },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("trace parse error at line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    #[error("unknown series `{0}`")]
    UnknownSeries(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension { what, expected, got })
        }
    }
}
