use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid dimensions, counts, weights or other caller-supplied values.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Registration was asked to solve with zero residuals.
    #[error("no constraints: correspondence set is empty")]
    NoConstraints,

    #[error("non-finite Gauss-Newton step at iteration {iteration}")]
    Numerical { iteration: usize },

    /// Matrix failed a structural precondition (e.g. symmetry).
    #[error("shape error: {0}")]
    Shape(String),

    /// Quaternion blend collapsed to (near) zero norm.
    #[error("degenerate quaternion blend (combination norm {norm:e})")]
    DegenerateBlend { norm: f64 },

    #[error("trajectory alignment error: {0}")]
    Alignment(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Whether this error comes from the filesystem rather than from bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}
