use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Argument outside the supported range of an implementation.
    #[error("range error: {0}")]
    Range(String),
    /// An iteration failed to converge or a system was singular.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Invalid configuration or inconsistent problem data.
    #[error("configuration error: {0}")]
    Config(String),
    /// Coefficient validation failure at specific sample points.
    #[error("validation error: {message} (offending points: {points:?})")]
    Validation {
        message: String,
        points: Vec<[f64; 2]>,
    },
    /// A geometric query that has no unique answer, e.g. a normal at a corner.
    #[error("ambiguous query: {0}")]
    Ambiguity(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation { .. } | Error::Ambiguity(_) => 2,
            Error::Domain(_) | Error::Range(_) | Error::Numerical(_) => 3,
            Error::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
            Error::Validation { .. } => "validation",
            Error::Ambiguity(_) => "ambiguity",
            Error::Io(_) => "io",
        }
    }
}
