use thiserror::Error;

/// Crate-wide error type.
///
/// Variants distinguish malformed input data ([`Error::Csv`],
/// [`Error::InvalidDataset`], [`Error::Json`]) from bad configuration
/// ([`Error::InvalidConfig`], [`Error::TomlParse`]) so callers can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("toml serialize error: {0}")]
    TomlEmit(#[from] toml::ser::Error),

    /// CSV rows and columns are reported 1-based, as an editor would show them.
    #[error("csv parse error at line {line}, column {column}: {message}")]
    Csv {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid model file: {0}")]
    InvalidModel(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("design matrix is rank deficient; column {column:?} is linearly dependent on earlier columns")]
    RankDeficient { column: String },

    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn csv(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Csv {
            line,
            column,
            message: message.into(),
        }
    }
}
