use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("schema error: missing required column `{column}`")]
    MissingColumn { column: String },

    #[error("schema error: unexpected column `{column}`")]
    UnexpectedColumn { column: String },

    #[error("row {row}: column `{column}`: {message}")]
    Field {
        row: usize,
        column: String,
        message: String,
    },

    #[error("row {row}: label `{value}` is outside {{0, 1}}")]
    LabelDomain { row: usize, value: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in feature {feature} at row {row}")]
    NonFinite { row: usize, feature: usize },

    #[error("external scores do not cover row {row}")]
    MissingRow { row: String },

    #[error("duplicate entry for row {row}")]
    DuplicateRow { row: String },

    #[error("row {row}: probability {value} is outside [0, 1]")]
    ProbabilityRange { row: String, value: f64 },

    #[error("model format error: {0}")]
    Format(String),

    #[error("unsupported model format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("model checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("model file is truncated")]
    Truncated,

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
