use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("registry: {0}")]
    Registry(String),

    #[error("font `{entry}`: face file {path}: {reason}")]
    FontFile {
        entry: String,
        path: PathBuf,
        reason: String,
    },

    #[error("font `{font}` has no glyphs for {missing:?} (coverage {coverage:.1}%)")]
    GlyphCoverage {
        font: String,
        missing: Vec<char>,
        coverage: f64,
    },

    #[error("render: {0}")]
    Render(String),

    #[error("insufficient fonts: {0}")]
    InsufficientFonts(String),

    #[error("generation: {0}")]
    Generation(String),

    #[error("invalid {what}: {value}")]
    InvalidValue { what: &'static str, value: String },

    #[error("perturbation: {0}")]
    Perturbation(String),

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("data leakage guard: {0}")]
    Leakage(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("image codec: {0}")]
    Codec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn invalid(what: &'static str, value: impl ToString) -> Self {
        Error::InvalidValue {
            what,
            value: value.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
