use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("grids are not aligned: {0}")]
    Alignment(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("labeling error: {0}")]
    Labeling(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image encoding: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than a defect or
    /// environment failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Image(_) | Error::Json(_))
    }
}
