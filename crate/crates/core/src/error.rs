use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("insufficient tissue: {stained} stained pixels, need {required}")]
    InsufficientTissue { stained: usize, required: usize },

    #[error("degenerate stain distribution: {0}")]
    DegenerateStain(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("strategy unavailable: {0}")]
    StrategyUnavailable(String),

    #[error("triage failed: only {valid} valid strategy verdicts")]
    TriageFailed { valid: usize },

    #[error("slide has no tissue patches")]
    EmptySlide,

    #[error("no tumor patches detected")]
    NoTumorDetected,

    #[error("report inconsistent: {0}")]
    ReportInconsistent(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
