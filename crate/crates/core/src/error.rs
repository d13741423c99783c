use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no matches: {0}")]
    NoMatches(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("tuple (set {set}, view {view_m} -> {view_n}) references set {set} missing from view {missing_view}")]
    MissingSet {
        set: u32,
        view_m: u32,
        view_n: u32,
        missing_view: u32,
    },

    #[error("view {0} is missing from the feature or projection maps")]
    MissingView(u32),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}: malformed{at}: {message}", path = path.display(), at = offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Format {
        path: PathBuf,
        offset: Option<u64>,
        message: String,
    },

    #[error("{path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}", path = path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: Option<u64>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Path of the file involved, if any.
    pub fn path(&self) -> Option<&std::path::Path> {
        match self {
            Error::Format { path, .. }
            | Error::Io { path, .. }
            | Error::Image { path, .. } => Some(path),
            _ => None,
        }
    }

    /// Byte offset into [`Error::path`] where parsing failed, if known.
    pub fn offset(&self) -> Option<u64> {
        match self {
            Error::Format { offset, .. } => *offset,
            _ => None,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NoMatches(_) => "no_matches",
            Error::Empty(_) => "empty",
            Error::MissingSet { .. } => "missing_set",
            Error::MissingView(_) => "missing_view",
            Error::NonFinite(_) => "non_finite",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
        }
    }
}
