use std::path::PathBuf;

use thiserror::Error;

/// Network layer named in shape errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Input,
    Hidden,
    Output,
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Layer::Input => f.write_str("input"),
            Layer::Hidden => f.write_str("hidden"),
            Layer::Output => f.write_str("output"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at {layer} layer: expected {expected}, got {actual}")]
    Dimension {
        layer: Layer,
        expected: String,
        actual: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite cost {cost} at iteration {iteration}{}", candidate.map(|c| format!(" (candidate {c})")).unwrap_or_default())]
    Numeric {
        iteration: u64,
        candidate: Option<usize>,
        cost: f64,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("bad magic number: expected {expected} (0x{expected:08x}), found {actual} (0x{actual:08x})")]
    Magic { expected: u32, actual: u32 },

    #[error("length error: {0}")]
    Length(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The underlying error, looking through any file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
