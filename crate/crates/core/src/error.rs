use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coordinate {0} has zero variance")]
    DegenerateCoordinate(usize),

    #[error("joint {joint} has non-positive depth {depth}")]
    NonPositiveDepth { joint: usize, depth: f64 },

    #[error("backward called before forward")]
    BackwardBeforeForward,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("invalid ordinal code {code} at ({row}, {col})")]
    InvalidCode { row: usize, col: usize, code: u8 },

    #[error("list is empty")]
    EmptyList,

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{}:{line}: {msg}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            line,
            msg: msg.into(),
        }
    }

    /// Attaches a file path to a parse error; other variants pass through.
    pub fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: Some(p.into()),
                line,
                msg,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
