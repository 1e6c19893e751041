use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        path: PathBuf,
        found: Vec<u8>,
        expected: &'static str,
    },

    #[error("{path}: truncated payload ({found} bytes, need {expected})")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    #[error("png encoding failed: {0}")]
    Png(String),

    #[error(transparent)]
    Nn(#[from] mrisr_nn::NnError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 configuration, 3 data, 4 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        use mrisr_nn::NnError;
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Nn(NnError::Config(_)) => 2,
            Error::Divergence { .. } | Error::Nn(NnError::NonFiniteGradient(_)) => 4,
            _ => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
