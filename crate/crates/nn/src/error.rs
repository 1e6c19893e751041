use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, NnError>;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("weights file {path}: bad magic {found:?}")]
    BadMagic { path: PathBuf, found: [u8; 4] },

    #[error("weights file {path}: malformed manifest: {detail}")]
    Manifest { path: PathBuf, detail: String },

    #[error("weights file {path}: tensor `{name}` has dims {found:?}, architecture expects {expected:?}")]
    WeightShape {
        path: PathBuf,
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("weights file {path}: payload truncated (expected {expected} bytes, found {found})")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
