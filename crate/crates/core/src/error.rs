use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid unfolding mode {0}, expected 1, 2 or 3")]
    InvalidMode(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("rank {k} is not identifiable for a {d1}x{d2}x{d3} tensor")]
    NotIdentifiable { k: usize, d1: usize, d2: usize, d3: usize },

    #[error("mask is not unit modulus and the weighted solver is disabled")]
    MaskRejected,

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("cannot write {path}: {detail}")]
    Io { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}
