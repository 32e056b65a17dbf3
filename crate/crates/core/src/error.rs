use std::path::PathBuf;

use thiserror::Error;

use crate::ontology::{NodeId, NodeKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error at node `{node}`: {reason}")]
    Validation { node: String, reason: String },

    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),

    #[error("node `{id}` is a {actual}, expected a {expected}")]
    WrongKind {
        id: NodeId,
        expected: NodeKind,
        actual: NodeKind,
    },

    #[error("empty candidate pool: the restriction {restriction:?} selects no events")]
    EmptyPool { restriction: Vec<NodeId> },

    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("unknown video `{0}`")]
    UnknownVideo(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("insufficient negatives for `{concept}`: need {needed}, only {available} available")]
    InsufficientNegatives {
        concept: NodeId,
        needed: usize,
        available: usize,
    },

    #[error("checksum mismatch: declared {declared}, computed {computed}")]
    Checksum { declared: String, computed: String },

    #[error("similarity backend not configured: {0}")]
    BackendNotConfigured(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(node: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            node: node.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}
