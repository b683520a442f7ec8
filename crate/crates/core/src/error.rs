use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the alignment library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: entity `{label}` is not present in {graph}", path.display())]
    DanglingId {
        path: PathBuf,
        line: usize,
        label: String,
        graph: &'static str,
    },

    #[error("{}:{line}: feature dimension {found} does not match {expected}", path.display())]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("entity `{label}` of {graph} has no feature row")]
    MissingFeatures { graph: &'static str, label: String },

    #[error("{}:{line}: {side} entity `{label}` appears in more than one seed alignment", path.display())]
    DuplicateAlignment {
        path: PathBuf,
        line: usize,
        side: &'static str,
        label: String,
    },

    #[error("pair ({left}, {right}) conflicts with working-set pair ({other_left}, {other_right})")]
    AlignmentConflict {
        left: usize,
        right: usize,
        other_left: usize,
        other_right: usize,
    },

    #[error("selected pairs are not one-to-one: entity {entity} on the {side} side is reused")]
    SelectionConflict { side: &'static str, entity: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("transport kernel is not finite; cost scale {scale} is too large for beta {beta}")]
    NonFiniteKernel { scale: f64, beta: f64 },

    #[error("{0} is empty")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
