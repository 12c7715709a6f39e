use thiserror::Error;

use crate::network::VertexId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no value for vertex {0} (domain mismatch)")]
    DomainMismatch(VertexId),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vertex {0} is not connected to the boundary set")]
    Disconnected(VertexId),

    #[error("not a resistance metric: recovered conductance w({u},{v}) = {w:e}")]
    NotResistanceMetric { u: VertexId, v: VertexId, w: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("identity check failed: {0}")]
    IdentityViolated(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
