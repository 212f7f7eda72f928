use thiserror::Error;

use crate::clustering::ClusterId;
use crate::graph::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("vertex {0} already exists")]
    DuplicateVertex(VertexId),
    #[error("vertex {0} not found")]
    VertexNotFound(VertexId),
    #[error("vertex {0} still has positive edges")]
    HasPositiveEdges(VertexId),
    #[error("self loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertices {0} and {1} are not positively adjacent")]
    NotPositiveAdjacent(VertexId, VertexId),
    #[error("edge {{{0}, {1}}} is not positive (structural flip not applied?)")]
    EdgeNotPositive(VertexId, VertexId),
    #[error("edge {{{0}, {1}}} is not negative (structural flip not applied?)")]
    EdgeNotNegative(VertexId, VertexId),
    #[error("clustering is not a partition of the vertex set: {0}")]
    NotAPartition(String),
    #[error("vertex {0} is not a singleton cluster")]
    NotASingleton(VertexId),
    #[error("cluster {0} left unprocessed during maintenance")]
    UnprocessedCluster(ClusterId),
    #[error("instance with {0} vertices is too large for exhaustive search")]
    TooLarge(usize),
    #[error("invalid epsilon: {0}")]
    InvalidEpsilon(String),
    #[error("invalid rational: {0}")]
    InvalidRatio(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
