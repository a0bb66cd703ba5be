use alloc::string::String;

use crate::network::{EdgeId, NodeId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid road segment {edge}: {reason}")]
    InvalidSegment { edge: EdgeId, reason: &'static str },

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid piecewise-linear function: {0}")]
    InvalidBreakpoints(&'static str),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),

    #[error("node {0} is not a charging station")]
    NotAStation(NodeId),

    #[error("malformed plan: {0}")]
    MalformedPlan(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-physical regeneration cycle through node {node} in stage {stage}")]
    NegativeCycle { stage: usize, node: NodeId },

    #[error("destination unreachable in the extended graph")]
    Unreachable,

    #[error("oracle refused instance: {0}")]
    OracleRefused(String),

    #[error("scenario cannot be generated: {0}")]
    Generation(String),
}
