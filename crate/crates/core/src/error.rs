use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

/// Errors produced by graph loading, sampling, learning and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed edge list line: {msg}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("edge list {path} contains no usable edges")]
    EmptyEdgeList { path: PathBuf },

    #[error("node {0} is not observed")]
    NotObserved(NodeId),

    #[error("node {0} was already probed")]
    AlreadyProbed(NodeId),

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sampler missed the edge target after {iterations} attempts (achieved {achieved}, target {target})")]
    SampleTargetUnreachable {
        iterations: usize,
        achieved: usize,
        target: f64,
    },

    #[error("random walk exhausted its step budget ({steps} steps, {achieved}/{target} edges discovered)")]
    WalkBudgetExhausted {
        steps: usize,
        achieved: usize,
        target: usize,
    },

    #[error("stub pairing could not produce a simple graph within the repair budget")]
    PairingBudgetExhausted,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("subsample count k = {k} exceeds the {n} buffered samples")]
    TooManySubsamples { k: usize, n: usize },

    #[error("regression buffer is empty")]
    EmptyBuffer,

    #[error("no unprobed observed node is available (step {step})")]
    NoCandidates { step: usize },

    #[error("cannot aggregate traces of unequal length ({0} vs {1})")]
    UnequalTraceLengths(usize, usize),

    #[error("baseline cumulative reward must be positive, got {0}")]
    NonPositiveBaseline(f64),

    #[error("{path}:{line}: {msg}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
