use thiserror::Error;

use crate::graph::Label;

/// Errors produced by graph construction, materialization and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),

    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(String, String),

    #[error("self loop at {0}")]
    SelfLoop(String),

    #[error("invalid weight {value} on edge {u}-{v}")]
    InvalidWeight { u: String, v: String, value: f64 },

    #[error("invalid measure {value} at vertex {vertex}")]
    InvalidMeasure { vertex: String, value: f64 },

    #[error("graph is disconnected: {reached} of {total} vertices reachable from {start}")]
    Disconnected {
        start: String,
        reached: usize,
        total: usize,
    },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("function value missing at vertex {0}")]
    MissingValue(Label),

    #[error("sequence `{name}` is undefined at index {index}: {reason}")]
    Sequence {
        name: String,
        index: usize,
        reason: String,
    },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("vertex {0} not found within radius {1}")]
    NotFound(String, usize),

    #[error("Dirichlet interior contains frontier vertex {0}")]
    InteriorTouchesFrontier(Label),

    #[error("interior vertex {interior} has neighbor {neighbor} outside interior and boundary")]
    OpenBoundary { interior: Label, neighbor: Label },

    #[error("interior and boundary overlap at {0}")]
    Overlap(Label),

    #[error("singular or ill-conditioned Dirichlet system (pivot {pivot:e} at row {row}, condition estimate {condition:e})")]
    Singular {
        row: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("conjugate gradient did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("heat integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal consistency violation: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
