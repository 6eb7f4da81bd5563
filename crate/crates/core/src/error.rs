//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by generation, networks, metrics and the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A feature or dataset specification violates its invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input length does not match the expected shape.
    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// A non-finite value appeared during a forward or backward sweep.
    #[error("non-finite value at tape node {node} ({op})")]
    Numeric { node: usize, op: &'static str },

    /// Spearman correlation is undefined because one input has no rank
    /// variation. Reported as missing by aggregation, never as zero.
    #[error("correlation undefined: an input is constant")]
    DegenerateCorrelation,

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    /// A pipeline stage failed; partial artifacts are retained.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
