use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate edge between holder {holder} and issuer {issuer}")]
    DuplicateEdge { holder: usize, issuer: usize },

    #[error("edge ({holder}, {issuer}) is out of range for a {n_holders}x{n_issuers} network")]
    IndexOutOfRange {
        holder: usize,
        issuer: usize,
        n_holders: usize,
        n_issuers: usize,
    },

    #[error("edge ({holder}, {issuer}) has non-positive or non-finite weight {weight}")]
    InvalidWeight { holder: usize, issuer: usize, weight: f64 },

    #[error("invalid strength {value} at position {index}")]
    InvalidStrength { index: usize, value: f64 },

    #[error("holder total {holder_total} and issuer total {issuer_total} disagree")]
    TotalsMismatch { holder_total: f64, issuer_total: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("network has no node pairs")]
    EmptyDomain,

    #[error("total weight is zero")]
    ZeroTotalWeight,

    #[error("link target {target} is degenerate: the ensemble is empty (z = 0)")]
    DegenerateLinkTarget { target: f64 },

    #[error("link target {target} is infeasible: at most {max_links} pairs can be linked")]
    InfeasibleLinkTarget { target: f64, max_links: usize },

    #[error("{layer} node {index} is saturated (degree {degree} of {max}); multipliers diverge")]
    SaturatedNode {
        layer: &'static str,
        index: usize,
        degree: usize,
        max: usize,
    },

    #[error("degree sequence is not admissible: {0}")]
    InvalidDegrees(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("link between holder {holder} and issuer {issuer} is impossible (zero strength product)")]
    ImpossibleLink { holder: usize, issuer: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
