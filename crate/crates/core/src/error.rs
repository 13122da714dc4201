//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Failure modes of grid, solver, and diagnostic operations.
#[derive(Debug, thiserror::Error)]
pub enum CnsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cylinder outside recorded time span: [{lo}, {hi}] not within [{span_lo}, {span_hi}]")]
    CylinderOutOfSpan {
        lo: f64,
        hi: f64,
        span_lo: f64,
        span_hi: f64,
    },
    #[error("cylinder radius {r} violates 2r <= L/2 with L = {l}")]
    CylinderTooLarge { r: f64, l: f64 },
    #[error("cylinder radius {r} below resolution: {detail}")]
    Unresolved { r: f64, detail: String },
    #[error("no snapshot inside time interval [{lo}, {hi}]")]
    NoSnapshot { lo: f64, hi: f64 },
    #[error("rescale factor {0} is not an integer power of two")]
    NotDyadic(f64),
    #[error("CFL number {cfl:.4} exceeds 0.5; suggested dt = {suggested_dt:.6e}")]
    Cfl { cfl: f64, suggested_dt: f64 },
    #[error("quadrature budget exceeded: {cells} cells > {limit}")]
    QuadratureBudget { cells: usize, limit: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing configuration key `{0}`")]
    MissingKey(String),
    #[error("malformed snapshot {path}: {detail}")]
    Format { path: PathBuf, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CnsError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CnsError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CnsError>;
