use std::io;

use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Variants whose name ends in `Violation` (plus [`Error::Certification`])
/// mean that a certified inequality failed; everything else is an ordinary
/// runtime failure. [`Error::is_certification_failure`] makes the split
/// explicit so callers can map it onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {triangle} (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("unknown coefficient kind `{0}`")]
    UnknownKind(String),

    #[error("point ({x}, {y}) lies outside the closed unit disk")]
    OutsideDomain { x: f64, y: f64 },

    #[error("coefficient sample at ({x}, {y}) is not admissible: {reason}")]
    NotAdmissible { x: f64, y: f64, reason: String },

    #[error(
        "conjugate gradients did not converge: relative residual {residual:e} after {iterations} iterations"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-positive curvature {curvature:e} at iteration {iteration}: matrix is not SPD")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    #[error("kernel column {column} failed: {source}")]
    KernelColumn {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep cell (sigma = {sigma_kind}, k = {k}) failed: {source}")]
    SweepCell {
        sigma_kind: String,
        k: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("kernel and solution were built on different meshes or fields")]
    Mismatch,

    #[error(
        "maximum principle violation: interior vertex {vertex} has value {value} above the boundary maximum {boundary_max}"
    )]
    MaximumPrincipleViolation {
        vertex: usize,
        value: f64,
        boundary_max: f64,
    },

    #[error("Hopf violation: normal derivative {value:e} at boundary vertex {vertex} is not positive")]
    HopfViolation { vertex: usize, value: f64 },

    #[error("kernel bound violation: {count} non-positive ratios, first at {first:?}")]
    KernelBoundViolation {
        count: usize,
        first: (usize, usize),
        pairs: Vec<(usize, usize)>,
    },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_certification_failure(&self) -> bool {
        match self {
            Error::MaximumPrincipleViolation { .. }
            | Error::HopfViolation { .. }
            | Error::KernelBoundViolation { .. }
            | Error::Certification(_) => true,
            Error::KernelColumn { source, .. } | Error::SweepCell { source, .. } => {
                source.is_certification_failure()
            }
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
