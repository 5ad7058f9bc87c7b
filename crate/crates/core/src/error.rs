use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("cutoff mismatch: {0}")]
    CutoffMismatch(String),

    #[error("fields do not satisfy the Hörmander condition: {0}")]
    NotHormander(String),

    #[error("symbol is not elliptic at node {node}, representation {irrep}: {detail}")]
    NonElliptic {
        node: usize,
        irrep: String,
        detail: String,
    },

    #[error("contour passes too close to the spectrum at node {node} ({irrep}): distance {distance:e}")]
    Contour {
        node: usize,
        irrep: String,
        distance: f64,
    },

    #[error("cutoff too small: {detail} (estimated required cutoff {required})")]
    CutoffTooSmall { detail: String, required: f64 },

    #[error("non-normal symbol block at {0}")]
    NonNormal(String),

    #[error("phase is not Hermitian at node {node} ({irrep})")]
    NonHermitianPhase { node: usize, irrep: String },

    #[error("zero-mode convention: {0}")]
    Convention(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("serialization: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
