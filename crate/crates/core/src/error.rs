//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Variants are grouped loosely by origin: parameter validation, metric
/// failure modes, geometric degeneracies, and file-format problems. The CLI
/// maps these onto exit codes, so keep the distinction between *usage*
/// (caller passed something invalid) and *data* (a file on disk is bad).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two codes compared with a Hamming-style distance have different lengths.
    #[error("code length mismatch: {left} bits vs {right} bits")]
    CodeLengthMismatch { left: usize, right: usize },

    /// Spherical Hamming distance with an empty intersection but a nonempty
    /// symmetric difference: the ratio diverges.
    #[error("spherical hamming distance is undefined: zero shared bits with {differing} differing bits")]
    SphericalHammingDivision { differing: usize },

    /// Spherical Hamming distance of two all-zero codes: 0/0.
    #[error("spherical hamming distance is indeterminate: both codes are all zero")]
    SphericalHammingIndeterminate,

    /// A point at (or numerically at) the projection pole cannot be mapped
    /// back to the original space.
    #[error("stereographic projection undefined at the north pole (1 - last coordinate = {gap:e})")]
    ProjectionPole { gap: f64 },

    /// The embedded hyperplane misses the unit sphere, so it induces no shape
    /// in the original space.
    #[error("hyperplane does not intersect the unit sphere (squared radius {radius_sq:e})")]
    NoIntersection { radius_sq: f64 },

    /// An operation that needs at least one record got none.
    #[error("empty record set: {0}")]
    EmptyRecords(String),

    /// A vector contains NaN or infinity.
    #[error("non-finite value at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    /// Structured-file problems (bad magic, truncation, shape mismatch),
    /// with a byte offset or line number where that helps.
    #[error("format error in {path}: {detail}")]
    Format { path: String, detail: String },

    /// An invariant the library promises was observed to fail.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Helper for loader diagnostics.
    pub fn format(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
