use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument for {what}: {value}")]
    InvalidArgument { what: &'static str, value: f64 },

    #[error("{what}: argument {value} outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    /// A numerical procedure failed to reach its tolerance. `estimate` is the
    /// best value available when it gave up.
    #[error("{what} did not converge (estimate {estimate}, error estimate {error})")]
    Accuracy {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("not a truncated tetrahedron: {reason} at index {index}")]
    NotATetrahedron { index: usize, reason: &'static str },

    #[error("lengths not in the closure of the length chart: cosine argument {value} at position {index}")]
    NotInClosure { index: usize, value: f64 },

    #[error("recovered angles {angles:?} lie outside the closed angle polytope")]
    Inconsistent { angles: [f64; 6] },

    #[error("volume evaluation failed: {reason} (det G = {det_g}, z1 = {z1}, z2 = {z2})")]
    Evaluation {
        reason: &'static str,
        det_g: f64,
        z1: Complex64,
        z2: Complex64,
    },

    #[error("near-degenerate Jacobian (condition number {condition:e})")]
    NearDegenerate { condition: f64 },

    #[error("rejection sampler exhausted its budget of {draws} draws; widen the proposal or relax the constraint")]
    Sampling { draws: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}
