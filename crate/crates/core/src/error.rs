use num_complex::Complex64;
use thiserror::Error;

/// Failure modes of the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("contour node {node} lies on or near the singular set (sigma_min = {sigma_min:.3e})")]
    NodeOnSingularity { node: Complex64, sigma_min: f64 },

    #[error("indicial family is degenerate: {0}")]
    DegenerateFamily(String),

    #[error("probe block is rank deficient: ambiguous singular value {value:.3e} near threshold {threshold:.3e}")]
    RankDeficientProbe { value: f64, threshold: f64 },

    #[error("no admissible contour separates the strip spectrum from the rest")]
    NoSeparatingContour,

    #[error("spectrum meets the strip boundary at y = {y}: sigma = {sigma}")]
    BoundarySpectrum { y: f64, sigma: Complex64 },

    #[error("poles {a} and {b} are closer than the minimum separation {min_sep:.3e}")]
    PoleSeparationFailure { a: Complex64, b: Complex64, min_sep: f64 },

    #[error("frame loses rank at y = {y} (relative sigma_min = {ratio:.3e})")]
    RankLoss { y: f64, ratio: f64 },

    #[error("span is not invariant under x d/dx (relative residual {residual:.3e})")]
    NotInvariant { residual: f64 },

    #[error("element is not in the kernel of the indicial operator (residual {residual:.3e})")]
    NotInKernel { residual: f64 },

    #[error("quadrature grid too coarse: relative change {change:.3e} under refinement")]
    GridTooCoarse { change: f64 },

    #[error("pairing matrix singular at y = {y} (condition {cond:.3e})")]
    SingularPairing { y: f64, cond: f64 },

    #[error("contour too tight: spectrum within {distance:.3e} of the contour (spacing {spacing:.3e})")]
    ContourTooTight { distance: f64, spacing: f64 },

    #[error("no admissible clustering with delta = {delta}")]
    ClusteringImpossible { delta: f64 },

    #[error("aliasing: fraction {fraction:.3e} of the energy sits in the top octave")]
    AliasingError { fraction: f64 },

    #[error("square-root branch of {0} is ambiguous: the coefficient winds around zero")]
    BranchAmbiguity(String),

    #[error("Gram matrix condition number {cond:.3e} exceeds limit")]
    GramConditioning { cond: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for malformed inputs, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::BranchAmbiguity(_))
    }
}
