use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid triplet: {0}")]
    InvalidTriplet(String),
    #[error("invalid jump measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} leaves the grid under the strict extension policy")]
    SampledOutOfDomain(f64),
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error("family is not translation invariant")]
    NotTranslationInvariant,
    #[error("triplet has killing rate {0}; a conservative triplet is required")]
    NotConservative(f64),
    #[error("spectral padding insufficient: estimated leakage {leak:e} exceeds {tolerance:e}")]
    PaddingInsufficient { leak: f64, tolerance: f64 },
    #[error("diffusion matrix is not diagonally dominant; lattice stencil would lose monotonicity")]
    NonMonotoneStencil,
    #[error("CFL violation: dt = {dt:e} exceeds admissible {admissible:e}")]
    CflViolation { dt: f64, admissible: f64 },
    #[error("schedule budget exceeded: {count} schedules, cap {cap}")]
    BudgetExceeded { count: u128, cap: u128 },
    #[error("could not place a touching test function: {0}")]
    DegenerateTouch(String),
}

pub type Result<T> = core::result::Result<T, Error>;
