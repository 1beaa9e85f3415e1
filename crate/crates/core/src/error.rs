use thiserror::Error;

/// Failure modes shared across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock truncation at dim {dim} is insufficient (lost/edge weight {weight:.3e})")]
    TruncationInsufficient { dim: usize, weight: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid dimension {0}: need at least 2 levels")]
    InvalidDimension(usize),
    #[error("invalid device parameters: {0}")]
    InvalidDevice(String),
    #[error("unstable regime: omega_k = {omega_k}, g_k = {g_k}")]
    InstabilityRegime { omega_k: f64, g_k: f64 },
    #[error("measurement outcome has zero probability (degenerate branch)")]
    DegenerateBranch,
    #[error("negative decay rate {0}")]
    NegativeDecay(f64),
    #[error("negative temperature {0}")]
    NegativeTemperature(f64),
    #[error("invalid coupling strength {0}")]
    InvalidCoupling(f64),
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("moments give non-physical variance {0}")]
    NonPhysicalMoments(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
