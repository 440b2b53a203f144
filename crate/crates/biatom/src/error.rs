use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("pulse does not fit on the grid: {0}")]
    PulseSupport(String),
    #[error("kernel under-resolved: dt*|rate| = {0:.3e} exceeds 0.5")]
    KernelResolution(f64),
    #[error("outside model domain: {0}")]
    ModelDomain(String),
    #[error("two-photon resonance singularity: {0}")]
    ResonanceSingularity(String),
    #[error("oracle step too coarse: dt*max_rate = {0:.3e} exceeds {1:.1e}")]
    StepSize(f64, f64),
    #[error("state not asymptotic: residual excitation {0:.3e} above {1:.1e}")]
    NotAsymptotic(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;
