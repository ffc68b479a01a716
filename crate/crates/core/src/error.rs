use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("subsystem slot {slot} out of range for a layout with {len} subsystems")]
    SlotOutOfRange { slot: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator layouts do not match")]
    LayoutMismatch,

    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("mixing angle undefined: both couplings are zero")]
    UndefinedAngle,

    #[error("negative decay rate {rate} for two-level system {index}")]
    NegativeRate { index: usize, rate: f64 },

    #[error("Fock index {n} exceeds truncation n_max = {n_max}")]
    FockIndex { n: usize, n_max: usize },

    #[error("invalid initial state: {0}")]
    InvalidState(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("{0}")]
    Physicality(Box<PhysicalityViolation>),

    #[error("unknown observable '{0}'")]
    UnknownObservable(String),

    #[error("invalid fit request: {0}")]
    InvalidFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A density matrix left the physical set during integration.
///
/// Carries the trajectory recorded up to the last grid point that passed.
#[derive(Debug)]
pub struct PhysicalityViolation {
    pub time: f64,
    pub detail: String,
    pub partial: Trajectory,
}

impl std::fmt::Display for PhysicalityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "physicality violation at t = {}: {}",
            self.time, self.detail
        )
    }
}
