use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cell list is stale: built for generation {built}, configuration is at {current}")]
    StaleCellList { built: u64, current: u64 },

    #[error("query radius {radius} exceeds cell-list cutoff {cutoff}")]
    CutoffExceeded { radius: f64, cutoff: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("box side {side} is too small: need at least {required} ({what})")]
    BoxTooSmall {
        side: f64,
        required: f64,
        what: &'static str,
    },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("potential is not stable: {0}")]
    Unstable(String),

    #[error("thinning acceptance {acceptance} exceeds 1 (majorant violated in {context})")]
    MajorantViolation { acceptance: f64, context: &'static str },

    #[error("no majorant available for this rate: {0}")]
    MissingMajorant(String),

    #[error("operation requires a smooth potential or functional: {0}")]
    NotSmooth(String),

    #[error("integrator blow-up: energy change {change} exceeds guard {guard}")]
    BlowUp { change: f64, guard: f64 },

    #[error("insufficient samples: have {have}, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("configuration is empty: total event rate is zero")]
    VacuumState,

    #[error("configuration has infinite energy (hard-core overlap between particles {0} and {1})")]
    HardCoreOverlap(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
