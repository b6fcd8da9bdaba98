use thiserror::Error;

/// Which side of the origin a one-sided statement refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("nonlinearity is not integrable at the origin on the {side} side")]
    NonIntegrableSingularity { side: Side },

    #[error("unsupported approximation kind: {0}")]
    UnsupportedKind(String),

    #[error("tail scan suggests the nonlinearity is unbounded below (reached {value:.3e} at s = {at:.3e})")]
    InfiniteInfimum { value: f64, at: f64 },

    #[error("numerical detection inconclusive: {0}")]
    Inconclusive(String),

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("grid mismatch: {0}")]
    DomainMismatch(String),

    #[error("regularization ladder failed to contract; last sup distances {0:?}")]
    NoConvergence(Vec<f64>),

    #[error("coefficient reaches {min:.3e}; a positive lower bound is required")]
    CoercivityViolation { min: f64 },

    #[error("target {target:.6e} is outside the tabulated range [0, {max:.6e}]")]
    RangeExceeded { target: f64, max: f64 },

    #[error("shooting and Newton solutions disagree: sup distance {distance:.3e} exceeds {allowed:.3e}")]
    CrossCheckMismatch { distance: f64, allowed: f64 },

    #[error("zero indicator holds across the whole bracket [{lo}, {hi}]; the critical value lies above it")]
    BracketTooNarrow { lo: f64, hi: f64 },

    #[error("seam exponent {lambda} lies outside the window ({lo}, {hi})")]
    ExponentOutOfWindow { lambda: f64, lo: f64, hi: f64 },

    #[error("seam amplitudes meeting at a zero must have the same sign ({left} vs {right})")]
    SignClash { left: f64, right: f64 },

    #[error("splice value stayed below {threshold:.3e} after {attempts} reductions of delta")]
    ZeroAtSplice { threshold: f64, attempts: usize },

    #[error("candidate is not in the admissible set: {0}")]
    MembershipFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
