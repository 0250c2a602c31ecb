use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("energy {energy} is outside (0, {height}): tunneling regime only")]
    OutsideTunnelingRegime { energy: f64, height: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("energy interval is empty after clipping to (0, V0)")]
    EmptyInterval,

    #[error("SPM inapplicable: {0}")]
    SpmInapplicable(String),

    #[error("degenerate function: every sample is zero")]
    DegenerateFunction,

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("field not modeled inside barriers (x = {0})")]
    InsideBarrier(f64),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("{component} does not live in the {region} region")]
    RegionMismatch {
        component: String,
        region: &'static str,
    },

    #[error("peak detection failed: {0}")]
    Detection(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
