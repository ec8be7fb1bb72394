use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model `{model}`: {message}")]
    InvalidParameter { model: String, message: String },

    #[error("trajectory escape at t = {time} (state norm {norm:e})")]
    TrajectoryEscape { time: f64, norm: f64 },

    #[error("initial perturbation is zero")]
    ZeroPerturbation,

    #[error("dependent frame: Gram-Schmidt vector {index} collapsed (norm {norm:e}); shrink the renormalization interval")]
    DependentFrame { index: usize, norm: f64 },

    #[error("saturation not reached: trailing run of {run} points below window {window}; extend the tau grid")]
    SaturationNotReached { run: usize, window: usize },

    #[error("equilibrium drifts at parameter {parameter}: residual {residual:e}")]
    EquilibriumDrift { parameter: f64, residual: f64 },

    #[error("location is not a fixed point: residual {residual:e}")]
    NotAFixedPoint { residual: f64 },

    #[error("ensemble member {member} (seed {seed}) failed: {source}")]
    Member {
        member: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Tags the error with the ensemble member and seed that produced it.
    pub fn in_member(self, member: usize, seed: u64) -> Self {
        Error::Member {
            member,
            seed,
            source: Box::new(self),
        }
    }
}
