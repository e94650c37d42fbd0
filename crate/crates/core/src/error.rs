use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{op}: argument {value} is outside the domain ({reason})")]
    Domain {
        op: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "analyte index {n_a} supports a propagating wave at the interrogation angle \
         (evanescent coupling needs n_a < {limit})"
    )]
    PropagatingAnalyte { n_a: f64, limit: f64 },

    #[error("linearization needs a nonzero index deviation between t = 0 and t = tau")]
    ZeroIndexDeviation,

    #[error("time grid has no sample at the switch time tau = {tau_s} s")]
    MissingSwitchSample { tau_s: f64 },

    #[error("sequences of length {left} and {right} do not share a time grid")]
    GridMismatch { left: usize, right: usize },

    #[error("truncated state discards probability {tail_mass:e}, above tolerance {tolerance:e}")]
    TruncationTail { tail_mass: f64, tolerance: f64 },

    #[error("truncated state did not converge between cutoffs: amplitude change {change:e}")]
    TruncationConvergence { change: f64 },

    #[error("not enough data: {points} points for {parameters} parameters")]
    InsufficientData { points: usize, parameters: usize },

    #[error("unknown case `{name}`; available cases: {available}")]
    UnknownCase { name: String, available: String },

    #[error("ensembles are not comparable: {0}")]
    PlanMismatch(String),

    #[error("set {set} produced no converged fits out of {attempted}")]
    EmptySet { set: usize, attempted: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
