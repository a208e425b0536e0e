use thiserror::Error;

/// Errors raised by the model constructors and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The effective offloading window of a user is empty: the task cannot
    /// be offloaded even at infinite rate.
    #[error("user {user} has no time left to offload ({remainder} <= 0)")]
    InfeasibleLatency { user: usize, remainder: f64 },

    #[error("empty search interval [{lower}, {upper}]")]
    EmptyInterval { lower: f64, upper: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A coordinate-descent sweep increased the objective. This points at a
    /// bug in a bound generator, so the trace is kept for diagnosis.
    #[error("sweep {sweep} increased the objective")]
    NonDescent { sweep: usize, trace: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
