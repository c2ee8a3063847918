use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("volume constraint infeasible: {0}")]
    ConstraintInfeasible(String),

    /// The void fraction jumps across the target between two adjacent
    /// thresholds, so no threshold meets the tolerance.
    #[error("no threshold reaches void fraction {target}: volume jumps from {below} to {above} at lambda = {lambda_below}")]
    VolumeGap {
        target: f64,
        below: f64,
        above: f64,
        lambda_below: f64,
        lambda_above: f64,
        evaluations: usize,
    },

    #[error("degenerate sensitivity field: {0}")]
    DegenerateField(String),

    #[error("unknown example `{name}` (valid: {valid})")]
    UnknownExample { name: String, valid: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
