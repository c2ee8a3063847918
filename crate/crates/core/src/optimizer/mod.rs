//! Outer optimization loop and its building blocks.

mod convergence;
mod lambda;
mod run;
mod schedule;
mod volume;

pub use convergence::{
    augmented_update, check_convergence, relative_change, shift_normalize, AbortReason, ConvergenceLimits,
    ConvergenceStatus, IterationMetrics, Normalization,
};
pub use lambda::{find_lambda, LambdaSolution, RootMethod, Thresholding, MAX_TRIALS, VOLUME_TOL};
pub use run::{run, ConstraintMethod, IterationRecord, RunHistory, RunOptions, StepSnapshot};
pub use schedule::{time_steps, TimeSchedule};
pub use volume::{apply_node_constraints, compute_volume, NodeConstraints, VolumeField, VolumeIntegrator};
