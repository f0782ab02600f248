//! Payoff-based learning of Nash equilibria in convex games whose game
//! mapping is merely monotone.
//!
//! * [`game`]: games, box action sets, the game mapping and built-in games.
//! * [`schedule`]: power-law step, noise and regularization schedules and
//!   their exponent conditions.
//! * [`learner`]: the regularized Gaussian-sampling learner that only sees
//!   its own realized costs.
//! * [`smoothing`]: Monte-Carlo estimators of the smoothed costs and their
//!   gradients, plus bias and noise measurements.
//! * [`solvers`]: full-information extragradient and Tikhonov reference
//!   solvers used for validation.
//! * [`harness`]: configs, replications, CSV/JSON output and SVG plots.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod game;
pub mod harness;
pub mod learner;
pub mod schedule;
pub mod smoothing;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
pub use game::{
    registry, BoxSet, ConvexSet, GameDefinition, JointAction, PlayerIndex, REGISTRY_NAMES,
};
pub use learner::{
    run, sample_actions, step, IterationRecord, LearnerConfig, LearnerState, RecordSink, Thinning,
};
pub use schedule::{validate_exponents, ScheduleExponents, ScheduleReport, ScheduleState};
pub use smoothing::{
    bias_report, finite_difference_gradient, mixed_mapping, score_gradient, smoothed_cost,
    BiasVarianceReport, GradientEstimate, GradientMethod, SmoothedQuery,
};
pub use solvers::{
    solve_tikhonov, solve_vi, tikhonov_path, SolverSettings, TikhonovPath, TikhonovPoint,
};
