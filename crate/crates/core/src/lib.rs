//! Multilevel Langevin Monte Carlo for log-concave Gibbs measures.
//!
//! The crate simulates the overdamped Langevin diffusion
//! `dX = -∇U(X) dt + σ dB` with a constant-step Euler–Maruyama scheme and
//! combines time averages of synchronously coupled paths into a multilevel
//! estimator of `π(f)`, where `π ∝ exp(-2U/σ²)`.
//!
//! Module map:
//!
//! * [`potentials`]: potential models, convexity metadata, penalization.
//! * [`sde`]: noise streams, Euler steps, coupled paths, occupation averages.
//! * [`calibration`]: closed-form level schedules and complexity bounds.
//! * [`estimator`]: the multilevel occupation-measure estimator and its cost.
//! * [`diagnostics`]: reference oracles, MSE harness, empirical property checks.
//! * [`parallel`]: replicate fan-out (rayon, or sequential without the
//!   `parallel` feature).

pub mod calibration;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod parallel;
pub mod potentials;
pub mod sde;
pub mod stats;

pub use calibration::{LevelSchedule, PenalizedPlan, RegimeConstants};
pub use error::{Error, Result};
pub use estimator::{cost_of, multilevel_estimate, EstimatorOutput};
pub use parallel::Execution;
pub use potentials::{ConvexityKind, ConvexityProfile, PotentialModel};
pub use sde::{CoupledPathState, NoiseStream, PathState};
