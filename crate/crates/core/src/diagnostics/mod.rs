//! Reference oracles, the MSE harness and empirical checks of the analysis bounds.
//!
//! Every Monte Carlo quantity here comes with a standard error, and every
//! routine is deterministic given its seed.

pub mod mse;
pub mod properties;
pub mod quadrature;
pub mod reference;

pub use mse::{run_mse_experiment, run_replicates, MseOptions, MseReport, Plan};
pub use properties::{
    confluence_curve, decreasing_penalization_probe, level_variance_profile, moment_envelope_check,
    strong_error_curve, PROXY_SLACK,
};
pub use reference::{
    fourth_moment, long_run_oracle, reference_for, reference_moment, w1_distance_1d, Observable,
    ReferenceMethod,
    ReferenceValue,
};
