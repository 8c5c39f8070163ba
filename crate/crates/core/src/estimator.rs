//! Multilevel occupation-measure estimator and its exact cost.

use serde::Serialize;

use crate::calibration::LevelSchedule;
use crate::error::{Error, Result};
use crate::potentials::PotentialModel;
use crate::sde::{averaging_window, derive_stream_id, CoupledPath, EulerPath, NoiseStream};

/// Stream family used by [`multilevel_estimate`].
pub const ESTIMATOR_STREAM_TAG: u8 = 0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorOutput {
    pub value: f64,
    /// Level 0 average followed by the `J` corrections.
    pub level_values: Vec<f64>,
    pub gradient_evals: u64,
    pub gaussians_drawn: u64,
}

/// `T_0/γ_0 + Σ_j (T_j/γ_j + T_j/γ_{j-1})` with the schedule's rounded horizons.
pub fn cost_of(schedule: &LevelSchedule) -> u64 {
    (0..=schedule.levels())
        .map(|j| {
            let n = schedule.coarse_steps(j);
            if j == 0 {
                n
            } else {
                n.saturating_mul(3)
            }
        })
        .fold(0u64, u64::saturating_add)
}

/// Stream id of `level` within `replicate_id`.
pub fn level_stream_id(replicate_id: u64, level: usize) -> u64 {
    derive_stream_id(ESTIMATOR_STREAM_TAG, replicate_id, level as u16)
}

/// One realization of the multilevel estimator.
///
/// Every level runs a fresh path (or coupled pair) from `x0` on its own
/// noise stream. Level `j` averages over coarse grid times `τ ≤ kγ < T_j`
/// with `γ = γ_{j-1}` (`γ_0` for level 0), simulating all `T_j/γ` coarse steps.
pub fn multilevel_estimate<F>(
    model: &PotentialModel,
    f: &F,
    schedule: &LevelSchedule,
    sigma: f64,
    x0: &[f64],
    seed: u64,
    replicate_id: u64,
) -> Result<EstimatorOutput>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let levels = schedule.levels();
    let mut level_values = Vec::with_capacity(levels + 1);
    let mut gradient_evals = 0;
    let mut gaussians_drawn = 0;
    for level in 0..=levels {
        let mut noise = NoiseStream::new(seed, level_stream_id(replicate_id, level));
        let gamma = schedule.coarse_gamma(level);
        let steps = schedule.coarse_steps(level);
        let (start, end) = averaging_window(schedule.tau(), schedule.horizons()[level], gamma)?;
        debug_assert_eq!(end, steps);
        let value = if level == 0 {
            run_single(model, f, x0, gamma, sigma, start, steps, &mut noise)
        } else {
            run_coupled(model, f, x0, gamma, sigma, start, steps, &mut noise)
        }
        .map_err(|e| e.at_level(level))?;
        gradient_evals += if level == 0 { steps } else { 3 * steps };
        gaussians_drawn += noise.cursor();
        level_values.push(value);
    }
    let value = level_values.iter().sum();
    Ok(EstimatorOutput {
        value,
        level_values,
        gradient_evals,
        gaussians_drawn,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_single<F>(
    model: &PotentialModel,
    f: &F,
    x0: &[f64],
    gamma: f64,
    sigma: f64,
    start: u64,
    steps: u64,
    noise: &mut NoiseStream,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut path = EulerPath::new(model, x0, gamma, sigma)?;
    let mut sum = 0.0;
    for k in 0..steps {
        if k >= start {
            sum += f(path.position());
        }
        path.advance(noise)?;
    }
    Ok(sum / (steps - start) as f64)
}

#[allow(clippy::too_many_arguments)]
fn run_coupled<F>(
    model: &PotentialModel,
    f: &F,
    x0: &[f64],
    gamma: f64,
    sigma: f64,
    start: u64,
    steps: u64,
    noise: &mut NoiseStream,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut pair = CoupledPath::new(model, x0, gamma, sigma)?;
    let mut sum = 0.0;
    for k in 0..steps {
        if k >= start {
            sum += f(&pair.fine().position) - f(&pair.coarse().position);
        }
        pair.advance(noise)?;
    }
    Ok(sum / (steps - start) as f64)
}

impl Error {
    /// Level index attached to an overflow, if any.
    pub fn level(&self) -> Option<usize> {
        match self {
            Error::NumericalOverflow { level, .. } => *level,
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{occupation_average, simulate_path};
    use approx::assert_relative_eq;

    fn quad() -> PotentialModel {
        PotentialModel::quadratic(1, &[0.0], 1.0).unwrap()
    }

    #[test]
    fn cost_examples() {
        let s = LevelSchedule::single_level(0.1, 10.0, 0.0).unwrap();
        assert_eq!(cost_of(&s), 100);
        let s = LevelSchedule::new(1.0, &[8.0, 4.0], 0.0, 0.0).unwrap();
        assert_eq!(cost_of(&s), 20);
        let doubled = LevelSchedule::new(1.0, &[16.0, 8.0], 0.0, 0.0).unwrap();
        assert_eq!(cost_of(&doubled), 40);
    }

    #[test]
    fn constant_function_is_exact() {
        let s = LevelSchedule::geometric(0.1, 3, 20.0, 0.5, 0.0).unwrap();
        let out = multilevel_estimate(&quad(), &|_: &[f64]| 2.5, &s, 1.0, &[0.3], 9, 0).unwrap();
        assert_eq!(out.value, 2.5);
        assert_eq!(out.level_values[0], 2.5);
        assert!(out.level_values[1..].iter().all(|&v| v == 0.0));
        assert_eq!(out.gradient_evals, cost_of(&s));
    }

    #[test]
    fn single_level_matches_occupation_average() {
        let m = quad();
        let s = LevelSchedule::single_level(0.1, 10.0, 2.0).unwrap();
        let f = |x: &[f64]| x[0] * x[0];
        let out = multilevel_estimate(&m, &f, &s, 1.0, &[1.0], 4, 3).unwrap();
        let mut noise = NoiseStream::new(4, level_stream_id(3, 0));
        let states = simulate_path(&m, &[1.0], 0.1, 1.0, 100, &mut noise).unwrap();
        let direct = occupation_average(f, &states, 0.1, 2.0, 10.0).unwrap();
        assert_eq!(out.value, direct);
        assert_eq!(out.gradient_evals, 100);
        assert_eq!(out.gaussians_drawn, 100);
    }

    #[test]
    fn accounting_and_reproducibility() {
        let s = LevelSchedule::geometric(0.05, 4, 13.0, 0.5, 1.0).unwrap();
        let f = |x: &[f64]| x[0];
        let a = multilevel_estimate(&quad(), &f, &s, 1.0, &[0.0], 1, 17).unwrap();
        let b = multilevel_estimate(&quad(), &f, &s, 1.0, &[0.0], 1, 17).unwrap();
        assert_eq!(a, b);
        let c = multilevel_estimate(&quad(), &f, &s, 1.0, &[0.0], 1, 18).unwrap();
        assert_ne!(a.value, c.value);
        assert_eq!(a.gradient_evals, cost_of(&s));
        let expected_gaussians: u64 = (0..=4)
            .map(|j| if j == 0 { s.coarse_steps(0) } else { 2 * s.coarse_steps(j) })
            .sum();
        assert_eq!(a.gaussians_drawn, expected_gaussians);
        let total: f64 = a.level_values.iter().sum();
        assert_relative_eq!(a.value, total, max_relative = 1e-12);
    }

    #[test]
    fn overflow_reports_level() {
        let m = PotentialModel::custom(
            1,
            |x: &[f64]| x[0].powi(4),
            |x: &[f64], g: &mut [f64]| g[0] = 4.0 * x[0].powi(3),
            crate::potentials::ConvexityProfile::weakly_convex(1.0),
            vec![0.0],
        )
        .unwrap();
        let s = LevelSchedule::new(0.5, &[1.0, 50.0], 0.0, 0.0).unwrap();
        // Level 0 from x0 = 0.1 stays bounded for one step; level 1 runs long enough to blow up.
        let err = multilevel_estimate(&m, &|x: &[f64]| x[0], &s, 3.0, &[0.1], 0, 0).unwrap_err();
        assert!(matches!(err, Error::NumericalOverflow { .. }));
        assert!(err.level().is_some());
    }

    #[test]
    fn invalid_inputs_rejected() {
        let s = LevelSchedule::single_level(0.1, 1.0, 0.0).unwrap();
        assert!(multilevel_estimate(&quad(), &|x: &[f64]| x[0], &s, 1.0, &[f64::NAN], 0, 0).is_err());
        assert!(multilevel_estimate(&quad(), &|x: &[f64]| x[0], &s, 1.0, &[0.0, 0.0], 0, 0).is_err());
    }

    #[test]
    fn stream_ids_are_disjoint() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..50 {
            for l in 0..20 {
                assert!(seen.insert(level_stream_id(r, l)));
            }
        }
    }
}
