//! Replicated runs of the multilevel estimator against a reference value.

use serde::Serialize;

use super::reference::ReferenceValue;
use crate::calibration::{LevelSchedule, PenalizedPlan};
use crate::error::{Error, Result};
use crate::estimator::{multilevel_estimate, EstimatorOutput};
use crate::parallel::Execution;
use crate::potentials::PotentialModel;
use crate::stats;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// What to run: a bare schedule on the model, or a penalized plan (the model
/// is penalized with the plan's `α`, the reference stays that of the base model).
#[derive(Debug, Clone, Copy)]
pub enum Plan<'a> {
    Schedule(&'a LevelSchedule),
    Penalized(&'a PenalizedPlan),
}

impl<'a> From<&'a LevelSchedule> for Plan<'a> {
    fn from(s: &'a LevelSchedule) -> Self {
        Plan::Schedule(s)
    }
}

impl<'a> From<&'a PenalizedPlan> for Plan<'a> {
    fn from(p: &'a PenalizedPlan) -> Self {
        Plan::Penalized(p)
    }
}

impl Plan<'_> {
    pub fn schedule(&self) -> &LevelSchedule {
        match self {
            Plan::Schedule(s) => s,
            Plan::Penalized(p) => &p.schedule,
        }
    }

    /// The model actually simulated.
    pub fn simulated_model(&self, model: &PotentialModel) -> Result<PotentialModel> {
        match self {
            Plan::Schedule(_) => Ok(model.clone()),
            Plan::Penalized(p) => model.penalize(p.alpha),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MseOptions {
    pub execution: Execution,
    pub epsilon_target: Option<f64>,
    /// Start every path at this point instead of the simulated model's minimizer.
    pub x0: Option<Vec<f64>>,
    /// Runs every replicate on replicate 0's streams.
    #[doc(hidden)]
    pub identical_streams: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseReport {
    /// Successful replicates.
    pub replicates: usize,
    pub failed: usize,
    pub mean: f64,
    /// Unbiased sample variance of the replicate values.
    pub variance: f64,
    pub bias: f64,
    /// `√(bias² + variance·(R-1)/R)`, the root of the empirical mean squared error.
    pub rmse: f64,
    pub mean_cost: f64,
    pub epsilon_target: Option<f64>,
    /// Standard error of `mean`.
    pub stderr: f64,
    pub reference: ReferenceValue,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl MseReport {
    fn from_values(values: Vec<f64>, costs: &[u64], failed: usize, reference: ReferenceValue, eps: Option<f64>) -> Self {
        let r = values.len();
        let mean = stats::mean(&values);
        let variance = stats::variance(&values);
        let bias = mean - reference.value;
        let rmse = (bias * bias + variance * (r as f64 - 1.0) / r as f64).sqrt();
        MseReport {
            replicates: r,
            failed,
            mean,
            variance,
            bias,
            rmse,
            mean_cost: costs.iter().sum::<u64>() as f64 / costs.len() as f64,
            epsilon_target: eps,
            stderr: stats::standard_error(&values),
            reference,
            values,
        }
    }
}

/// Runs `replicates` independent estimates and returns every output in replicate order.
///
/// Failed replicates are kept as errors; more than 1% failures aborts.
#[allow(clippy::too_many_arguments)]
pub fn run_replicates<F>(
    model: &PotentialModel,
    f: &F,
    schedule: &LevelSchedule,
    sigma: f64,
    x0: &[f64],
    replicates: u64,
    seed: u64,
    execution: Execution,
    identical_streams: bool,
) -> Result<Vec<Result<EstimatorOutput>>>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let outputs = execution.map(replicates, |r| {
        let id = if identical_streams { 0 } else { r };
        multilevel_estimate(model, f, schedule, sigma, x0, seed, id)
    });
    let failed = outputs.iter().filter(|o| o.is_err()).count();
    if failed as f64 > MAX_FAILURE_FRACTION * replicates as f64 {
        let first = outputs
            .into_iter()
            .find_map(|o| o.err())
            .expect("at least one failure");
        return Err(Error::ReplicateFailures {
            failed,
            total: replicates as usize,
            first: Box::new(first),
        });
    }
    for (r, o) in outputs.iter().enumerate() {
        if let Err(e) = o {
            log::warn!("replicate {r} failed: {e}");
        }
    }
    Ok(outputs)
}

/// Bias, variance and RMSE of `R` replicates against `reference`.
///
/// Paths start at the simulated model's minimizer unless `options.x0` is set.
#[allow(clippy::too_many_arguments)]
pub fn run_mse_experiment<'a, F>(
    model: &PotentialModel,
    f: &F,
    plan: impl Into<Plan<'a>>,
    sigma: f64,
    reference: ReferenceValue,
    replicates: u64,
    seed: u64,
    options: &MseOptions,
) -> Result<MseReport>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if replicates < 2 {
        return Err(Error::invalid("an MSE experiment needs at least two replicates"));
    }
    let plan = plan.into();
    let simulated = plan.simulated_model(model)?;
    let x0 = options.x0.clone().unwrap_or_else(|| simulated.minimizer().to_vec());
    let outputs = run_replicates(
        &simulated,
        f,
        plan.schedule(),
        sigma,
        &x0,
        replicates,
        seed,
        options.execution,
        options.identical_streams,
    )?;
    let total = outputs.len();
    let ok: Vec<EstimatorOutput> = outputs.into_iter().filter_map(|o| o.ok()).collect();
    let failed = total - ok.len();
    let values: Vec<f64> = ok.iter().map(|o| o.value).collect();
    let costs: Vec<u64> = ok.iter().map(|o| o.gradient_evals).collect();
    Ok(MseReport::from_values(values, &costs, failed, reference, options.epsilon_target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::calibrate_penalized;
    use crate::diagnostics::reference::fourth_moment;
    use approx::assert_relative_eq;

    fn quad() -> PotentialModel {
        PotentialModel::quadratic(1, &[0.0], 1.0).unwrap()
    }

    #[test]
    fn constant_observable_has_zero_error() {
        let s = LevelSchedule::geometric(0.1, 2, 5.0, 0.5, 0.0).unwrap();
        let rep = run_mse_experiment(
            &quad(),
            &|_: &[f64]| 3.0,
            &s,
            1.0,
            ReferenceValue::exact(3.0),
            5,
            1,
            &MseOptions::default(),
        )
        .unwrap();
        assert_eq!((rep.bias, rep.variance, rep.rmse), (0.0, 0.0, 0.0));
        assert_eq!(rep.mean_cost, crate::estimator::cost_of(&s) as f64);
    }

    #[test]
    fn identical_streams_give_zero_variance() {
        let s = LevelSchedule::single_level(0.1, 5.0, 0.0).unwrap();
        let opts = MseOptions {
            identical_streams: true,
            ..Default::default()
        };
        let rep = run_mse_experiment(&quad(), &|x: &[f64]| x[0], &s, 1.0, ReferenceValue::exact(0.0), 2, 4, &opts).unwrap();
        assert_eq!(rep.variance, 0.0);
        assert_eq!(rep.rmse, rep.bias.abs());
    }

    #[test]
    fn rmse_decomposition_and_determinism() {
        let s = LevelSchedule::geometric(0.1, 2, 10.0, 0.5, 0.0).unwrap();
        let run = |exec| {
            let opts = MseOptions {
                execution: exec,
                ..Default::default()
            };
            run_mse_experiment(&quad(), &|x: &[f64]| x[0], &s, 1.0, ReferenceValue::exact(0.1), 20, 8, &opts).unwrap()
        };
        let a = run(Execution::Parallel);
        let b = run(Execution::Sequential);
        assert_eq!(a, b);
        let direct = (a.values.iter().map(|v| (v - 0.1).powi(2)).sum::<f64>() / 20.0).sqrt();
        assert_relative_eq!(a.rmse, direct, max_relative = 1e-9);
        assert!(run_mse_experiment(&quad(), &|x: &[f64]| x[0], &s, 1.0, ReferenceValue::exact(0.0), 1, 8, &MseOptions::default()).is_err());
    }

    #[test]
    fn penalized_quadratic_run() {
        let m = quad();
        let m4 = fourth_moment(&m, 1.0).unwrap().value;
        let plan = calibrate_penalized(0.2, 1.0, 1, m4, 1.0).unwrap();
        let rep = run_mse_experiment(&m, &|x: &[f64]| x[0], &plan, 1.0, ReferenceValue::exact(0.0), 20, 3, &MseOptions::default()).unwrap();
        assert!(rep.rmse <= 0.3, "{rep:?}");
    }

    #[test]
    fn too_many_failures_abort() {
        let m = PotentialModel::custom(
            1,
            |x: &[f64]| x[0].powi(4),
            |x: &[f64], g: &mut [f64]| g[0] = 4.0 * x[0].powi(3),
            crate::potentials::ConvexityProfile::weakly_convex(1.0),
            vec![0.0],
        )
        .unwrap();
        let s = LevelSchedule::single_level(0.5, 100.0, 0.0).unwrap();
        let err = run_mse_experiment(&m, &|x: &[f64]| x[0], &s, 3.0, ReferenceValue::exact(0.0), 4, 0, &MseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ReplicateFailures { total: 4, .. }));
    }
}
