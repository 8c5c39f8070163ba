//! Empirical checks of the discretization, confluence, moment and variance bounds.

use serde::Serialize;

use crate::calibration::{decreasing_penalization_gap, regime_constants, LevelSchedule, DEFAULT_C_R};
use crate::error::{Error, Result};
use crate::estimator::EstimatorOutput;
use crate::parallel::Execution;
use crate::potentials::{norm2, PotentialModel};
use crate::sde::{derive_stream_id, grid_steps, CoupledPath, EulerPath, NoiseStream};
use crate::stats;

use super::mse::run_replicates;

/// Slack on bounds proven for the continuous process and checked on a
/// fine-step Euler proxy.
pub const PROXY_SLACK: f64 = 1.25;

const STRONG_ERROR_TAG: u8 = 1;
const CONFLUENCE_TAG: u8 = 2;
const MOMENT_TAG: u8 = 3;
const PENALTY_PROBE_TAG: u8 = 4;
/// Time-grid points recorded by [`confluence_curve`].
const CONFLUENCE_POINTS: u64 = 100;

fn check_replicates(r: u64, min: u64) -> Result<()> {
    if r < min {
        Err(Error::invalid(format!("need at least {min} replicates, got {r}")))
    } else {
        Ok(())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongErrorPoint {
    pub gamma: f64,
    pub mean_sq_gap: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongErrorCurve {
    pub points: Vec<StrongErrorPoint>,
    /// Least-squares slope of `ln Ê|X̄^γ - X̄^{γ/2}|²` against `ln γ`; `None`
    /// when fewer than two points are positive.
    pub slope: Option<f64>,
}

/// `Ê|X̄^γ_T - X̄^{γ/2}_T|²` from synchronously coupled pairs, for each `γ`.
#[allow(clippy::too_many_arguments)]
pub fn strong_error_curve(
    model: &PotentialModel,
    sigma: f64,
    x0: &[f64],
    gammas: &[f64],
    horizon: f64,
    replicates: u64,
    seed: u64,
    execution: Execution,
) -> Result<StrongErrorCurve> {
    check_replicates(replicates, 2)?;
    let mut points = Vec::with_capacity(gammas.len());
    for (i, &gamma) in gammas.iter().enumerate() {
        let steps = grid_steps(horizon, gamma);
        let gaps = execution
            .map(replicates, |r| {
                let mut noise = NoiseStream::new(seed, derive_stream_id(STRONG_ERROR_TAG, r, i as u16));
                let mut pair = CoupledPath::new(model, x0, gamma, sigma)?;
                for _ in 0..steps {
                    pair.advance(&mut noise)?;
                }
                Ok(sq_dist(&pair.fine().position, &pair.coarse().position))
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        points.push(StrongErrorPoint {
            gamma,
            mean_sq_gap: stats::mean(&gaps),
            stderr: stats::standard_error(&gaps),
        });
    }
    let positive: Vec<&StrongErrorPoint> = points.iter().filter(|p| p.mean_sq_gap > 0.0).collect();
    let slope = if positive.len() >= 2 {
        let g: Vec<f64> = positive.iter().map(|p| p.gamma).collect();
        let e: Vec<f64> = positive.iter().map(|p| p.mean_sq_gap).collect();
        Some(stats::log_log_slope(&g, &e)?)
    } else {
        None
    };
    Ok(StrongErrorCurve { points, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfluencePoint {
    pub time: f64,
    pub mean_sq_dist: f64,
    pub stderr: f64,
}

/// `Ê|X̄^x_t - X̄^y_t|²` for shared-noise paths, on about 100 grid times up to `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn confluence_curve(
    model: &PotentialModel,
    sigma: f64,
    x: &[f64],
    y: &[f64],
    gamma: f64,
    horizon: f64,
    replicates: u64,
    seed: u64,
    execution: Execution,
) -> Result<Vec<ConfluencePoint>> {
    check_replicates(replicates, 2)?;
    let steps = grid_steps(horizon, gamma);
    let stride = (steps / CONFLUENCE_POINTS).max(1);
    let recorded: Vec<u64> = (0..=steps).filter(|k| k % stride == 0 || *k == steps).collect();
    let traces = execution
        .map(replicates, |r| {
            let mut noise = NoiseStream::new(seed, derive_stream_id(CONFLUENCE_TAG, r, 0));
            let mut px = EulerPath::new(model, x, gamma, sigma)?;
            let mut py = EulerPath::new(model, y, gamma, sigma)?;
            let mut z = vec![0.0; model.dim()];
            let mut trace = Vec::with_capacity(recorded.len());
            for k in 0..=steps {
                if k % stride == 0 || k == steps {
                    trace.push(sq_dist(px.position(), py.position()));
                }
                if k < steps {
                    noise.fill(&mut z);
                    px.advance_with(&z)?;
                    py.advance_with(&z)?;
                }
            }
            Ok(trace)
        })
        .into_iter()
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(recorded
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let column: Vec<f64> = traces.iter().map(|t| t[i]).collect();
            ConfluencePoint {
                time: k as f64 * gamma,
                mean_sq_dist: stats::mean(&column),
                stderr: stats::standard_error(&column),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEnvelopeReport {
    pub holds: bool,
    /// `c_margin·(U(x0) + Ψ̄)^p`.
    pub envelope: f64,
    /// `sup_n Ê[U^p(X̄_{nγ})]`.
    pub sup_moment: f64,
    pub max_ratio: f64,
    /// `(time, Ê[U^p])` at every grid time.
    pub trace: Vec<(f64, f64)>,
}

/// Running supremum of `Ê[U^p(X̄_{nγ})]` against `c_margin·(U(x0)+Ψ̄)^p`.
#[allow(clippy::too_many_arguments)]
pub fn moment_envelope_check(
    model: &PotentialModel,
    sigma: f64,
    x0: &[f64],
    gamma: f64,
    p: f64,
    horizon: f64,
    replicates: u64,
    seed: u64,
    c_margin: f64,
    execution: Execution,
) -> Result<MomentEnvelopeReport> {
    check_replicates(replicates, 1)?;
    if !(p >= 0.0) || !(c_margin > 0.0) {
        return Err(Error::invalid("p must be nonnegative and c_margin positive"));
    }
    let constants = regime_constants(model.profile(), model.dim(), sigma, DEFAULT_C_R)?;
    let envelope = c_margin * (model.value(x0) + constants.psi_bar).powf(p);
    let steps = grid_steps(horizon, gamma) as usize;
    let traces = execution
        .map(replicates, |r| {
            let mut noise = NoiseStream::new(seed, derive_stream_id(MOMENT_TAG, r, 0));
            let mut path = EulerPath::new(model, x0, gamma, sigma)?;
            let mut trace = Vec::with_capacity(steps + 1);
            trace.push(model.value(path.position()).powf(p));
            for _ in 0..steps {
                path.advance(&mut noise)?;
                trace.push(model.value(path.position()).powf(p));
            }
            Ok(trace)
        })
        .into_iter()
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let trace: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let m = traces.iter().map(|t| t[k]).sum::<f64>() / replicates as f64;
            (k as f64 * gamma, m)
        })
        .collect();
    let sup_moment = trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(MomentEnvelopeReport {
        holds: sup_moment <= envelope,
        envelope,
        sup_moment,
        max_ratio: sup_moment / envelope,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelVariance {
    pub level: usize,
    pub variance: f64,
    pub horizon: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelVarianceProfile {
    pub levels: Vec<LevelVariance>,
    /// `corr(level_i, level_j)` for `i < j`, as `(i, j, corr)`.
    pub correlations: Vec<(usize, usize, f64)>,
    /// Sample variance of the full estimator.
    pub total_variance: f64,
    /// Standard error of `total_variance` under a normal approximation.
    pub total_variance_stderr: f64,
    pub replicates: usize,
}

impl LevelVarianceProfile {
    pub fn sum_of_level_variances(&self) -> f64 {
        self.levels.iter().map(|l| l.variance).sum()
    }

    pub fn max_abs_correlation(&self) -> f64 {
        self.correlations.iter().map(|c| c.2.abs()).fold(0.0, f64::max)
    }
}

/// Per-level sample variances of the estimator's `level_values`.
#[allow(clippy::too_many_arguments)]
pub fn level_variance_profile<F>(
    model: &PotentialModel,
    f: &F,
    schedule: &LevelSchedule,
    sigma: f64,
    x0: &[f64],
    replicates: u64,
    seed: u64,
    execution: Execution,
) -> Result<LevelVarianceProfile>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    check_replicates(replicates, 100)?;
    let outputs: Vec<EstimatorOutput> =
        run_replicates(model, f, schedule, sigma, x0, replicates, seed, execution, false)?
            .into_iter()
            .filter_map(|o| o.ok())
            .collect();
    let columns: Vec<Vec<f64>> = (0..=schedule.levels())
        .map(|j| outputs.iter().map(|o| o.level_values[j]).collect())
        .collect();
    let levels = columns
        .iter()
        .enumerate()
        .map(|(j, c)| LevelVariance {
            level: j,
            variance: stats::variance(c),
            horizon: schedule.horizons()[j],
            gamma: schedule.gammas()[j],
        })
        .collect();
    let mut correlations = Vec::new();
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            correlations.push((i, j, stats::correlation(&columns[i], &columns[j])));
        }
    }
    let totals: Vec<f64> = outputs.iter().map(|o| o.value).collect();
    let total_variance = stats::variance(&totals);
    let n = totals.len() as f64;
    Ok(LevelVarianceProfile {
        levels,
        correlations,
        total_variance,
        total_variance_stderr: total_variance * (2.0 / (n - 1.0)).sqrt(),
        replicates: outputs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyProbe {
    /// `Ê|X^{x,α}_T - X^{y,α̃}_T|²`.
    pub gap: f64,
    pub stderr: f64,
    pub bound: f64,
}

/// Shared-noise paths under penalties `α` (from `x`) and `α̃` (from `y`).
#[allow(clippy::too_many_arguments)]
pub fn decreasing_penalization_probe(
    model: &PotentialModel,
    alpha: f64,
    alpha_tilde: f64,
    sigma: f64,
    x: &[f64],
    y: &[f64],
    gamma: f64,
    horizon: f64,
    replicates: u64,
    seed: u64,
    execution: Execution,
) -> Result<PenaltyProbe> {
    check_replicates(replicates, 2)?;
    let bound = decreasing_penalization_gap(alpha, alpha_tilde, model.dim(), sigma, horizon, sq_dist(x, y))?;
    let strong = model.penalize(alpha)?;
    let weak = model.penalize(alpha_tilde)?;
    let steps = grid_steps(horizon, gamma);
    let gaps = execution
        .map(replicates, |r| {
            let mut noise = NoiseStream::new(seed, derive_stream_id(PENALTY_PROBE_TAG, r, 0));
            let mut px = EulerPath::new(&strong, x, gamma, sigma)?;
            let mut py = EulerPath::new(&weak, y, gamma, sigma)?;
            let mut z = vec![0.0; model.dim()];
            for _ in 0..steps {
                noise.fill(&mut z);
                px.advance_with(&z)?;
                py.advance_with(&z)?;
            }
            Ok(sq_dist(px.position(), py.position()))
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(PenaltyProbe {
        gap: stats::mean(&gaps),
        stderr: stats::standard_error(&gaps),
        bound,
    })
}

/// Closed-form `(1-aγ)^{2n}|x-y|²` of shared-noise Euler paths on `(a/2)|x-c|²`.
pub fn quadratic_confluence(scale: f64, gamma: f64, steps: u64, xy_dist2: f64) -> f64 {
    (1.0 - scale * gamma).powi(2 * steps as i32) * xy_dist2
}

/// `|x|` helper for callers building observables.
pub fn norm(x: &[f64]) -> f64 {
    norm2(x).sqrt()
}
