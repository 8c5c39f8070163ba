//! `calibrate`, `run` and `sweep`.

use mlgibbs::calibration::{
    admissible_step, calibrate_penalized_with, calibrate_weak_i, calibrate_weak_ii, complexity_bound_weak,
    regime_constants, M4Source, PenalizedMode, PenalizedOptions, WeakVariant, DEFAULT_C_R,
};
use mlgibbs::diagnostics::{
    fourth_moment, reference_for, run_mse_experiment, MseOptions, MseReport, Plan,
    ReferenceMethod, ReferenceValue,
};
use mlgibbs::stats::log_log_slope;
use mlgibbs::{cost_of, Execution, LevelSchedule, PenalizedPlan, PotentialModel, RegimeConstants};
use serde_json::json;

use crate::config::{ExperimentConfig, Method};
use crate::error::CliError;

pub const CSV_HEADER: &str =
    "method,potential,dim,sigma,epsilon,J,gamma0,T0,tau,R,seed,mean,bias,variance,rmse,mean_cost";

#[derive(Debug, Clone)]
pub enum PreparedPlan {
    Penalized(PenalizedPlan),
    Schedule {
        schedule: LevelSchedule,
        constants: Option<RegimeConstants>,
        predicted_cost: Option<f64>,
    },
}

impl PreparedPlan {
    pub fn schedule(&self) -> &LevelSchedule {
        match self {
            PreparedPlan::Penalized(p) => &p.schedule,
            PreparedPlan::Schedule { schedule, .. } => schedule,
        }
    }

    fn as_plan(&self) -> Plan<'_> {
        match self {
            PreparedPlan::Penalized(p) => Plan::Penalized(p),
            PreparedPlan::Schedule { schedule, .. } => Plan::Schedule(schedule),
        }
    }
}

/// A validated experiment: the target model (whose Gibbs law is estimated)
/// and the calibrated plan, with multiplier and `τ` already applied.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub target: PotentialModel,
    pub plan: PreparedPlan,
}

fn m4_source(method: ReferenceMethod) -> M4Source {
    match method {
        ReferenceMethod::ClosedForm => M4Source::ClosedForm,
        ReferenceMethod::Quadrature1d => M4Source::Quadrature,
        ReferenceMethod::LongRunOracle => M4Source::LongRunOracle,
    }
}

fn finish_schedule(cfg: &ExperimentConfig, schedule: LevelSchedule) -> Result<LevelSchedule, CliError> {
    let mut s = schedule;
    if cfg.safety_t_multiplier != 1.0 {
        s = s.scaled(cfg.safety_t_multiplier)?;
    }
    if let Some(tau) = cfg.tau {
        s = s.with_tau(tau)?;
    }
    Ok(s)
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let base = cfg.base_model()?;
    let d = base.dim();
    let target = match (cfg.method, cfg.potential.penalty_alpha) {
        (Method::Penalized, _) | (_, None) => base.clone(),
        (_, Some(alpha)) => base.penalize(alpha)?,
    };
    let plan = match cfg.method {
        Method::Penalized => {
            let (m4, source) = match cfg.m4 {
                Some(m4) => (m4, M4Source::UserSupplied),
                None => {
                    let r = fourth_moment(&base, cfg.sigma)?;
                    (r.value, m4_source(r.method))
                }
            };
            let options = PenalizedOptions {
                mode: if cfg.statement_mode {
                    PenalizedMode::Statement
                } else {
                    PenalizedMode::Proof
                },
                alpha_override: cfg.potential.penalty_alpha,
                m4_source: source,
            };
            let mut plan = calibrate_penalized_with(
                cfg.epsilon,
                cfg.sigma,
                d,
                m4,
                base.profile().lipschitz,
                options,
            )?;
            plan.schedule = finish_schedule(cfg, plan.schedule)?;
            PreparedPlan::Penalized(plan)
        }
        Method::WeakI | Method::WeakIi => {
            let profile = target.profile();
            if !profile.is_parametric() {
                let hint = if cfg.potential.penalty_alpha.is_some() {
                    "potential.penalty_alpha makes the potential strongly convex"
                } else {
                    "potential.c_lower is missing"
                };
                return Err(CliError::Config(format!(
                    "method {} requires a parametric weak-convexity profile: {hint}",
                    cfg.method.name()
                )));
            }
            let constants = regime_constants(profile, d, cfg.sigma, cfg.c_r.unwrap_or(DEFAULT_C_R))?;
            let gamma0 = cfg.gamma0.unwrap_or(constants.gamma_star);
            let (schedule, variant) = if cfg.method == Method::WeakI {
                (
                    calibrate_weak_i(cfg.epsilon, cfg.delta(), gamma0, &constants, profile)?,
                    WeakVariant::I,
                )
            } else {
                (
                    calibrate_weak_ii(cfg.epsilon, cfg.delta(), cfg.rho(), gamma0, &constants, profile)?,
                    WeakVariant::Ii,
                )
            };
            let bound = complexity_bound_weak(
                variant,
                cfg.epsilon,
                cfg.delta(),
                cfg.rho(),
                gamma0,
                &constants,
                profile,
            )?;
            PreparedPlan::Schedule {
                schedule: finish_schedule(cfg, schedule)?,
                constants: Some(constants),
                predicted_cost: Some(bound),
            }
        }
        Method::SingleLevel => {
            let profile = target.profile();
            let gamma0 = match cfg.gamma0 {
                Some(g) => g,
                None => admissible_step(profile)?.min(cfg.epsilon * cfg.epsilon),
            };
            let contraction = match profile.c_lower {
                _ if profile.alpha > 0.0 => profile.alpha,
                Some(c) => c,
                None => 1.0,
            };
            let t0 = d as f64 * cfg.sigma * cfg.sigma / (cfg.epsilon * cfg.epsilon)
                * (1.0f64 / contraction).max(1.0);
            PreparedPlan::Schedule {
                schedule: finish_schedule(cfg, LevelSchedule::single_level(gamma0, t0, 0.0)?)?,
                constants: None,
                predicted_cost: None,
            }
        }
    };
    Ok(Prepared { target, plan })
}

/// The calibrated plan as pretty-printed JSON.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let prepared = prepare(cfg)?;
    let s = prepared.plan.schedule();
    let mut out = json!({
        "method": cfg.method.name(),
        "potential": prepared.target.label(),
        "dim": prepared.target.dim(),
        "sigma": cfg.sigma,
        "epsilon": cfg.epsilon,
        "J": s.levels(),
        "gamma": s.gammas(),
        "T": s.horizons(),
        "tau": s.tau(),
        "rho": s.rho(),
        "safety_T_multiplier": cfg.safety_t_multiplier,
        "schedule_cost": cost_of(s),
    });
    let obj = out.as_object_mut().expect("object literal");
    match &prepared.plan {
        PreparedPlan::Penalized(p) => {
            obj.insert("alpha".into(), json!(p.alpha));
            obj.insert("m4".into(), json!(p.m4));
            obj.insert("m4_source".into(), json!(p.m4_source));
            obj.insert("mode".into(), json!(p.mode));
            obj.insert("statement_mode".into(), json!(p.mode == PenalizedMode::Statement));
            obj.insert("lipschitz_penalized".into(), json!(p.lipschitz_penalized));
            obj.insert("levels_clamped".into(), json!(p.levels_clamped));
            obj.insert("predicted_cost".into(), json!(p.predicted_cost));
        }
        PreparedPlan::Schedule {
            constants,
            predicted_cost,
            ..
        } => {
            if let Some(c) = constants {
                obj.insert("gamma_star".into(), json!(c.gamma_star));
                obj.insert("psi_bar".into(), json!(c.psi_bar));
                obj.insert("c_r".into(), json!(c.c_r));
            }
            obj.insert("predicted_cost".into(), json!(predicted_cost));
        }
    }
    Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n")
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MseReport,
    /// CSV row without trailing newline.
    pub row: String,
}

pub fn reference(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<ReferenceValue, CliError> {
    let obs = cfg.observable()?;
    if cfg.test_hooks.zero_noise {
        let start = start_point(prepared)?;
        return Ok(ReferenceValue::exact(obs.eval(&start)));
    }
    reference_for(&prepared.target, cfg.sigma, obs).map_err(|e| match e {
        mlgibbs::Error::InvalidParameter(msg) => CliError::Oracle(msg),
        other => other.into(),
    })
}

/// Paths start at the minimizer of the simulated model.
fn start_point(prepared: &Prepared) -> Result<Vec<f64>, CliError> {
    Ok(prepared.plan.as_plan().simulated_model(&prepared.target)?.minimizer().to_vec())
}

pub fn run(cfg: &ExperimentConfig, execution: Execution) -> Result<RunOutcome, CliError> {
    let prepared = prepare(cfg)?;
    let reference = reference(cfg, &prepared)?;
    let obs = cfg.observable()?;
    let sigma = if cfg.test_hooks.zero_noise { 0.0 } else { cfg.sigma };
    if cfg.replicates < 2 {
        return Err(CliError::Config("run needs replicates >= 2".into()));
    }
    let options = MseOptions {
        execution,
        epsilon_target: Some(cfg.epsilon),
        ..Default::default()
    };
    let report = run_mse_experiment(
        &prepared.target,
        &|x: &[f64]| obs.eval(x),
        prepared.plan.as_plan(),
        sigma,
        reference,
        cfg.replicates,
        cfg.seed,
        &options,
    )?;
    let s = prepared.plan.schedule();
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.method.name(),
        prepared.target.label(),
        prepared.target.dim(),
        cfg.sigma,
        cfg.epsilon,
        s.levels(),
        s.gamma0(),
        s.horizons()[0],
        s.tau(),
        report.replicates,
        cfg.seed,
        report.mean,
        report.bias,
        report.variance,
        report.rmse,
        report.mean_cost,
    );
    Ok(RunOutcome { report, row })
}

/// Exit-code-4 check of `--assert-eps`.
pub fn check_epsilon(outcome: &RunOutcome, epsilon: f64, tolerance: f64) -> Result<(), CliError> {
    let limit = epsilon * tolerance;
    if outcome.report.rmse > limit {
        Err(CliError::EpsilonAssert {
            rmse: outcome.report.rmse,
            limit,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<RunOutcome>,
    pub cost_slope: f64,
    pub csv: String,
}

/// One run per `ε`, plus the log-log slope of mean cost against `ε`.
pub fn sweep(cfg: &ExperimentConfig, epsilons: &[f64], execution: Execution) -> Result<SweepOutcome, CliError> {
    if epsilons.len() < 3 {
        return Err(CliError::Config(format!(
            "sweep needs at least three epsilon values, got {}",
            epsilons.len()
        )));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut c = cfg.clone();
        c.epsilon = eps;
        c.validate()?;
        rows.push(run(&c, execution)?);
    }
    let costs: Vec<f64> = rows.iter().map(|r| r.report.mean_cost).collect();
    let cost_slope = log_log_slope(epsilons, &costs).map_err(|e| CliError::Config(format!("sweep: {e}")))?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.row);
        csv.push('\n');
    }
    csv.push_str(&format!("# fitted_cost_slope={cost_slope}\n"));
    Ok(SweepOutcome { rows, cost_slope, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{"potential": {{"name": "quadratic", "dim": 1}}, "sigma": 1.0, "epsilon": 0.1,
                "method": "penalized", "f": "coord:0", "replicates": 4, "seed": 7 {extra}}}"#
        );
        ExperimentConfig::from_json(&text).unwrap()
    }

    #[test]
    fn calibrate_penalized_json() {
        let out: serde_json::Value = serde_json::from_str(&calibrate(&cfg("")).unwrap()).unwrap();
        assert!((out["alpha"].as_f64().unwrap() - 0.23094010767585).abs() < 1e-12);
        assert_eq!(out["J"], 11);
        assert_eq!(out["m4_source"], "closed_form");
        assert_eq!(out["mode"], "proof");
    }

    #[test]
    fn weak_on_plain_quadratic_names_c_lower() {
        let mut c = cfg("");
        c.method = Method::WeakI;
        let err = calibrate(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("c_lower"));
    }

    #[test]
    fn single_level_has_no_corrections() {
        let mut c = cfg("");
        c.method = Method::SingleLevel;
        let out: serde_json::Value = serde_json::from_str(&calibrate(&c).unwrap()).unwrap();
        assert_eq!(out["J"], 0);
    }

    #[test]
    fn safety_multiplier_scales_horizons() {
        let a = prepare(&cfg("")).unwrap();
        let b = prepare(&cfg(r#", "safety_T_multiplier": 4"#)).unwrap();
        let (sa, sb) = (a.plan.schedule(), b.plan.schedule());
        assert!((sb.horizons()[0] / sa.horizons()[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn zero_noise_row_has_no_variance() {
        let mut c = cfg(r#", "test_hooks": {"zero_noise": true}"#);
        c.f = "norm2".into();
        c.epsilon = 0.4;
        let out = run(&c, Execution::Sequential).unwrap();
        assert_eq!(out.report.variance, 0.0);
        assert_eq!(out.report.rmse, 0.0);
        assert_eq!(out.row.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn sweep_needs_three_points() {
        assert_eq!(sweep(&cfg(""), &[0.4, 0.2], Execution::Sequential).unwrap_err().exit_code(), 2);
    }
}
