//! Named diagnostic suites with pinned constants.

use std::fmt::Write as _;

use mlgibbs::calibration::{calibrate_weak_ii, penalization_bias_bounds, regime_constants, DEFAULT_C_R};
use mlgibbs::diagnostics::{
    confluence_curve, decreasing_penalization_probe, fourth_moment, level_variance_profile,
    moment_envelope_check, strong_error_curve, w1_distance_1d, PROXY_SLACK,
};
use mlgibbs::{Execution, PotentialModel};

use crate::error::CliError;

pub const SUITES: [&str; 6] = [
    "strong_error",
    "confluence",
    "moments",
    "level_variance",
    "penalization_bias",
    "decreasing_penalty",
];

/// Seed used when neither `--seed` nor `MLGIBBS_SEED` is given.
pub const DEFAULT_DIAG_SEED: u64 = 20240611;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagOutcome {
    pub suite: String,
    pub passed: bool,
    /// `key=value` lines; the last one is the verdict.
    pub report: String,
}

struct Checks {
    out: String,
    passed: bool,
}

impl Checks {
    fn new() -> Self {
        Checks {
            out: String::new(),
            passed: true,
        }
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.out.push_str(text.as_ref());
        self.out.push('\n');
    }

    fn check(&mut self, name: &str, value: f64, ok: bool, requirement: impl AsRef<str>) {
        self.passed &= ok;
        let _ = writeln!(
            self.out,
            "{name}={value} requirement: {} {}",
            requirement.as_ref(),
            if ok { "ok" } else { "FAILED" }
        );
    }
}

fn power() -> PotentialModel {
    PotentialModel::power(1, 0.75).expect("valid exponent")
}

pub fn run_suite(suite: &str, seed: u64, execution: Execution) -> Result<DiagOutcome, CliError> {
    let mut c = Checks::new();
    match suite {
        "strong_error" => {
            let gammas: Vec<f64> = (4..=9).map(|k| 2f64.powi(-k)).collect();
            let curve = strong_error_curve(&power(), 1.0, &[0.0], &gammas, 50.0, 2000, seed, execution)?;
            for p in &curve.points {
                c.line(format!("gamma={} mean_sq_gap={} stderr={}", p.gamma, p.mean_sq_gap, p.stderr));
            }
            let slope = curve.slope.unwrap_or(f64::NAN);
            c.check("slope", slope, (0.7..=1.3).contains(&slope), "in [0.7, 1.3]");
        }
        "confluence" => {
            let curve = confluence_curve(&power(), 1.0, &[3.0], &[-3.0], 0.05, 50.0, 500, seed, execution)?;
            let last = curve.last().expect("nonempty curve");
            c.line(format!("terminal_stderr={}", last.stderr));
            c.check("terminal_mean_sq_dist", last.mean_sq_dist, last.mean_sq_dist <= 3.6, "<= 0.1*36");
        }
        "moments" => {
            let r = moment_envelope_check(&power(), 1.0, &[0.0], 1.0 / 9.0, 2.0, 100.0, 200, seed, 8.0, execution)?;
            c.line(format!("envelope={}", r.envelope));
            c.check("sup_moment", r.sup_moment, r.holds, format!("<= {}", r.envelope));
        }
        "level_variance" => {
            let m = power();
            let constants = regime_constants(m.profile(), 1, 1.0, DEFAULT_C_R)?;
            let schedule = calibrate_weak_ii(0.4, 0.1, 0.5, constants.gamma_star, &constants, m.profile())?;
            let r = 2000u64;
            let p = level_variance_profile(&m, &|x: &[f64]| x[0], &schedule, 1.0, &[0.0], r, seed, execution)?;
            for l in &p.levels {
                c.line(format!("level={} variance={} T={} gamma={}", l.level, l.variance, l.horizon, l.gamma));
            }
            let limit = 3.0 / (r as f64).sqrt();
            c.check("max_abs_correlation", p.max_abs_correlation(), p.max_abs_correlation() <= limit, format!("<= {limit}"));
            let worst = p
                .levels
                .windows(2)
                .map(|w| w[1].variance / w[0].variance)
                .fold(0.0, f64::max);
            c.check("max_variance_ratio", worst, worst <= 2.0, "<= 2");
            let worst_t = p
                .levels
                .windows(2)
                .map(|w| (w[1].variance * w[1].horizon) / (w[0].variance * w[0].horizon))
                .fold(0.0, f64::max);
            c.check("max_variance_times_T_ratio", worst_t, worst_t <= 2.0, "<= 2");
            let gap = (p.total_variance - p.sum_of_level_variances()).abs();
            let tol = 3.0 * p.total_variance_stderr;
            c.check("total_minus_sum_of_levels", gap, gap <= tol, format!("<= {tol}"));
        }
        "penalization_bias" => {
            let m = power();
            let m4 = fourth_moment(&m, 1.0)?.value;
            c.line(format!("m4={m4}"));
            for alpha in [0.05, 0.1, 0.2] {
                let w1 = w1_distance_1d(&m, &m.penalize(alpha)?, 1.0)?;
                let bound = penalization_bias_bounds(alpha, m4)?.w1;
                c.check(&format!("w1[alpha={alpha}]"), w1, w1 < bound, format!("< {bound}"));
            }
        }
        "decreasing_penalty" => {
            let m = PotentialModel::quadratic(1, &[0.0], 1.0)?;
            let p = decreasing_penalization_probe(&m, 0.4, 0.2, 1.0, &[1.0], &[1.0], 0.005, 5.0, 500, seed, execution)?;
            c.line(format!("bound={} stderr={}", p.bound, p.stderr));
            let limit = PROXY_SLACK * p.bound;
            c.check("gap", p.gap, p.gap <= limit, format!("<= {limit}"));
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    c.line(format!("suite={suite} {}", if c.passed { "PASS" } else { "FAIL" }));
    Ok(DiagOutcome {
        suite: suite.to_string(),
        passed: c.passed,
        report: c.out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert_eq!(run_suite("foo", 1, Execution::Sequential).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn penalization_bias_suite_passes() {
        let out = run_suite("penalization_bias", 1, Execution::Sequential).unwrap();
        assert!(out.passed, "{}", out.report);
        assert!(out.report.ends_with("suite=penalization_bias PASS\n"));
    }
}
