//! Experiment configuration files.

use std::path::Path;

use mlgibbs::diagnostics::Observable;
use mlgibbs::{ConvexityProfile, PotentialModel};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Penalized,
    WeakI,
    WeakIi,
    SingleLevel,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Penalized => "penalized",
            Method::WeakI => "weak_i",
            Method::WeakIi => "weak_ii",
            Method::SingleLevel => "single_level",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// `quadratic` or `power`.
    pub name: String,
    pub dim: usize,
    /// Exponent of the power potential.
    pub p: Option<f64>,
    /// Curvature of the quadratic potential (default 1).
    pub scale: Option<f64>,
    /// Center of the quadratic potential (default 0).
    pub center: Option<Vec<f64>>,
    pub penalty_alpha: Option<f64>,
    /// Parametric lower curvature constant; lets a quadratic run the weak methods.
    pub c_lower: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestHooks {
    /// Simulate with `σ = 0`; the reference becomes the point mass at the minimizer.
    #[serde(default)]
    pub zero_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialConfig,
    pub sigma: f64,
    pub epsilon: f64,
    pub method: Method,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub c_r: Option<f64>,
    pub tau: Option<f64>,
    pub gamma0: Option<f64>,
    #[serde(default)]
    pub statement_mode: bool,
    pub f: String,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default = "default_multiplier", rename = "safety_T_multiplier")]
    pub safety_t_multiplier: f64,
    /// Supplied `E_π|X|⁴`; computed from an oracle when absent.
    pub m4: Option<f64>,
    #[doc(hidden)]
    #[serde(default)]
    pub test_hooks: TestHooks,
}

fn default_multiplier() -> f64 {
    1.0
}

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_RHO: f64 = 0.5;

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{field} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Field-level checks that do not need the potential model.
    pub fn validate(&self) -> Result<(), CliError> {
        positive("sigma", self.sigma)?;
        positive("epsilon", self.epsilon)?;
        positive("safety_T_multiplier", self.safety_t_multiplier)?;
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be positive".into()));
        }
        for (name, v) in [
            ("delta", self.delta),
            ("rho", self.rho),
            ("c_r", self.c_r),
            ("gamma0", self.gamma0),
            ("m4", self.m4),
            ("potential.penalty_alpha", self.potential.penalty_alpha),
            ("potential.c_lower", self.potential.c_lower),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let Some(tau) = self.tau {
            if !(tau >= 0.0 && tau.is_finite()) {
                return Err(CliError::Config(format!("tau must be nonnegative, got {tau}")));
            }
        }
        if self.method == Method::Penalized && self.gamma0.is_some() {
            return Err(CliError::Config(
                "gamma0 cannot be overridden for method penalized; it follows from alpha".into(),
            ));
        }
        self.observable()?.check_dim(self.potential.dim).map_err(|e| CliError::Config(format!("f: {e}")))?;
        Ok(())
    }

    pub fn observable(&self) -> Result<Observable, CliError> {
        self.f
            .parse()
            .map_err(|e| CliError::Config(format!("f: {e}")))
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(DEFAULT_DELTA)
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(DEFAULT_RHO)
    }

    /// The base potential `U`, before any penalization.
    pub fn base_model(&self) -> Result<PotentialModel, CliError> {
        let pc = &self.potential;
        if pc.dim == 0 {
            return Err(CliError::Config("potential.dim must be positive".into()));
        }
        match pc.name.as_str() {
            "quadratic" => {
                if pc.p.is_some() {
                    return Err(CliError::Config("potential.p is not a quadratic parameter".into()));
                }
                let scale = pc.scale.unwrap_or(1.0);
                positive("potential.scale", scale)?;
                let center = pc.center.clone().unwrap_or_else(|| vec![0.0; pc.dim]);
                if center.len() != pc.dim {
                    return Err(CliError::Config(format!(
                        "potential.center has length {}, expected dim = {}",
                        center.len(),
                        pc.dim
                    )));
                }
                let model = PotentialModel::quadratic(pc.dim, &center, scale)?;
                match pc.c_lower {
                    None => Ok(model),
                    Some(c) if c > scale => Err(CliError::Config(format!(
                        "potential.c_lower = {c} exceeds the curvature {scale}"
                    ))),
                    Some(c) => {
                        // (a/2)|x-c|² satisfies the parametric bounds with r = 0.
                        let profile = ConvexityProfile::param_h1h2(scale, c, scale, 0.0).with_c3(true);
                        let u = {
                            let center = center.clone();
                            move |x: &[f64]| {
                                0.5 * scale * x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                            }
                        };
                        let g = {
                            let center = center.clone();
                            move |x: &[f64], out: &mut [f64]| {
                                for ((o, a), b) in out.iter_mut().zip(x).zip(&center) {
                                    *o = scale * (a - b);
                                }
                            }
                        };
                        Ok(PotentialModel::custom(pc.dim, u, g, profile, center)?)
                    }
                }
            }
            "power" => {
                if pc.scale.is_some() || pc.center.is_some() || pc.c_lower.is_some() {
                    return Err(CliError::Config(
                        "potential power takes only dim, p and penalty_alpha".into(),
                    ));
                }
                let p = pc
                    .p
                    .ok_or_else(|| CliError::Config("potential.p is required for power".into()))?;
                Ok(PotentialModel::power(pc.dim, p)?)
            }
            other => Err(CliError::Config(format!(
                "potential.name {other:?} is not one of quadratic, power"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "potential": {"name": "quadratic", "dim": 1},
        "sigma": 1.0, "epsilon": 0.1, "method": "penalized",
        "f": "coord:0", "replicates": 10, "seed": 7
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.method, Method::Penalized);
        assert_eq!(cfg.safety_t_multiplier, 1.0);
        assert_eq!(cfg.delta(), DEFAULT_DELTA);
        assert!(!cfg.statement_mode);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = BASE.replace("\"seed\": 7", "\"seed\": 7, \"sigmaa\": 1");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("sigmaa"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("\"sigma\": 1.0", "\"sigma\": -1.0"),
            ("coord:0", "coord:3"),
            ("coord:0", "custom-unsupported"),
            ("\"replicates\": 10", "\"replicates\": 0"),
        ] {
            let text = BASE.replace(from, to);
            assert!(ExperimentConfig::from_json(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn quadratic_with_c_lower_is_parametric() {
        let text = BASE.replace("\"dim\": 1", "\"dim\": 1, \"c_lower\": 0.5");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(cfg.base_model().unwrap().profile().is_parametric());
        let bad = BASE.replace("\"dim\": 1", "\"dim\": 1, \"c_lower\": 2.0");
        assert!(ExperimentConfig::from_json(&bad).unwrap().base_model().is_err());
    }
}
