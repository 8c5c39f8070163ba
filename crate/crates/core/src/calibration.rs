//! Closed-form level schedules, complexity bounds and penalization bias bounds.

use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::estimator::cost_of;
use crate::potentials::{ConvexityKind, ConvexityProfile};
use crate::sde::{averaging_window, grid_steps};

/// Default value of the `r`-dependent constant in the moment envelope.
pub const DEFAULT_C_R: f64 = 1.0;
/// Largest supported number of correcting levels.
pub const MAX_LEVELS: usize = 60;

/// Largest step count per level; beyond it grid times lose integer precision.
pub const MAX_GRID_STEPS: u64 = 1 << 53;

/// Step sizes `γ_j = γ_0·2^{-j}`, horizons `T_j` and warm-start time `τ`.
///
/// Horizons are stored rounded up to whole coarse cells: `T_0` to a multiple
/// of `γ_0`, `T_j` (j ≥ 1) to a multiple of `γ_{j-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSchedule {
    #[serde(rename = "J")]
    levels: usize,
    #[serde(rename = "gamma")]
    gammas: Vec<f64>,
    #[serde(rename = "T")]
    horizons: Vec<f64>,
    #[serde(skip)]
    steps: Vec<u64>,
    tau: f64,
    /// Exponent of the horizon decay `T_j ∝ 2^{-(1-ρ)j}` the schedule was built with.
    rho: f64,
}

impl LevelSchedule {
    /// Builds a schedule from unrounded horizons `T_0..=T_J`.
    pub fn new(gamma0: f64, horizons: &[f64], tau: f64, rho: f64) -> Result<Self> {
        ensure_positive("gamma0", gamma0)?;
        if horizons.is_empty() {
            return Err(Error::invalid("schedule needs at least one horizon"));
        }
        let levels = horizons.len() - 1;
        if levels > MAX_LEVELS {
            return Err(Error::invalid(format!(
                "J = {levels} exceeds the supported maximum {MAX_LEVELS}"
            )));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1], got {rho}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!("tau must be nonnegative, got {tau}")));
        }
        // Multiplying by a power of two is exact.
        let gammas: Vec<f64> = (0..=levels).map(|j| gamma0 * 0.5f64.powi(j as i32)).collect();
        let mut steps = Vec::with_capacity(levels + 1);
        let mut rounded = Vec::with_capacity(levels + 1);
        for (j, &t) in horizons.iter().enumerate() {
            ensure_positive("T_j", t)?;
            let cell = if j == 0 { gammas[0] } else { gammas[j - 1] };
            if t / cell > MAX_GRID_STEPS as f64 {
                return Err(Error::InfeasibleCalibration {
                    quantity: "T_j/gamma",
                    value: t / cell,
                    reason: format!("level {j} would need more than 2^53 steps"),
                });
            }
            let n = grid_steps(t, cell).max(1);
            steps.push(n);
            rounded.push(n as f64 * cell);
        }
        let schedule = LevelSchedule {
            levels,
            gammas,
            horizons: rounded,
            steps,
            tau,
            rho,
        };
        for j in 0..=levels {
            averaging_window(tau, schedule.horizons[j], schedule.coarse_gamma(j))?;
        }
        Ok(schedule)
    }

    /// `T_j = T_0·2^{-(1-ρ)j}` for `j = 0..=J`.
    pub fn geometric(gamma0: f64, levels: usize, t0: f64, rho: f64, tau: f64) -> Result<Self> {
        ensure_positive("T_0", t0)?;
        let horizons: Vec<f64> = (0..=levels)
            .map(|j| t0 * 2f64.powf(-(1.0 - rho) * j as f64))
            .collect();
        Self::new(gamma0, &horizons, tau, rho)
    }

    pub fn single_level(gamma0: f64, t0: f64, tau: f64) -> Result<Self> {
        Self::new(gamma0, &[t0], tau, 0.0)
    }

    /// Multiplies every horizon by `factor` and re-rounds.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ensure_positive("horizon multiplier", factor)?;
        let horizons: Vec<f64> = self.horizons.iter().map(|t| t * factor).collect();
        Self::new(self.gammas[0], &horizons, self.tau, self.rho)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.gammas[0], &self.horizons, tau, self.rho)
    }

    /// Number of correcting levels `J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn gamma0(&self) -> f64 {
        self.gammas[0]
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn horizons(&self) -> &[f64] {
        &self.horizons
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Step of the grid level `j` is averaged on: `γ_0` for `j = 0`, else `γ_{j-1}`.
    pub fn coarse_gamma(&self, level: usize) -> f64 {
        if level == 0 {
            self.gammas[0]
        } else {
            self.gammas[level - 1]
        }
    }

    /// Number of coarse steps simulated on `level`: `T_j / coarse_gamma(j)`.
    pub fn coarse_steps(&self, level: usize) -> u64 {
        self.steps[level]
    }
}

/// Maximal admissible step `γ*` and moment envelope `Ψ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeConstants {
    pub gamma_star: f64,
    pub psi_bar: f64,
    pub c_r: f64,
}

/// `γ*` of a parametric profile; `1/(4L)` for every other profile.
pub fn admissible_step(profile: &ConvexityProfile) -> Result<f64> {
    ensure_positive("lipschitz", profile.lipschitz)?;
    Ok(match profile.kind {
        ConvexityKind::ParamH1H2 => {
            let c_upper = profile
                .c_upper
                .ok_or_else(|| Error::invalid("ParamH1H2 profile requires c_upper"))?;
            let r = profile.r.ok_or_else(|| Error::invalid("profile requires r"))?;
            (1.0 - r) / (4.0 * c_upper.max(profile.lipschitz))
        }
        _ => 1.0 / (4.0 * profile.lipschitz),
    })
}

pub fn regime_constants(
    profile: &ConvexityProfile,
    dim: usize,
    sigma: f64,
    c_r: f64,
) -> Result<RegimeConstants> {
    if !profile.is_parametric() {
        return Err(Error::invalid(format!(
            "regime constants need a ParamH1 or ParamH1H2 profile, got {:?}",
            profile.kind
        )));
    }
    profile.validate()?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    ensure_positive("c_r", c_r)?;
    let d = dim as f64;
    let l = profile.lipschitz;
    let c_lower = profile.c_lower.expect("validated");
    let r = profile.r.expect("validated");
    let noise = 1.0 + sigma * sigma;
    let psi_bar = match profile.kind {
        ConvexityKind::ParamH1 => noise * (d * l + (1.0 + d * l / c_lower).powf(1.0 / (1.0 - r))),
        _ => {
            let c_upper = profile.c_upper.expect("validated");
            c_r * d * noise * c_upper.max(l) / c_lower
        }
    };
    Ok(RegimeConstants {
        gamma_star: admissible_step(profile)?,
        psi_bar,
        c_r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PenalizedMode {
    /// `T_j ∝ m4·ε^{-4}·2^{-j}`, `γ_0 = α/(2(L+α)²)`.
    Proof,
    /// Constant horizons `T_j ∝ m4·ε^{-5}·2^{-J}`, `γ_0 = ε·m4^{-1/2}·L^{-2}`.
    Statement,
}

/// Where the fourth moment `E_π|X|⁴` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum M4Source {
    ClosedForm,
    Quadrature,
    LongRunOracle,
    Pilot,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenalizedPlan {
    pub alpha: f64,
    pub schedule: LevelSchedule,
    pub m4: f64,
    pub m4_source: M4Source,
    pub mode: PenalizedMode,
    /// Lipschitz constant of the penalized gradient used for `γ_0`.
    pub lipschitz_penalized: f64,
    /// `J` fell below one and was clamped.
    pub levels_clamped: bool,
    pub predicted_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenalizedOptions {
    pub mode: PenalizedMode,
    /// Replaces the calibrated `α = 2ε/√m4`.
    pub alpha_override: Option<f64>,
    pub m4_source: M4Source,
}

impl Default for PenalizedOptions {
    fn default() -> Self {
        PenalizedOptions {
            mode: PenalizedMode::Proof,
            alpha_override: None,
            m4_source: M4Source::UserSupplied,
        }
    }
}

/// Penalized calibration with default options (proof-mode horizons).
pub fn calibrate_penalized(
    epsilon: f64,
    sigma: f64,
    dim: usize,
    m4: f64,
    lipschitz: f64,
) -> Result<PenalizedPlan> {
    calibrate_penalized_with(epsilon, sigma, dim, m4, lipschitz, PenalizedOptions::default())
}

pub fn calibrate_penalized_with(
    epsilon: f64,
    sigma: f64,
    dim: usize,
    m4: f64,
    lipschitz: f64,
    options: PenalizedOptions,
) -> Result<PenalizedPlan> {
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("sigma", sigma)?;
    ensure_positive("m4", m4)?;
    ensure_positive("L", lipschitz)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let d = dim as f64;
    let s2d = sigma * sigma * d;
    let alpha = match options.alpha_override {
        Some(a) => {
            ensure_positive("penalty_alpha", a)?;
            a
        }
        None => 2.0 * epsilon / m4.sqrt(),
    };
    let lipschitz_penalized = lipschitz + alpha;

    let (gamma0, raw_levels, rho) = match options.mode {
        PenalizedMode::Proof => (
            alpha / (2.0 * lipschitz_penalized * lipschitz_penalized),
            (2.0 * (s2d / (alpha * epsilon)).log2()).ceil(),
            0.0,
        ),
        PenalizedMode::Statement => (
            epsilon / (m4.sqrt() * lipschitz * lipschitz),
            (2.0 * (s2d * m4.sqrt() / (epsilon * epsilon)).log2()).ceil(),
            1.0,
        ),
    };
    if gamma0 >= 1.0 {
        return Err(Error::InfeasibleCalibration {
            quantity: "gamma0",
            value: gamma0,
            reason: "log(1/gamma0) must be positive".into(),
        });
    }
    let levels_clamped = raw_levels < 1.0;
    if levels_clamped {
        log::warn!("epsilon = {epsilon} gives J = {raw_levels}; clamping to J = 1");
    }
    let levels = raw_levels.max(1.0) as usize;
    if levels > MAX_LEVELS {
        return Err(Error::InfeasibleCalibration {
            quantity: "J",
            value: levels as f64,
            reason: format!("more than {MAX_LEVELS} levels"),
        });
    }
    let jf = levels as f64;
    let log_inv_gamma0 = (1.0 / gamma0).ln();
    let horizons: Vec<f64> = match options.mode {
        PenalizedMode::Proof => {
            let t0 = s2d * log_inv_gamma0 / (alpha * alpha) / (epsilon * epsilon) * jf * jf;
            (0..=levels).map(|j| t0 * 0.5f64.powi(j as i32)).collect()
        }
        PenalizedMode::Statement => {
            let t = s2d * log_inv_gamma0 * m4 * epsilon.powi(-5) * jf * jf * 0.5f64.powi(levels as i32);
            vec![t; levels + 1]
        }
    };
    let schedule = LevelSchedule::new(gamma0, &horizons, 0.0, rho)?;
    let last = schedule.horizons()[levels];
    if last < gamma0 {
        return Err(Error::InfeasibleCalibration {
            quantity: "T_J",
            value: last,
            reason: format!("shorter than gamma0 = {gamma0}"),
        });
    }
    Ok(PenalizedPlan {
        alpha,
        schedule,
        m4,
        m4_source: options.m4_source,
        mode: options.mode,
        lipschitz_penalized,
        levels_clamped,
        predicted_cost: complexity_bound_penalized(epsilon, sigma, dim, m4, lipschitz, gamma0)?,
    })
}

/// `(1/3)·log(1/γ_0)·m4^{3/2}·L²·σ²·d·ε^{-5}·⌈log₂(σ²d·m4^{1/2}·ε^{-3}/2)⌉³`.
///
/// The ceiling is floored at one so the bound stays positive for large `ε`.
pub fn complexity_bound_penalized(
    epsilon: f64,
    sigma: f64,
    dim: usize,
    m4: f64,
    lipschitz: f64,
    gamma0: f64,
) -> Result<f64> {
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("sigma", sigma)?;
    ensure_positive("m4", m4)?;
    ensure_positive("L", lipschitz)?;
    ensure_positive("gamma0", gamma0)?;
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let s2d = sigma * sigma * dim as f64;
    let log_levels = (0.5 * s2d * m4.sqrt() * epsilon.powi(-3)).log2().ceil().max(1.0);
    Ok((1.0 / 3.0)
        * (1.0 / gamma0).ln()
        * m4.powf(1.5)
        * lipschitz
        * lipschitz
        * s2d
        * epsilon.powi(-5)
        * log_levels.powi(3))
}

struct WeakInputs {
    lipschitz: f64,
    c_lower: f64,
    r: f64,
    psi_bar: f64,
}

fn weak_inputs(
    epsilon: f64,
    delta: f64,
    gamma0: f64,
    constants: &RegimeConstants,
    profile: &ConvexityProfile,
) -> Result<WeakInputs> {
    ensure_positive("epsilon", epsilon)?;
    ensure_positive("gamma0", gamma0)?;
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::invalid(format!("delta must lie in (0, 1/4], got {delta}")));
    }
    if !profile.is_parametric() {
        return Err(Error::invalid(format!(
            "weakly convex calibration needs a parametric profile, got {:?}",
            profile.kind
        )));
    }
    profile.validate()?;
    if gamma0 > constants.gamma_star * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "gamma0 = {gamma0} exceeds gamma* = {}",
            constants.gamma_star
        )));
    }
    Ok(WeakInputs {
        lipschitz: profile.lipschitz,
        c_lower: profile.c_lower.expect("validated"),
        r: profile.r.expect("validated"),
        psi_bar: constants.psi_bar,
    })
}

fn levels_from_log_argument(argument: f64) -> Result<usize> {
    let j = argument.log2().ceil().max(1.0);
    if !(j <= MAX_LEVELS as f64) {
        return Err(Error::InfeasibleCalibration {
            quantity: "J",
            value: j,
            reason: format!("more than {MAX_LEVELS} levels"),
        });
    }
    Ok(j as usize)
}

/// Schedule for a `C²` potential: `ρ = 1/2`, cost of order `ε^{-3}`.
pub fn calibrate_weak_i(
    epsilon: f64,
    delta: f64,
    gamma0: f64,
    constants: &RegimeConstants,
    profile: &ConvexityProfile,
) -> Result<LevelSchedule> {
    let w = weak_inputs(epsilon, delta, gamma0, constants, profile)?;
    let c = w.c_lower;
    let denom = c.powf(2.0 / (1.0 - delta)).min(c);
    let levels = levels_from_log_argument(
        w.lipschitz / denom * w.psi_bar.powf(1.0 + (3.0 + delta) * w.r) * gamma0 / (epsilon * epsilon),
    )?;
    let t0 = c.powf(-0.75).max(c.powf(-2.5 - delta))
        * w.psi_bar.powf(1.5 + (4.5 + delta) * w.r)
        / (epsilon * epsilon);
    LevelSchedule::geometric(gamma0, levels, t0, 0.5, 0.0)
}

/// Schedule for a `C³` potential: cost of order `ε^{-2-ρ}`.
pub fn calibrate_weak_ii(
    epsilon: f64,
    delta: f64,
    rho: f64,
    gamma0: f64,
    constants: &RegimeConstants,
    profile: &ConvexityProfile,
) -> Result<LevelSchedule> {
    let w = weak_inputs(epsilon, delta, gamma0, constants, profile)?;
    check_rho(rho)?;
    if !profile.c3 {
        return Err(Error::invalid("calibrate_weak_ii requires a C³ potential (profile.c3)"));
    }
    let c = w.c_lower;
    let levels = levels_from_log_argument(
        c.powf(-2.0 / (1.0 - delta))
            * w.lipschitz.powi(3)
            * w.psi_bar.powf(1.0 + 2.0 * w.r / (1.0 - delta))
            * gamma0
            / epsilon,
    )?;
    let c_factor = c
        .powf(-(1.25 - rho).min(3.0 * rho) + delta)
        .max(c.powf(-2.5 - delta));
    let t0 = w.lipschitz.powf(rho / 2.0)
        * c_factor
        * w.psi_bar.powf(1.0 + (4.0 - 2.0 * rho + delta) * w.r)
        / (epsilon * epsilon);
    LevelSchedule::geometric(gamma0, levels, t0, rho, 0.0)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must lie in (0, 1), got {rho}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakVariant {
    I,
    Ii,
}

pub fn complexity_bound_weak(
    variant: WeakVariant,
    epsilon: f64,
    delta: f64,
    rho: f64,
    gamma0: f64,
    constants: &RegimeConstants,
    profile: &ConvexityProfile,
) -> Result<f64> {
    let w = weak_inputs(epsilon, delta, gamma0, constants, profile)?;
    let c = w.c_lower;
    Ok(match variant {
        WeakVariant::I => {
            w.lipschitz.sqrt()
                * c.powf(-1.25).min(c.powf(-3.5 - delta))
                * w.psi_bar.powf(1.5 + (4.5 + delta) * w.r)
                * epsilon.powi(-3)
        }
        WeakVariant::Ii => {
            check_rho(rho)?;
            gamma0.powf(-rho)
                * w.lipschitz.powf(2.0 * rho)
                * c.powf(1.25f64.min(2.0 * rho) + delta).max(c.powf(-2.5 - delta))
                * w.psi_bar.powf(1.0 + rho / 2.0 + (4.0 - rho + delta) * w.r)
                * epsilon.powf(-2.0 - rho)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenalizationBias {
    /// Bound on `KL(π | π_α)`.
    pub kl: f64,
    /// Bound on `W₁(π, π_α)`.
    pub w1: f64,
}

/// `KL ≤ α²·m4/8` and `W₁ ≤ α·√m4/(2√2)`.
pub fn penalization_bias_bounds(alpha: f64, m4: f64) -> Result<PenalizationBias> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be nonnegative, got {alpha}")));
    }
    ensure_positive("m4", m4)?;
    Ok(PenalizationBias {
        kl: alpha * alpha * m4 / 8.0,
        w1: alpha * m4.sqrt() / (2.0 * std::f64::consts::SQRT_2),
    })
}

/// `e^{-2αt}·|x-y|² + (α-α̃)·d·σ²/α̃`: mean-square gap between shared-noise
/// diffusions penalized with `α` and `α̃ < α`.
pub fn decreasing_penalization_gap(
    alpha: f64,
    alpha_tilde: f64,
    dim: usize,
    sigma: f64,
    t: f64,
    xy_dist2: f64,
) -> Result<f64> {
    ensure_positive("alpha_tilde", alpha_tilde)?;
    if !(alpha > alpha_tilde) {
        return Err(Error::invalid(format!(
            "alpha ({alpha}) must exceed alpha_tilde ({alpha_tilde})"
        )));
    }
    if !(t >= 0.0) || !(xy_dist2 >= 0.0) {
        return Err(Error::invalid("t and |x-y|² must be nonnegative"));
    }
    Ok((-2.0 * alpha * t).exp() * xy_dist2
        + (alpha - alpha_tilde) * dim as f64 * sigma * sigma / alpha_tilde)
}

/// Closed-form gradient-evaluation count of a plan's schedule.
pub fn plan_cost(plan: &PenalizedPlan) -> u64 {
    cost_of(&plan.schedule)
}
