//! Ground-truth values of `π(f)`: closed forms, quadrature and a long-run chain.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::quadrature::{gk15, integrate_from_panels};
use crate::calibration::admissible_step;
use crate::error::{Error, Result};
use crate::potentials::{norm2, PotentialModel};
use crate::sde::{derive_stream_id, grid_steps, EulerPath, NoiseStream};
use crate::stats;

/// Default relative tolerance of the quadrature oracles.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;
/// The domain is truncated where the integrand drops below `e^{-LOG_CUTOFF}` of its peak.
const LOG_CUTOFF: f64 = 36.841361487904734; // ln(1e16)
const MAX_PANELS: usize = 20_000;
const INITIAL_PANELS: usize = 32;
/// Cells of the CDF grid used by [`w1_distance_1d`].
const W1_CELLS: usize = 8192;
/// Stream family of the long-run oracle.
const ORACLE_STREAM_TAG: u8 = 5;
const ORACLE_BATCHES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMethod {
    ClosedForm,
    Quadrature1d,
    LongRunOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceValue {
    pub value: f64,
    pub method: ReferenceMethod,
    /// Quadrature error bound, or batch-means standard error for the long-run oracle.
    pub error_estimate: f64,
}

impl ReferenceValue {
    pub fn exact(value: f64) -> Self {
        ReferenceValue {
            value,
            method: ReferenceMethod::ClosedForm,
            error_estimate: 0.0,
        }
    }
}

/// Observables addressable by name from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `x_k`, zero-based.
    Coord(usize),
    /// `|x|`.
    Norm,
    /// `|x|²`.
    Norm2,
}

impl Observable {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Observable::Coord(k) => x[k],
            Observable::Norm => norm2(x).sqrt(),
            Observable::Norm2 => norm2(x),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match *self {
            Observable::Coord(k) if k >= dim => Err(Error::invalid(format!(
                "observable coord:{k} is out of range for dimension {dim}"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" => Ok(Observable::Norm),
            "norm2" => Ok(Observable::Norm2),
            _ => s
                .strip_prefix("coord:")
                .and_then(|k| k.parse().ok())
                .map(Observable::Coord)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "unsupported observable {s:?}; expected coord:<k>, norm or norm2"
                    ))
                }),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Coord(k) => write!(f, "coord:{k}"),
            Observable::Norm => f.write_str("norm"),
            Observable::Norm2 => f.write_str("norm2"),
        }
    }
}

/// Unnormalized log-density on a half-line or line, with its truncated support.
struct LogDensity<'a> {
    log_w: Box<dyn Fn(f64) -> f64 + 'a>,
    lo: f64,
    hi: f64,
    peak: f64,
}

impl LogDensity<'_> {
    fn weight(&self, x: f64) -> f64 {
        ((self.log_w)(x) - self.peak).exp()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("Gibbs density needs sigma > 0, got {sigma}")))
    }
}

/// Walks outward from `start` with doubling steps until the log weight falls
/// `LOG_CUTOFF` (plus the log-growth of `f`) below `peak`.
fn find_edge(
    log_w: &dyn Fn(f64) -> f64,
    growth: &dyn Fn(f64) -> f64,
    start: f64,
    direction: f64,
    scale: f64,
    peak: f64,
) -> Result<f64> {
    let mut h = scale;
    for _ in 0..200 {
        let x = start + direction * h;
        if log_w(x) + growth(x).abs().ln_1p() < peak - LOG_CUTOFF {
            return Ok(x);
        }
        h *= 1.5;
    }
    Err(Error::OracleFailure("density does not decay; cannot truncate the domain".into()))
}

/// Max of `log_w` sampled on a grid of `[lo, hi]`, together with `at`.
fn grid_peak(log_w: &dyn Fn(f64) -> f64, lo: f64, hi: f64, at: f64) -> f64 {
    let n = 2000;
    (0..=n)
        .map(|i| log_w(lo + (hi - lo) * i as f64 / n as f64))
        .chain(std::iter::once(log_w(at)))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn line_density<'a>(
    model: &'a PotentialModel,
    sigma: f64,
    growth: &dyn Fn(f64) -> f64,
) -> Result<LogDensity<'a>> {
    if model.dim() != 1 {
        return Err(Error::invalid(format!(
            "one-dimensional quadrature needs dim = 1, got {}",
            model.dim()
        )));
    }
    check_sigma(sigma)?;
    let center = model.minimizer()[0];
    let u_min = model.value(&[center]);
    let inv = 2.0 / (sigma * sigma);
    let log_w = move |x: f64| -inv * (model.value(&[x]) - u_min);
    let scale = sigma / model.profile().lipschitz.sqrt();
    let lo = find_edge(&log_w, growth, center, -1.0, scale, 0.0)?;
    let hi = find_edge(&log_w, growth, center, 1.0, scale, 0.0)?;
    Ok(LogDensity {
        log_w: Box::new(log_w),
        lo,
        hi,
        peak: 0.0,
    })
}

fn radial_density<'a>(
    model: &'a PotentialModel,
    sigma: f64,
    growth: &dyn Fn(f64) -> f64,
) -> Result<LogDensity<'a>> {
    check_sigma(sigma)?;
    let u0 = model
        .radial_value(0.0)
        .ok_or_else(|| Error::invalid("radial quadrature needs a radial potential"))?;
    let d = model.dim() as f64;
    let inv = 2.0 / (sigma * sigma);
    let log_w = move |r: f64| {
        let radial = if d == 1.0 { 0.0 } else { (d - 1.0) * r.ln() };
        radial - inv * (model.radial_value(r).expect("radial") - u0)
    };
    let scale = sigma * d.sqrt() / model.profile().lipschitz.sqrt();
    // The radial weight peaks near σ√(d/L); a crude bound is enough to
    // locate the upper edge relative to the true peak.
    let probe_hi = find_edge(&log_w, &|_| 0.0, 0.0, 1.0, scale, log_w(scale).max(0.0))?;
    let peak = grid_peak(&log_w, 0.0, probe_hi, scale);
    let hi = find_edge(&log_w, growth, 0.0, 1.0, scale, peak)?;
    Ok(LogDensity {
        log_w: Box::new(log_w),
        lo: 0.0,
        hi,
        peak,
    })
}

fn expectation(density: &LogDensity, f: &dyn Fn(f64) -> f64, tol: f64) -> Result<ReferenceValue> {
    let w = |x: f64| density.weight(x);
    let (z, z_err) = integrate_from_panels(&w, density.lo, density.hi, INITIAL_PANELS, 0.0, tol, MAX_PANELS)?;
    let (abs_mass, _) = integrate_from_panels(
        &|x: f64| f(x).abs() * w(x),
        density.lo,
        density.hi,
        INITIAL_PANELS,
        0.0,
        1e-3,
        MAX_PANELS,
    )?;
    let (num, num_err) = integrate_from_panels(
        &|x: f64| f(x) * w(x),
        density.lo,
        density.hi,
        INITIAL_PANELS,
        tol * abs_mass,
        tol,
        MAX_PANELS,
    )?;
    if !(z > 0.0) || !num.is_finite() {
        return Err(Error::OracleFailure("degenerate Gibbs normalization".into()));
    }
    let value = num / z;
    Ok(ReferenceValue {
        value,
        method: ReferenceMethod::Quadrature1d,
        error_estimate: num_err / z + value.abs() * z_err / z,
    })
}

/// `E_π f(X)` for a one-dimensional model by adaptive quadrature.
pub fn reference_moment<F: Fn(f64) -> f64>(
    model: &PotentialModel,
    sigma: f64,
    f: F,
) -> Result<ReferenceValue> {
    reference_moment_with_tol(model, sigma, f, DEFAULT_QUADRATURE_TOL)
}

pub fn reference_moment_with_tol<F: Fn(f64) -> f64>(
    model: &PotentialModel,
    sigma: f64,
    f: F,
    tol: f64,
) -> Result<ReferenceValue> {
    let density = line_density(model, sigma, &f)?;
    expectation(&density, &f, tol)
}

/// `E_π g(|X|)` for a radial model in any dimension, reduced to a radial integral.
pub fn reference_radial<G: Fn(f64) -> f64>(
    model: &PotentialModel,
    sigma: f64,
    g: G,
) -> Result<ReferenceValue> {
    let density = radial_density(model, sigma, &g)?;
    expectation(&density, &g, DEFAULT_QUADRATURE_TOL)
}

/// `E_π|X|⁴`, by the cheapest exact route available.
pub fn fourth_moment(model: &PotentialModel, sigma: f64) -> Result<ReferenceValue> {
    if let Some((mean, var)) = model.gaussian_law(sigma) {
        let a = norm2(&mean);
        let d = model.dim() as f64;
        return Ok(ReferenceValue::exact(
            (a + d * var).powi(2) + 2.0 * d * var * var + 4.0 * var * a,
        ));
    }
    if model.dim() == 1 {
        return reference_moment(model, sigma, |x| x.powi(4));
    }
    if model.is_radial() {
        return reference_radial(model, sigma, |r| r.powi(4));
    }
    long_run_oracle(model, sigma, |x: &[f64]| norm2(x).powi(2), 0)
}

/// `π(f)` for a named observable, preferring closed forms, then quadrature,
/// then the long-run chain.
pub fn reference_for(model: &PotentialModel, sigma: f64, obs: Observable) -> Result<ReferenceValue> {
    obs.check_dim(model.dim())?;
    if let Some((mean, var)) = model.gaussian_law(sigma) {
        match obs {
            Observable::Coord(k) => return Ok(ReferenceValue::exact(mean[k])),
            Observable::Norm2 => {
                return Ok(ReferenceValue::exact(norm2(&mean) + model.dim() as f64 * var))
            }
            Observable::Norm => {}
        }
    }
    if model.dim() == 1 {
        return reference_moment(model, sigma, |x| obs.eval(&[x]));
    }
    if model.is_radial() {
        return match obs {
            Observable::Coord(_) => Ok(ReferenceValue::exact(0.0)),
            Observable::Norm => reference_radial(model, sigma, |r| r),
            Observable::Norm2 => reference_radial(model, sigma, |r| r * r),
        };
    }
    long_run_oracle(model, sigma, |x: &[f64]| obs.eval(x), 0)
}

/// Single long chain with `γ = γ*/64` over `T = 10⁵·γ*`, discarding the
/// first tenth; the error estimate is the batch-means standard error.
pub fn long_run_oracle<F: Fn(&[f64]) -> f64>(
    model: &PotentialModel,
    sigma: f64,
    f: F,
    seed: u64,
) -> Result<ReferenceValue> {
    let gamma_star = admissible_step(model.profile())?;
    let gamma = gamma_star / 64.0;
    let steps = grid_steps(1e5 * gamma_star, gamma);
    let burn_in = steps / 10;
    let per_batch = (steps - burn_in) / ORACLE_BATCHES as u64;
    let mut noise = NoiseStream::new(seed, derive_stream_id(ORACLE_STREAM_TAG, 0, 0));
    let mut path = EulerPath::new(model, model.minimizer(), gamma, sigma)?;
    for _ in 0..burn_in {
        path.advance(&mut noise)?;
    }
    let mut batches = Vec::with_capacity(ORACLE_BATCHES);
    for _ in 0..ORACLE_BATCHES {
        let mut sum = 0.0;
        for _ in 0..per_batch {
            sum += f(path.position());
            path.advance(&mut noise)?;
        }
        batches.push(sum / per_batch as f64);
    }
    Ok(ReferenceValue {
        value: stats::mean(&batches),
        method: ReferenceMethod::LongRunOracle,
        error_estimate: stats::standard_error(&batches),
    })
}

/// `W₁(π_A, π_B) = ∫|F_A - F_B|` for one-dimensional models, with CDFs from
/// per-cell Gauss–Kronrod integration of the two Gibbs densities.
pub fn w1_distance_1d(a: &PotentialModel, b: &PotentialModel, sigma: f64) -> Result<f64> {
    let da = line_density(a, sigma, &|_| 0.0)?;
    let db = line_density(b, sigma, &|_| 0.0)?;
    let lo = da.lo.min(db.lo);
    let hi = da.hi.max(db.hi);
    let h = (hi - lo) / W1_CELLS as f64;
    let cdf = |density: &LogDensity| {
        let w = |x: f64| density.weight(x);
        let mut acc = vec![0.0; W1_CELLS + 1];
        for i in 0..W1_CELLS {
            let x0 = lo + h * i as f64;
            acc[i + 1] = acc[i] + gk15(&w, x0, x0 + h).0;
        }
        let total = acc[W1_CELLS];
        acc.iter_mut().for_each(|v| *v /= total);
        acc
    };
    let fa = cdf(&da);
    let fb = cdf(&db);
    if fa.iter().chain(&fb).any(|v| !v.is_finite()) {
        return Err(Error::OracleFailure("CDF normalization failed".into()));
    }
    // Composite Simpson on the node values.
    let g: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).collect();
    let mut sum = g[0] + g[W1_CELLS];
    for (i, v) in g.iter().enumerate().take(W1_CELLS).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(sum * h / 3.0)
}
