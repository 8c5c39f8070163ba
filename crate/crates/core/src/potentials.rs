//! Potential models `U` with closed-form gradients and convexity metadata.
//!
//! The Gibbs law associated with a potential at noise level `σ` is
//! `π ∝ exp(-2U/σ²)`, the invariant law of `dX = -∇U(X) dt + σ dB`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};

/// Gradient norm at which the penalized minimizer search stops.
pub const MINIMIZER_TOL: f64 = 1e-10;
/// Iteration cap of the penalized minimizer search.
pub const MINIMIZER_MAX_ITER: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityKind {
    /// Convex with `0 ≼ D²U ≼ L·Id`.
    WeaklyConvex,
    /// Smallest Hessian eigenvalue bounded below by `c_lower·U^{-r}`.
    ParamH1,
    /// `ParamH1` plus largest eigenvalue bounded above by `c_upper·U^{-r}`.
    ParamH1H2,
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityProfile {
    pub kind: ConvexityKind,
    /// Lipschitz constant of `∇U`.
    pub lipschitz: f64,
    pub c_lower: Option<f64>,
    pub c_upper: Option<f64>,
    /// Weak-convexity exponent in `[0, 1)`.
    pub r: Option<f64>,
    /// Strong-convexity modulus, zero unless `StronglyConvex`.
    pub alpha: f64,
    /// `U` is three times continuously differentiable.
    pub c3: bool,
}

impl ConvexityProfile {
    pub fn weakly_convex(lipschitz: f64) -> Self {
        ConvexityProfile {
            kind: ConvexityKind::WeaklyConvex,
            lipschitz,
            c_lower: None,
            c_upper: None,
            r: None,
            alpha: 0.0,
            c3: false,
        }
    }

    pub fn strongly_convex(alpha: f64, lipschitz: f64) -> Self {
        ConvexityProfile {
            kind: ConvexityKind::StronglyConvex,
            alpha,
            ..Self::weakly_convex(lipschitz)
        }
    }

    pub fn param_h1(lipschitz: f64, c_lower: f64, r: f64) -> Self {
        ConvexityProfile {
            kind: ConvexityKind::ParamH1,
            c_lower: Some(c_lower),
            r: Some(r),
            ..Self::weakly_convex(lipschitz)
        }
    }

    pub fn param_h1h2(lipschitz: f64, c_lower: f64, c_upper: f64, r: f64) -> Self {
        ConvexityProfile {
            kind: ConvexityKind::ParamH1H2,
            c_lower: Some(c_lower),
            c_upper: Some(c_upper),
            r: Some(r),
            ..Self::weakly_convex(lipschitz)
        }
    }

    pub fn with_c3(mut self, c3: bool) -> Self {
        self.c3 = c3;
        self
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self.kind, ConvexityKind::ParamH1 | ConvexityKind::ParamH1H2)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("lipschitz", self.lipschitz)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        match self.kind {
            ConvexityKind::WeaklyConvex => {}
            ConvexityKind::StronglyConvex => ensure_positive("alpha", self.alpha)?,
            ConvexityKind::ParamH1 | ConvexityKind::ParamH1H2 => {
                if self.lipschitz < 1.0 {
                    return Err(Error::invalid(format!(
                        "parametric profiles require lipschitz >= 1, got {}",
                        self.lipschitz
                    )));
                }
                let c_lower = self
                    .c_lower
                    .ok_or_else(|| Error::invalid("parametric profile requires c_lower"))?;
                ensure_positive("c_lower", c_lower)?;
                let r = self
                    .r
                    .ok_or_else(|| Error::invalid("parametric profile requires r"))?;
                if !(0.0..1.0).contains(&r) {
                    return Err(Error::invalid(format!("r must lie in [0, 1), got {r}")));
                }
                if self.kind == ConvexityKind::ParamH1H2 {
                    let c_upper = self
                        .c_upper
                        .ok_or_else(|| Error::invalid("ParamH1H2 profile requires c_upper"))?;
                    if !(c_upper >= c_lower) {
                        return Err(Error::invalid(format!(
                            "c_upper ({c_upper}) must be >= c_lower ({c_lower})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Family {
    Quadratic { center: Vec<f64>, scale: f64 },
    Power { p: f64 },
    Penalized { base: Box<Family>, alpha: f64 },
    Custom { value: ValueFn, gradient: GradientFn },
}

impl Family {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Family::Quadratic { center, scale } => {
                0.5 * scale * x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>()
            }
            Family::Power { p } => (1.0 + norm2(x)).powf(*p),
            Family::Penalized { base, alpha } => base.value(x) + 0.5 * alpha * norm2(x),
            Family::Custom { value, .. } => value(x),
        }
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Family::Quadratic { center, scale } => {
                for ((o, a), c) in out.iter_mut().zip(x).zip(center) {
                    *o = scale * (a - c);
                }
            }
            Family::Power { p } => {
                let s = 1.0 + norm2(x);
                let factor = 2.0 * p * s.powf(p - 1.0);
                for (o, a) in out.iter_mut().zip(x) {
                    *o = factor * a;
                }
            }
            Family::Penalized { base, alpha } => {
                base.gradient_into(x, out);
                for (o, a) in out.iter_mut().zip(x) {
                    *o += alpha * a;
                }
            }
            Family::Custom { gradient, .. } => gradient(x, out),
        }
    }

    /// `U` as a function of the radius, for potentials symmetric about the origin.
    fn radial_value(&self, radius: f64) -> Option<f64> {
        match self {
            Family::Quadratic { center, scale } if center.iter().all(|&c| c == 0.0) => {
                Some(0.5 * scale * radius * radius)
            }
            Family::Quadratic { .. } => None,
            Family::Power { p } => Some((1.0 + radius * radius).powf(*p)),
            Family::Penalized { base, alpha } => {
                base.radial_value(radius).map(|v| v + 0.5 * alpha * radius * radius)
            }
            Family::Custom { .. } => None,
        }
    }

    fn label(&self) -> String {
        match self {
            Family::Quadratic { .. } => "quadratic".into(),
            Family::Power { .. } => "power".into(),
            Family::Penalized { base, .. } => format!("penalized({})", base.label()),
            Family::Custom { .. } => "custom".into(),
        }
    }
}

/// A potential `U: ℝ^d → ℝ` together with its gradient, convexity profile and minimizer.
///
/// Immutable after construction and cheap to clone; safe to share across threads.
#[derive(Clone)]
pub struct PotentialModel {
    dim: usize,
    family: Family,
    profile: ConvexityProfile,
    minimizer: Vec<f64>,
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialModel")
            .field("family", &self.family.label())
            .field("dim", &self.dim)
            .field("profile", &self.profile)
            .field("minimizer", &self.minimizer)
            .finish()
    }
}

impl PotentialModel {
    /// `U(x) = (scale/2)|x - center|²`.
    pub fn quadratic(dim: usize, center: &[f64], scale: f64) -> Result<Self> {
        check_dim(dim)?;
        ensure_positive("scale", scale)?;
        if center.len() != dim {
            return Err(Error::invalid(format!(
                "center has length {}, expected {dim}",
                center.len()
            )));
        }
        Ok(PotentialModel {
            dim,
            family: Family::Quadratic {
                center: center.to_vec(),
                scale,
            },
            profile: ConvexityProfile::strongly_convex(scale, scale).with_c3(true),
            minimizer: center.to_vec(),
        })
    }

    /// `U ≡ 0`. Only meaningful for coupling and noise tests.
    #[doc(hidden)]
    pub fn zero(dim: usize) -> Self {
        PotentialModel {
            dim,
            family: Family::Quadratic {
                center: vec![0.0; dim],
                scale: 0.0,
            },
            profile: ConvexityProfile::weakly_convex(f64::MIN_POSITIVE).with_c3(true),
            minimizer: vec![0.0; dim],
        }
    }

    /// `U(x) = (1 + |x|²)^p` with `p ∈ (1/2, 1]`.
    ///
    /// Satisfies both parametric weak-convexity bounds with `r = (1-p)/p`,
    /// `c_lower = 2p(2p-1)` and `c_upper = 2p`. `L = max(2p, 1)`.
    pub fn power(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(p > 0.5 && p <= 1.0) {
            return Err(Error::invalid(format!("power exponent p must lie in (1/2, 1], got {p}")));
        }
        let profile = ConvexityProfile::param_h1h2(
            (2.0 * p).max(1.0),
            2.0 * p * (2.0 * p - 1.0),
            2.0 * p,
            (1.0 - p) / p,
        )
        .with_c3(true);
        Ok(PotentialModel {
            dim,
            family: Family::Power { p },
            profile,
            minimizer: vec![0.0; dim],
        })
    }

    /// A user-supplied potential. The profile is validated; the minimizer is trusted.
    pub fn custom(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        profile: ConvexityProfile,
        minimizer: Vec<f64>,
    ) -> Result<Self> {
        check_dim(dim)?;
        profile.validate()?;
        if minimizer.len() != dim {
            return Err(Error::invalid("minimizer dimension mismatch"));
        }
        Ok(PotentialModel {
            dim,
            family: Family::Custom {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
            },
            profile,
            minimizer,
        })
    }

    /// `U_α(x) = U(x) + (α/2)|x|²`, strongly convex with modulus `α` and
    /// Lipschitz constant `L + α`. The minimizer is located by gradient descent.
    pub fn penalize(&self, alpha: f64) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        let family = Family::Penalized {
            base: Box::new(self.family.clone()),
            alpha,
        };
        let lipschitz = self.profile.lipschitz + alpha;
        let minimizer = descend_to_minimizer(&family, self.minimizer.clone(), lipschitz)?;
        Ok(PotentialModel {
            dim: self.dim,
            family,
            profile: ConvexityProfile::strongly_convex(alpha, lipschitz).with_c3(self.profile.c3),
            minimizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &ConvexityProfile {
        &self.profile
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    /// Short family name, e.g. `power` or `penalized(power)`.
    pub fn label(&self) -> String {
        self.family.label()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.family.value(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.family.gradient_into(x, out)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.gradient_into(x, &mut out);
        out
    }

    /// `U` at radius `ρ` if the potential depends on `|x|` only.
    pub fn radial_value(&self, radius: f64) -> Option<f64> {
        self.family.radial_value(radius)
    }

    pub fn is_radial(&self) -> bool {
        self.radial_value(0.0).is_some()
    }

    /// Closed-form Gaussian parameters `(mean, per-coordinate variance)` of the
    /// Gibbs law at noise `σ`, when the potential is quadratic (possibly penalized).
    pub fn gaussian_law(&self, sigma: f64) -> Option<(Vec<f64>, f64)> {
        let (center, scale) = quadratic_parts(&self.family)?;
        if scale <= 0.0 {
            return None;
        }
        Some((center, sigma * sigma / (2.0 * scale)))
    }
}

/// Quadratic `U(x) = (a/2)|x - c|² + const` for quadratic and penalized-quadratic families.
fn quadratic_parts(family: &Family) -> Option<(Vec<f64>, f64)> {
    match family {
        Family::Quadratic { center, scale } => Some((center.clone(), *scale)),
        Family::Penalized { base, alpha } => {
            let (center, scale) = quadratic_parts(base)?;
            let total = scale + alpha;
            Some((center.iter().map(|c| scale * c / total).collect(), total))
        }
        _ => None,
    }
}

fn descend_to_minimizer(family: &Family, start: Vec<f64>, lipschitz: f64) -> Result<Vec<f64>> {
    let step = 1.0 / lipschitz;
    let mut x = start;
    let mut grad = vec![0.0; x.len()];
    for _ in 0..MINIMIZER_MAX_ITER {
        family.gradient_into(&x, &mut grad);
        if norm2(&grad).sqrt() <= MINIMIZER_TOL {
            return Ok(x);
        }
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= step * gi;
        }
    }
    Err(Error::Convergence {
        what: "penalized minimizer search".into(),
        iterations: MINIMIZER_MAX_ITER,
    })
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::invalid("dimension must be positive"))
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fd_check(model: &PotentialModel, x: &[f64]) {
        let h = 1e-5;
        let grad = model.gradient(x);
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (model.value(&xp) - model.value(&xm)) / (2.0 * h);
            assert!(
                (fd - grad[i]).abs() <= 1e-5 * (1.0 + grad[i].abs()),
                "coordinate {i} at {x:?}: fd {fd} vs {}",
                grad[i]
            );
        }
    }

    /// Hessian by central differences of the gradient, symmetrised.
    fn fd_hessian(model: &PotentialModel, x: &[f64]) -> Vec<Vec<f64>> {
        let d = x.len();
        let h = 1e-5;
        let mut hess = vec![vec![0.0; d]; d];
        for j in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let gp = model.gradient(&xp);
            let gm = model.gradient(&xm);
            for i in 0..d {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for i in 0..d {
            for j in 0..i {
                let s = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }
        hess
    }

    /// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
    fn sym_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i]).collect()
    }

    #[test]
    fn quadratic_examples() {
        let q = PotentialModel::quadratic(1, &[0.0], 1.0).unwrap();
        assert_eq!(q.value(&[2.0]), 2.0);
        assert_eq!(q.gradient(&[2.0]), vec![2.0]);
        let q2 = PotentialModel::quadratic(2, &[1.0, 1.0], 3.0).unwrap();
        assert_eq!(q2.gradient(&[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(q2.profile().kind, ConvexityKind::StronglyConvex);
        assert_eq!(q2.profile().alpha, 3.0);
        assert_eq!(q2.profile().lipschitz, 3.0);
        assert_eq!(q2.minimizer(), &[1.0, 1.0]);
        let (mean, var) = q.gaussian_law(1.0).unwrap();
        assert_eq!(mean, vec![0.0]);
        assert_eq!(var, 0.5);
    }

    #[test]
    fn quadratic_rejects_bad_input() {
        assert!(matches!(
            PotentialModel::quadratic(1, &[0.0], 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(PotentialModel::quadratic(1, &[0.0], -1.0).is_err());
        assert!(PotentialModel::quadratic(2, &[0.0], 1.0).is_err());
        assert!(PotentialModel::quadratic(0, &[], 1.0).is_err());
    }

    #[test]
    fn power_examples() {
        let m = PotentialModel::power(1, 0.75).unwrap();
        let prof = m.profile();
        assert_eq!(prof.kind, ConvexityKind::ParamH1H2);
        assert_relative_eq!(prof.r.unwrap(), 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(prof.c_lower, Some(0.75));
        assert_eq!(prof.c_upper, Some(1.5));
        assert_eq!(prof.lipschitz, 1.5);
        assert_eq!(m.value(&[0.0]), 1.0);
        assert_eq!(m.gradient(&[0.0]), vec![0.0]);

        let one = PotentialModel::power(3, 1.0).unwrap();
        assert_eq!(one.profile().r, Some(0.0));
        assert_eq!(one.profile().c_lower, Some(2.0));
        assert_eq!(one.profile().c_upper, Some(2.0));
        assert_eq!(one.profile().lipschitz, 2.0);
        prof.validate().unwrap();
    }

    #[test]
    fn power_rejects_out_of_range_exponent() {
        for p in [0.5, 0.2, 1.01, f64::NAN] {
            assert!(matches!(PotentialModel::power(1, p), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn penalize_examples() {
        let q = PotentialModel::quadratic(1, &[0.0], 1.0).unwrap();
        let qa = q.penalize(1.0).unwrap();
        assert_eq!(qa.value(&[1.5]), 1.5 * 1.5);
        assert_eq!(qa.gradient(&[1.0]), vec![2.0]);

        let p = PotentialModel::power(1, 0.75).unwrap();
        let pa = p.penalize(0.5).unwrap();
        assert_eq!(pa.gradient(&[0.0]), vec![0.0]);
        assert_eq!(pa.minimizer(), &[0.0]);

        let pb = p.penalize(0.2).unwrap();
        assert_eq!(pb.profile().kind, ConvexityKind::StronglyConvex);
        assert_eq!(pb.profile().alpha, 0.2);
        assert_relative_eq!(pb.profile().lipschitz, 1.7);
        assert_eq!(pb.label(), "penalized(power)");
    }

    #[test]
    fn penalize_moves_off_center_minimizer() {
        let q = PotentialModel::quadratic(2, &[2.0, -1.0], 1.0).unwrap();
        let qa = q.penalize(1.0).unwrap();
        let g = qa.gradient(qa.minimizer());
        assert!(norm2(&g).sqrt() <= MINIMIZER_TOL);
        assert_relative_eq!(qa.minimizer()[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(qa.minimizer()[1], -0.5, epsilon = 1e-9);
        let (mean, var) = qa.gaussian_law(1.0).unwrap();
        assert_relative_eq!(mean[0], 1.0);
        assert_relative_eq!(var, 0.25);
    }

    #[test]
    fn penalize_rejects_nonpositive_alpha() {
        let q = PotentialModel::quadratic(1, &[0.0], 1.0).unwrap();
        assert!(matches!(q.penalize(0.0), Err(Error::InvalidParameter(_))));
        assert!(q.penalize(-0.1).is_err());
    }

    #[test]
    fn penalize_reports_nonconvergence() {
        // Declared L far above the true curvature makes the 1/L step crawl.
        let m = PotentialModel::custom(
            1,
            |x| 0.5 * (x[0] - 1.0).powi(2),
            |x, g| g[0] = x[0] - 1.0,
            ConvexityProfile::weakly_convex(1e9),
            vec![1.0],
        )
        .unwrap();
        assert!(matches!(m.penalize(0.1), Err(Error::Convergence { .. })));
    }

    #[test]
    fn profile_validation() {
        assert!(ConvexityProfile::param_h1(0.5, 1.0, 0.5).validate().is_err());
        assert!(ConvexityProfile::param_h1(1.0, 1.0, 1.0).validate().is_err());
        assert!(ConvexityProfile::param_h1h2(1.0, 2.0, 1.0, 0.5).validate().is_err());
        let mut missing = ConvexityProfile::param_h1(1.0, 1.0, 0.5);
        missing.c_lower = None;
        assert!(missing.validate().is_err());
        ConvexityProfile::param_h1(1.0, 1.0, 0.5).validate().unwrap();
        ConvexityProfile::weakly_convex(2.0).validate().unwrap();
    }

    #[test]
    fn radial_values_agree_with_full_evaluation() {
        let p = PotentialModel::power(3, 0.8).unwrap().penalize(0.3).unwrap();
        let x = [0.3, -1.2, 0.7];
        let r = norm2(&x).sqrt();
        assert_relative_eq!(p.radial_value(r).unwrap(), p.value(&x), max_relative = 1e-14);
        let off = PotentialModel::quadratic(1, &[1.0], 1.0).unwrap();
        assert!(!off.is_radial());
    }

    #[test]
    fn custom_potential_round_trip() {
        let m = PotentialModel::custom(
            1,
            |x| x[0].cosh(),
            |x, g| g[0] = x[0].sinh(),
            ConvexityProfile::weakly_convex(10.0),
            vec![0.0],
        )
        .unwrap();
        fd_check(&m, &[0.7]);
        assert_eq!(m.label(), "custom");
    }

    fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-8.0f64..8.0, dim)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn builtins_pass_gradient_check(x in point(3), p in 0.51f64..1.0, alpha in 0.01f64..2.0) {
            let models = [
                PotentialModel::quadratic(3, &[0.5, -1.0, 2.0], 1.7).unwrap(),
                PotentialModel::power(3, p).unwrap(),
                PotentialModel::power(3, p).unwrap().penalize(alpha).unwrap(),
            ];
            for m in &models {
                fd_check(m, &x);
                prop_assert!(m.value(&x) >= m.value(m.minimizer()));
            }
        }

        #[test]
        fn power_hessian_within_parametric_bounds(x in point(2), p in 0.55f64..=1.0) {
            let m = PotentialModel::power(2, p).unwrap();
            let prof = m.profile();
            let weight = m.value(&x).powf(-prof.r.unwrap());
            let eig = sym_eigenvalues(fd_hessian(&m, &x));
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo >= 0.99 * prof.c_lower.unwrap() * weight, "lo {} weight {}", lo, weight);
            prop_assert!(hi <= 1.01 * prof.c_upper.unwrap() * weight, "hi {} weight {}", hi, weight);
            prop_assert!(hi <= prof.lipschitz * (1.0 + 1e-6));
        }

        #[test]
        fn penalized_gradient_is_strongly_monotone(x in point(2), y in point(2), alpha in 0.01f64..2.0) {
            let m = PotentialModel::power(2, 0.75).unwrap().penalize(alpha).unwrap();
            let gx = m.gradient(&x);
            let gy = m.gradient(&y);
            let inner: f64 = (0..2).map(|i| (gx[i] - gy[i]) * (x[i] - y[i])).sum();
            let dist2: f64 = (0..2).map(|i| (x[i] - y[i]).powi(2)).sum();
            prop_assert!(inner >= alpha * dist2 - 1e-9);
        }

        #[test]
        fn gradients_are_lipschitz(x in point(2), y in point(2)) {
            for m in [
                PotentialModel::power(2, 0.75).unwrap(),
                PotentialModel::power(2, 0.6).unwrap().penalize(0.4).unwrap(),
            ] {
                let gx = m.gradient(&x);
                let gy = m.gradient(&y);
                let dg: f64 = (0..2).map(|i| (gx[i] - gy[i]).powi(2)).sum::<f64>().sqrt();
                let dx: f64 = (0..2).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dg <= m.profile().lipschitz * dx + 1e-12);
            }
        }
    }
}
