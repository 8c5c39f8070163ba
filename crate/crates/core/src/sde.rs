//! Seeded Gaussian noise, Euler–Maruyama paths, synchronously coupled
//! `(γ, γ/2)` pairs and occupation-measure averages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calibration::admissible_step;
use crate::error::{ensure_positive, Error, Result};
use crate::potentials::{ConvexityKind, PotentialModel};

/// Relative slack when snapping a time onto a step grid.
const GRID_SNAP: f64 = 1e-9;

/// Deterministic source of i.i.d. standard Gaussian vectors.
///
/// Backed by ChaCha8 keyed by `seed`, with `stream_id` selecting one of its
/// 2^64 independent streams.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
    cursor: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        NoiseStream {
            rng,
            seed,
            stream_id,
            cursor: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of Gaussian vectors emitted so far.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// Overwrites `out` with the next standard Gaussian vector.
    #[inline]
    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut self.rng);
        }
        self.cursor += 1;
    }

    pub fn next_vector(&mut self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.fill(&mut out);
        out
    }
}

/// Stream id for sub-stream `sub` of `replicate` within the family `tag`.
///
/// Layout: `tag` in bits 56..64, `replicate` in bits 16..56, `sub` in bits 0..16.
/// Estimator levels use tag 0 with `sub = level`.
pub fn derive_stream_id(tag: u8, replicate: u64, sub: u16) -> u64 {
    debug_assert!(replicate < 1 << 40, "replicate index exceeds 40 bits");
    ((tag as u64) << 56) | ((replicate & ((1 << 40) - 1)) << 16) | sub as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub position: Vec<f64>,
    pub step_index: u64,
    pub gamma: f64,
}

impl PathState {
    pub fn new(position: Vec<f64>, gamma: f64) -> Self {
        PathState {
            position,
            step_index: 0,
            gamma,
        }
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.gamma
    }
}

/// Fine (`γ/2`) and coarse (`γ`) states observed at a common coarse grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPathState {
    pub fine: PathState,
    pub coarse: PathState,
}

/// The Brownian increments of one coarse step, kept in audit mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingIncrement {
    /// Standard normals `z₁, z₂` drawn for the two fine steps.
    pub fine_normals: [Vec<f64>; 2],
    /// `σ√(γ/2)·z₁` and `σ√(γ/2)·z₂`.
    pub fine: [Vec<f64>; 2],
    /// Increment applied to the coarse path.
    pub coarse: Vec<f64>,
    /// `(z₁ + z₂)/√2`, the equivalent coarse standard normal.
    pub coarse_normal: Vec<f64>,
}

/// `γ·⌊t/γ⌋`, the last grid time not after `t`. Defined for every `t ≥ 0`.
pub fn floor_time(t: f64, gamma: f64) -> Result<f64> {
    ensure_positive("gamma", gamma)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be nonnegative, got {t}")));
    }
    let q = t / gamma;
    let n = q.round();
    let k = if (q - n).abs() <= GRID_SNAP * n.max(1.0) {
        n
    } else {
        q.floor()
    };
    Ok(gamma * k)
}

/// Number of `gamma`-steps covering `t`, rounding up off-grid times.
pub fn grid_steps(t: f64, gamma: f64) -> u64 {
    let q = t / gamma;
    let n = q.round();
    if (q - n).abs() <= GRID_SNAP * n.max(1.0) {
        n as u64
    } else {
        q.ceil() as u64
    }
}

/// Grid indices `[start, end)` with `τ ≤ kγ < T` after rounding both up to the grid.
pub(crate) fn averaging_window(tau: f64, horizon: f64, gamma: f64) -> Result<(u64, u64)> {
    if !(tau >= 0.0) || !(tau < horizon) {
        return Err(Error::invalid(format!(
            "averaging window requires 0 <= tau < T, got tau={tau}, T={horizon}"
        )));
    }
    let start = grid_steps(tau, gamma);
    let end = grid_steps(horizon, gamma);
    if end <= start {
        return Err(Error::invalid(format!(
            "empty averaging window: tau={tau}, T={horizon}, gamma={gamma}"
        )));
    }
    Ok((start, end))
}

fn check_step(model: &PotentialModel, gamma: f64, sigma: f64) -> Result<()> {
    ensure_positive("gamma", gamma)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    let profile = model.profile();
    if profile.is_parametric() {
        let gamma_star = admissible_step(profile)?;
        if gamma > gamma_star * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "step {gamma} exceeds the admissible step {gamma_star} of the parametric profile"
            )));
        }
    } else if profile.kind == ConvexityKind::WeaklyConvex && gamma * profile.lipschitz > 1.0 {
        log::warn!(
            "step {gamma} exceeds 1/L = {}; the scheme may be unstable",
            1.0 / profile.lipschitz
        );
    }
    Ok(())
}

fn check_point(model: &PotentialModel, x: &[f64], what: &str) -> Result<()> {
    if x.len() != model.dim() {
        return Err(Error::invalid(format!(
            "{what} has dimension {}, model dimension is {}",
            x.len(),
            model.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// `x ← x - γ∇U(x) + increment`, reporting overflow against `step`.
#[inline]
fn apply_step(
    model: &PotentialModel,
    x: &mut [f64],
    grad: &mut [f64],
    gamma: f64,
    increment: &[f64],
    step: u64,
) -> Result<()> {
    model.gradient_into(x, grad);
    let mut finite = true;
    for ((xi, gi), wi) in x.iter_mut().zip(grad.iter()).zip(increment) {
        *xi = *xi - gamma * gi + wi;
        finite &= xi.is_finite();
    }
    if finite {
        Ok(())
    } else {
        Err(Error::NumericalOverflow { step, level: None })
    }
}

/// One Euler–Maruyama step `x' = x - γ∇U(x) + σ√γ·z`.
pub fn euler_step(
    model: &PotentialModel,
    state: &PathState,
    sigma: f64,
    z: &[f64],
) -> Result<PathState> {
    check_point(model, &state.position, "state")?;
    if z.len() != model.dim() {
        return Err(Error::invalid(format!(
            "noise has dimension {}, model dimension is {}",
            z.len(),
            model.dim()
        )));
    }
    ensure_positive("gamma", state.gamma)?;
    let scale = sigma * state.gamma.sqrt();
    let increment: Vec<f64> = z.iter().map(|v| scale * v).collect();
    let mut position = state.position.clone();
    let mut grad = vec![0.0; model.dim()];
    apply_step(
        model,
        &mut position,
        &mut grad,
        state.gamma,
        &increment,
        state.step_index + 1,
    )?;
    Ok(PathState {
        position,
        step_index: state.step_index + 1,
        gamma: state.gamma,
    })
}

/// Streaming Euler–Maruyama path.
#[derive(Debug)]
pub struct EulerPath<'m> {
    model: &'m PotentialModel,
    sigma_sqrt_gamma: f64,
    state: PathState,
    grad: Vec<f64>,
    increment: Vec<f64>,
}

impl<'m> EulerPath<'m> {
    pub fn new(model: &'m PotentialModel, x0: &[f64], gamma: f64, sigma: f64) -> Result<Self> {
        check_step(model, gamma, sigma)?;
        check_point(model, x0, "x0")?;
        Ok(EulerPath {
            model,
            sigma_sqrt_gamma: sigma * gamma.sqrt(),
            state: PathState::new(x0.to_vec(), gamma),
            grad: vec![0.0; model.dim()],
            increment: vec![0.0; model.dim()],
        })
    }

    pub fn state(&self) -> &PathState {
        &self.state
    }

    pub fn position(&self) -> &[f64] {
        &self.state.position
    }

    /// Advances one step, consuming one Gaussian vector.
    #[inline]
    pub fn advance(&mut self, noise: &mut NoiseStream) -> Result<()> {
        noise.fill(&mut self.increment);
        self.advance_with_normals_in_place();
        self.finish_step()
    }

    /// Advances one step with caller-supplied standard normals.
    pub fn advance_with(&mut self, z: &[f64]) -> Result<()> {
        self.increment.copy_from_slice(z);
        self.advance_with_normals_in_place();
        self.finish_step()
    }

    #[inline]
    fn advance_with_normals_in_place(&mut self) {
        for w in self.increment.iter_mut() {
            *w *= self.sigma_sqrt_gamma;
        }
    }

    #[inline]
    fn finish_step(&mut self) -> Result<()> {
        self.state.step_index += 1;
        apply_step(
            self.model,
            &mut self.state.position,
            &mut self.grad,
            self.state.gamma,
            &self.increment,
            self.state.step_index,
        )
    }
}

/// Streaming synchronously coupled pair: one coarse step of size `γ` per two
/// fine steps of size `γ/2`, driven by the same Brownian increments.
#[derive(Debug)]
pub struct CoupledPath<'m> {
    model: &'m PotentialModel,
    gamma_coarse: f64,
    fine_scale: f64,
    fine: PathState,
    coarse: PathState,
    grad: Vec<f64>,
    z: [Vec<f64>; 2],
    dw: [Vec<f64>; 2],
    dw_coarse: Vec<f64>,
}

impl<'m> CoupledPath<'m> {
    pub fn new(model: &'m PotentialModel, x0: &[f64], gamma_coarse: f64, sigma: f64) -> Result<Self> {
        check_step(model, gamma_coarse, sigma)?;
        check_point(model, x0, "x0")?;
        let d = model.dim();
        let gamma_fine = 0.5 * gamma_coarse;
        Ok(CoupledPath {
            model,
            gamma_coarse,
            fine_scale: sigma * gamma_fine.sqrt(),
            fine: PathState::new(x0.to_vec(), gamma_fine),
            coarse: PathState::new(x0.to_vec(), gamma_coarse),
            grad: vec![0.0; d],
            z: [vec![0.0; d], vec![0.0; d]],
            dw: [vec![0.0; d], vec![0.0; d]],
            dw_coarse: vec![0.0; d],
        })
    }

    pub fn fine(&self) -> &PathState {
        &self.fine
    }

    pub fn coarse(&self) -> &PathState {
        &self.coarse
    }

    pub fn snapshot(&self) -> CoupledPathState {
        CoupledPathState {
            fine: self.fine.clone(),
            coarse: self.coarse.clone(),
        }
    }

    /// One coarse step (two fine steps), consuming two Gaussian vectors.
    ///
    /// The coarse increment is the sum of the two fine Brownian increments,
    /// i.e. `σ√γ·(z₁+z₂)/√2`.
    #[inline]
    pub fn advance(&mut self, noise: &mut NoiseStream) -> Result<()> {
        noise.fill(&mut self.z[0]);
        noise.fill(&mut self.z[1]);
        for k in 0..2 {
            for (w, z) in self.dw[k].iter_mut().zip(&self.z[k]) {
                *w = self.fine_scale * z;
            }
        }
        for ((c, a), b) in self.dw_coarse.iter_mut().zip(&self.dw[0]).zip(&self.dw[1]) {
            *c = a + b;
        }
        for k in 0..2 {
            self.fine.step_index += 1;
            apply_step(
                self.model,
                &mut self.fine.position,
                &mut self.grad,
                self.fine.gamma,
                &self.dw[k],
                self.fine.step_index,
            )?;
        }
        self.coarse.step_index += 1;
        apply_step(
            self.model,
            &mut self.coarse.position,
            &mut self.grad,
            self.gamma_coarse,
            &self.dw_coarse,
            self.coarse.step_index,
        )
    }

    /// Increments consumed by the most recent [`advance`](Self::advance).
    pub fn last_increment(&self) -> CouplingIncrement {
        let coarse_normal = self.z[0]
            .iter()
            .zip(&self.z[1])
            .map(|(a, b)| (a + b) / std::f64::consts::SQRT_2)
            .collect();
        CouplingIncrement {
            fine_normals: self.z.clone(),
            fine: self.dw.clone(),
            coarse: self.dw_coarse.clone(),
            coarse_normal,
        }
    }
}

/// The `n_steps + 1` grid states of an Euler path started at `x0`.
pub fn simulate_path(
    model: &PotentialModel,
    x0: &[f64],
    gamma: f64,
    sigma: f64,
    n_steps: u64,
    noise: &mut NoiseStream,
) -> Result<Vec<PathState>> {
    let mut path = EulerPath::new(model, x0, gamma, sigma)?;
    let mut states = Vec::with_capacity(n_steps as usize + 1);
    states.push(path.state().clone());
    for _ in 0..n_steps {
        path.advance(noise)?;
        states.push(path.state().clone());
    }
    Ok(states)
}

/// Coupled states at the `n_coarse_steps + 1` coarse grid times.
pub fn simulate_coupled(
    model: &PotentialModel,
    x0: &[f64],
    gamma_coarse: f64,
    sigma: f64,
    n_coarse_steps: u64,
    noise: &mut NoiseStream,
) -> Result<Vec<CoupledPathState>> {
    simulate_coupled_audited(model, x0, gamma_coarse, sigma, n_coarse_steps, noise).map(|(s, _)| s)
}

/// As [`simulate_coupled`], also returning the increments of every coarse step.
pub fn simulate_coupled_audited(
    model: &PotentialModel,
    x0: &[f64],
    gamma_coarse: f64,
    sigma: f64,
    n_coarse_steps: u64,
    noise: &mut NoiseStream,
) -> Result<(Vec<CoupledPathState>, Vec<CouplingIncrement>)> {
    let mut pair = CoupledPath::new(model, x0, gamma_coarse, sigma)?;
    let mut states = Vec::with_capacity(n_coarse_steps as usize + 1);
    let mut audit = Vec::with_capacity(n_coarse_steps as usize);
    states.push(pair.snapshot());
    for _ in 0..n_coarse_steps {
        pair.advance(noise)?;
        states.push(pair.snapshot());
        audit.push(pair.last_increment());
    }
    Ok((states, audit))
}

/// `(γ/(T-τ))·Σ f(X̄_{kγ})` over grid indices with `τ ≤ kγ < T`.
///
/// `τ` and `T` are rounded up to the grid; `states[k]` must be the state at
/// step `k` for every index in the window.
pub fn occupation_average<F>(
    f: F,
    states: &[PathState],
    gamma: f64,
    tau: f64,
    horizon: f64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    ensure_positive("gamma", gamma)?;
    let (start, end) = averaging_window(tau, horizon, gamma)?;
    if (states.len() as u64) < end {
        return Err(Error::invalid(format!(
            "path has {} states but the window needs {end}",
            states.len()
        )));
    }
    let mut sum = 0.0;
    for state in &states[start as usize..end as usize] {
        sum += f(&state.position);
    }
    Ok(sum / (end - start) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad() -> PotentialModel {
        PotentialModel::quadratic(1, &[0.0], 1.0).unwrap()
    }

    #[test]
    fn floor_time_examples() {
        assert_eq!(floor_time(1.3, 0.5).unwrap(), 1.0);
        assert_eq!(floor_time(1.0, 0.5).unwrap(), 1.0);
        assert_eq!(floor_time(0.2, 0.5).unwrap(), 0.0);
        assert_eq!(floor_time(0.3, 0.1).unwrap(), 0.30000000000000004);
        assert!(matches!(floor_time(1.0, 0.0), Err(Error::InvalidParameter(_))));
        assert!(floor_time(1.0, -0.5).is_err());
        assert!(floor_time(-1.0, 0.5).is_err());
    }

    #[test]
    fn grid_steps_rounds_up_off_grid() {
        assert_eq!(grid_steps(1.0, 0.5), 2);
        assert_eq!(grid_steps(1.1, 0.5), 3);
        assert_eq!(grid_steps(0.3, 0.1), 3);
        assert_eq!(grid_steps(0.0, 0.1), 0);
    }

    #[test]
    fn euler_step_examples() {
        let m = quad();
        let s = PathState::new(vec![1.0], 0.5);
        let next = euler_step(&m, &s, 1.0, &[0.0]).unwrap();
        assert_eq!(next.position, vec![0.5]);
        assert_eq!(next.step_index, 1);
        let noisy = euler_step(&m, &s, 1.0, &[1.0]).unwrap();
        assert_relative_eq!(noisy.position[0], 1.2071067811865475, max_relative = 1e-15);

        let p = PotentialModel::power(2, 0.75).unwrap();
        let at_min = PathState::new(p.minimizer().to_vec(), 0.1);
        assert_eq!(euler_step(&p, &at_min, 1.0, &[0.0, 0.0]).unwrap().position, vec![0.0, 0.0]);
    }

    #[test]
    fn euler_step_errors() {
        let m = quad();
        let s = PathState::new(vec![1.0], 0.5);
        assert!(matches!(euler_step(&m, &s, 1.0, &[0.0, 1.0]), Err(Error::InvalidParameter(_))));
        let huge = PathState {
            position: vec![1e300],
            step_index: 41,
            gamma: 0.5,
        };
        let steep = PotentialModel::quadratic(1, &[0.0], 1e10).unwrap();
        assert_eq!(
            euler_step(&steep, &huge, 1.0, &[0.0]),
            Err(Error::NumericalOverflow { step: 42, level: None })
        );
    }

    #[test]
    fn noise_is_deterministic_and_stream_separated() {
        let mut a = NoiseStream::new(7, 3);
        let mut b = NoiseStream::new(7, 3);
        let mut c = NoiseStream::new(7, 4);
        let va: Vec<f64> = (0..50).flat_map(|_| a.next_vector(3)).collect();
        let vb: Vec<f64> = (0..50).flat_map(|_| b.next_vector(3)).collect();
        let vc: Vec<f64> = (0..50).flat_map(|_| c.next_vector(3)).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
        assert_eq!(a.cursor(), 50);
    }

    #[test]
    fn noise_moments_over_a_million_draws() {
        let n = 1_000_000usize;
        let d = 2;
        let mut noise = NoiseStream::new(2024, 0);
        let mut z = vec![0.0; d];
        let mut sum = vec![0.0; d];
        let mut sum2 = vec![0.0; d];
        for _ in 0..n {
            noise.fill(&mut z);
            for i in 0..d {
                sum[i] += z[i];
                sum2[i] += z[i] * z[i];
            }
        }
        let nf = n as f64;
        for i in 0..d {
            let mean = sum[i] / nf;
            let var = sum2[i] / nf - mean * mean;
            assert!(mean.abs() <= 4.0 / nf.sqrt(), "mean {mean}");
            assert!((var - 1.0).abs() <= 5.0 / nf.sqrt(), "var {var}");
        }
    }

    #[test]
    fn simulate_path_basics() {
        let m = quad();
        let mut noise = NoiseStream::new(1, 0);
        let states = simulate_path(&m, &[0.3], 0.1, 1.0, 0, &mut noise).unwrap();
        assert_eq!(states, vec![PathState::new(vec![0.3], 0.1)]);
        assert_eq!(noise.cursor(), 0);

        let mut n1 = NoiseStream::new(9, 1);
        let mut n2 = NoiseStream::new(9, 1);
        let a = simulate_path(&m, &[0.3], 0.1, 1.0, 100, &mut n1).unwrap();
        let b = simulate_path(&m, &[0.3], 0.1, 1.0, 100, &mut n2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 101);
        assert_eq!(n1.cursor(), 100);
        for (k, s) in a.iter().enumerate() {
            assert_eq!(s.step_index, k as u64);
        }
    }

    #[test]
    fn long_path_matches_invariant_variance() {
        let m = quad();
        let mut noise = NoiseStream::new(11, 0);
        let states = simulate_path(&m, &[0.0], 0.01, 1.0, 100_000, &mut noise).unwrap();
        let tail = &states[50_000..];
        let mean = tail.iter().map(|s| s.position[0]).sum::<f64>() / tail.len() as f64;
        let var = tail.iter().map(|s| (s.position[0] - mean).powi(2)).sum::<f64>() / tail.len() as f64;
        assert!((var - 0.5).abs() <= 0.05, "variance {var}");
    }

    #[test]
    fn parametric_profile_rejects_large_steps() {
        let p = PotentialModel::power(1, 0.75).unwrap();
        let mut noise = NoiseStream::new(1, 0);
        assert!(matches!(
            simulate_path(&p, &[0.0], 0.2, 1.0, 10, &mut noise),
            Err(Error::InvalidParameter(_))
        ));
        simulate_path(&p, &[0.0], 1.0 / 9.0, 1.0, 10, &mut noise).unwrap();
    }

    #[test]
    fn coupled_paths_coincide_without_drift() {
        let zero = PotentialModel::zero(2);
        let mut noise = NoiseStream::new(5, 0);
        let states = simulate_coupled(&zero, &[0.5, -0.5], 0.1, 1.3, 200, &mut noise).unwrap();
        assert_eq!(states.len(), 201);
        for s in &states {
            assert_eq!(s.fine.step_index, 2 * s.coarse.step_index);
            for i in 0..2 {
                assert_relative_eq!(s.fine.position[i], s.coarse.position[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coarse_increment_is_sum_of_fine_increments() {
        let m = quad();
        let sigma = 1.7;
        let gamma = 0.2;
        let mut noise = NoiseStream::new(3, 9);
        let (_, audit) = simulate_coupled_audited(&m, &[1.0], gamma, sigma, 300, &mut noise).unwrap();
        assert_eq!(noise.cursor(), 600);
        for inc in &audit {
            assert_eq!(inc.coarse[0], inc.fine[0][0] + inc.fine[1][0]);
            let expected = (inc.fine_normals[0][0] + inc.fine_normals[1][0]) / 2f64.sqrt();
            assert_eq!(inc.coarse_normal[0], expected);
            assert_relative_eq!(
                sigma * gamma.sqrt() * inc.coarse_normal[0],
                inc.coarse[0],
                epsilon = 1e-14,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn coupling_gap_shrinks_with_step() {
        let p = PotentialModel::power(1, 0.75).unwrap();
        let gap = |gamma: f64| {
            let n = grid_steps(200.0, gamma);
            let mut total = 0.0;
            for r in 0..500 {
                let mut noise = NoiseStream::new(77, r);
                let mut pair = CoupledPath::new(&p, &[0.0], gamma, 1.0).unwrap();
                for _ in 0..n {
                    pair.advance(&mut noise).unwrap();
                }
                total += (pair.fine().position[0] - pair.coarse().position[0]).powi(2);
            }
            total / 500.0
        };
        let g1 = gap(0.05);
        let g2 = gap(0.1);
        assert!(g1.is_finite() && g1 < g2, "{g1} vs {g2}");
    }

    #[test]
    fn occupation_average_examples() {
        let m = quad();
        let mut noise = NoiseStream::new(1, 1);
        let states = simulate_path(&m, &[0.0], 0.1, 1.0, 50, &mut noise).unwrap();
        assert_eq!(occupation_average(|_| 3.0, &states, 0.1, 0.0, 5.0).unwrap(), 3.0);

        let two = vec![
            PathState {
                position: vec![1.0],
                step_index: 0,
                gamma: 0.25,
            },
            PathState {
                position: vec![3.0],
                step_index: 1,
                gamma: 0.25,
            },
        ];
        assert_eq!(occupation_average(|x| x[0], &two, 0.25, 0.0, 0.5).unwrap(), 2.0);
        // Window start rounds up to the second state.
        assert_eq!(occupation_average(|x| x[0], &two, 0.25, 0.1, 0.5).unwrap(), 3.0);
    }

    #[test]
    fn occupation_average_errors() {
        let states = vec![PathState::new(vec![0.0], 0.5)];
        assert!(occupation_average(|_| 1.0, &states, 0.5, 1.0, 1.0).is_err());
        assert!(occupation_average(|_| 1.0, &states, 0.5, 0.2, 0.4).is_err());
        assert!(occupation_average(|_| 1.0, &states, 0.5, 0.0, 5.0).is_err());
    }

    #[test]
    fn ergodic_second_moment() {
        let m = quad();
        let mut noise = NoiseStream::new(2, 0);
        let states = simulate_path(&m, &[0.0], 0.01, 1.0, 200_000, &mut noise).unwrap();
        let avg = occupation_average(|x| x[0] * x[0], &states, 0.01, 0.0, 2000.0).unwrap();
        assert!((avg - 0.5).abs() <= 0.05, "{avg}");
    }
}
