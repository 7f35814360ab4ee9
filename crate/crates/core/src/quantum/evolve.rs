use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::operators::{matrix_qho, matrix_x, matrix_x2, SymBand};
use super::state::{sobolev_norm_of, tail_mass, HermiteState};
use super::QuantumError;
use crate::perturbation::Perturbation;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `H(t) = 𝒯 + (φ(t)/2) X² + a sin(t) X`, with `𝒯 = ½(D² + X²)`, and the
/// step `dt` used to advance `i⁻¹ ∂ₜu = H(t) u`.
#[derive(Clone)]
pub struct QuantumHamiltonianSpec {
    phi: ScalarFn,
    amplitude: f64,
    dt: f64,
    label: String,
}

impl fmt::Debug for QuantumHamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumHamiltonianSpec")
            .field("label", &self.label)
            .field("amplitude", &self.amplitude)
            .field("dt", &self.dt)
            .finish()
    }
}

pub const DEFAULT_DT: f64 = 1e-3;

impl QuantumHamiltonianSpec {
    pub fn new(label: &str, phi: ScalarFn, amplitude: f64, dt: f64) -> Result<Self, QuantumError> {
        if !(dt > 0.0 && dt.is_finite()) || !amplitude.is_finite() {
            return Err(QuantumError::InvalidArguments(format!("need dt > 0 and finite a, got dt = {dt}, a = {amplitude}")));
        }
        Ok(QuantumHamiltonianSpec { phi, amplitude, dt, label: label.to_string() })
    }

    /// The plain oscillator `φ ≡ 0`, optionally forced.
    pub fn unperturbed(amplitude: f64, dt: f64) -> Result<Self, QuantumError> {
        Self::new("qho", Arc::new(|_| 0.0), amplitude, dt)
    }

    pub fn from_perturbation(p: &Perturbation, amplitude: f64, dt: f64) -> Result<Self, QuantumError> {
        Self::new(&p.label(), p.as_fn(), amplitude, dt)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self, QuantumError> {
        Self::new(&self.label, self.phi.clone(), self.amplitude, dt)
    }

    /// `H(t)` on modes `0..=n_max`, real symmetric.
    pub fn matrix(&self, t: f64, n_max: usize) -> SymBand {
        let h = matrix_qho(n_max).add_scaled(self.phi(t) / 2.0, &matrix_x2(n_max));
        h.add_scaled(self.amplitude * t.sin(), &matrix_x(n_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveOptions {
    /// Spacing of the recorded samples; a multiple of `dt`.
    pub sample_step: f64,
    /// Tail mass `Σ_{n>0.9N}|c_n|²` above which `N` is doubled.
    pub tail_threshold: f64,
    /// Largest truncation the doubling may reach.
    pub max_truncation: usize,
    /// Allowed `|‖u(t)‖² − ‖u(t0)‖²|` per unit time.
    pub drift_budget: f64,
    /// Orders `s` at which `‖u‖_s` is recorded.
    pub sobolev_orders: Vec<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            sample_step: 0.1,
            tail_threshold: 1e-10,
            max_truncation: 1 << 16,
            drift_budget: 1e-8,
            sobolev_orders: vec![1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumSample {
    pub t: f64,
    pub l2_norm: f64,
    pub tail_mass: f64,
    pub truncation: usize,
    /// `‖u(t)‖_s` for each of [`EvolveOptions::sobolev_orders`].
    pub sobolev: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationGrowth {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct QuantumTrajectory {
    pub sobolev_orders: Vec<f64>,
    pub samples: Vec<QuantumSample>,
    pub final_state: HermiteState,
    pub steps: usize,
    pub growth: Vec<TruncationGrowth>,
    /// Largest `|‖u(t)‖² − ‖u(t0)‖²| / (t − t0)` over the samples.
    pub max_drift_rate: f64,
}

impl QuantumTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// The recorded `‖u‖_s` series for order `s`, if it was requested.
    pub fn sobolev_series(&self, s: f64) -> Option<Vec<f64>> {
        let k = self.sobolev_orders.iter().position(|&o| o == s)?;
        Some(self.samples.iter().map(|x| x.sobolev[k]).collect())
    }
}

/// Evolves with the midpoint Cayley step, recording samples; see
/// [`evolve_with`].
pub fn evolve(
    state: &HermiteState,
    spec: &QuantumHamiltonianSpec,
    t_end: f64,
    opts: &EvolveOptions,
) -> Result<QuantumTrajectory, QuantumError> {
    evolve_with(state, spec, t_end, opts, |_| {})
}

/// Advances `state` from its time to `t_end`.
///
/// The oscillator part is removed exactly: with `θ = t − t_start` the
/// evolution runs on `b = e^{−i𝒯θ} c`, which obeys `i⁻¹ ∂ₜb = V(t) b` with
/// `V_{mn}(t) = e^{−i(m−n)θ} ⟨m|(φ/2)X² + a sin(t) X|n⟩`. Each step applies
/// the Cayley map `(I − i dt V/2)⁻¹ (I + i dt V/2)` with `V` at the half
/// step, which is unitary and second order; the pentadiagonal system is
/// solved by banded elimination. Mode moduli, and therefore every recorded
/// norm, are the same in both frames; the returned final state is mapped
/// back to `c`.
///
/// `on_sample` sees every sample as it is recorded.
pub fn evolve_with(
    state: &HermiteState,
    spec: &QuantumHamiltonianSpec,
    t_end: f64,
    opts: &EvolveOptions,
    mut on_sample: impl FnMut(&QuantumSample),
) -> Result<QuantumTrajectory, QuantumError> {
    let t_start = state.time();
    let dt = spec.dt();
    if !(t_end > t_start) {
        return Err(QuantumError::InvalidArguments(format!("need t_end > t0, got [{t_start}, {t_end}]")));
    }
    let per_sample = (opts.sample_step / dt).round() as usize;
    if per_sample == 0 || (per_sample as f64 * dt - opts.sample_step).abs() > 1e-9 * opts.sample_step {
        return Err(QuantumError::InvalidArguments(format!(
            "sample step {} is not a multiple of dt = {dt}",
            opts.sample_step
        )));
    }
    let initial_tail = state.tail_mass();
    if initial_tail > opts.tail_threshold {
        return Err(QuantumError::UnresolvedInitialState { tail: initial_tail, threshold: opts.tail_threshold });
    }

    let span = t_end - t_start;
    let full_steps = (span / dt * (1.0 - 1e-12)).floor() as usize;
    let last_partial = span - full_steps as f64 * dt > 1e-12 * span;
    let total_steps = full_steps + usize::from(last_partial);

    let mut b = state.coeffs().to_vec();
    let mut stepper = CayleyStepper::new(b.len() - 1);
    let mut window = ModeWindow::covering(&mut b);
    let norm0 = state.l2_norm_sq();
    let mut samples = Vec::new();
    let mut growth = Vec::new();
    let mut max_drift_rate = 0.0f64;

    let mut record = |t: f64, b: &[Complex64], samples: &mut Vec<QuantumSample>| {
        let l2 = b.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let sample = QuantumSample {
            t,
            l2_norm: l2.sqrt(),
            tail_mass: tail_mass(b),
            truncation: b.len() - 1,
            sobolev: opts.sobolev_orders.iter().map(|&s| sobolev_norm_of(b, s)).collect(),
        };
        on_sample(&sample);
        samples.push(sample);
        l2
    };
    record(t_start, &b, &mut samples);

    for k in 0..total_steps {
        let t_k = t_start + k as f64 * dt;
        let t_next = if k + 1 == total_steps { t_end } else { t_start + (k + 1) as f64 * dt };
        stepper.step(spec, &mut b[window.lo..=window.hi], window.lo, t_k, t_next, t_start);
        window.widen(&b);

        let at_sample = (k + 1) % per_sample == 0 || k + 1 == total_steps;
        if !at_sample {
            continue;
        }
        let l2 = record(t_next, &b, &mut samples);
        let elapsed = t_next - t_start;
        let drift = (l2 - norm0).abs();
        let allowed = opts.drift_budget * elapsed.max(dt);
        if drift > allowed || !l2.is_finite() {
            return Err(QuantumError::NormDrift { t: t_next, drift, allowed });
        }
        max_drift_rate = max_drift_rate.max(drift / elapsed);
        if tail_mass(&b) > opts.tail_threshold {
            let from = b.len() - 1;
            let to = 2 * from;
            if to > opts.max_truncation {
                return Err(QuantumError::TruncationCeiling { t: t_next, truncation: from, max: opts.max_truncation });
            }
            b.resize(to + 1, Complex64::new(0.0, 0.0));
            stepper = CayleyStepper::new(to);
            growth.push(TruncationGrowth { t: t_next, from, to });
        }
        window = ModeWindow::covering(&mut b);
    }

    let theta = t_end - t_start;
    let coeffs = b
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, (n as f64 + 0.5) * theta))
        .collect();
    Ok(QuantumTrajectory {
        sobolev_orders: opts.sobolev_orders.clone(),
        samples,
        final_state: HermiteState::from_coeffs(coeffs, t_end)?,
        steps: total_steps,
        growth,
        max_drift_rate,
    })
}

/// `|c_n|²` below which a mode outside the active window is treated as
/// exactly zero. Far below anything a norm can resolve, and well above the
/// subnormal range, whose arithmetic is slow.
const NEGLIGIBLE_MASS: f64 = 1e-200;

/// Margin kept around the modes that carry non-negligible mass.
const WINDOW_MARGIN: usize = 8;

/// Contiguous range of modes `lo..=hi` the step acts on. Displaced states
/// occupy a band of width `O(√n̄)` around `n̄`, far narrower than the
/// truncation the tail criterion asks for.
#[derive(Debug, Clone, Copy)]
struct ModeWindow {
    lo: usize,
    hi: usize,
}

impl ModeWindow {
    /// Smallest window holding every mode above [`NEGLIGIBLE_MASS`], plus a
    /// margin; the modes outside are zeroed.
    fn covering(b: &mut [Complex64]) -> Self {
        let n_max = b.len() - 1;
        let live = |c: &Complex64| c.norm_sqr() > NEGLIGIBLE_MASS;
        let first = b.iter().position(live).unwrap_or(0);
        let last = b.iter().rposition(live).unwrap_or(n_max);
        let lo = first.saturating_sub(WINDOW_MARGIN);
        let hi = (last + WINDOW_MARGIN).min(n_max);
        b[..lo].fill(Complex64::default());
        b[hi + 1..].fill(Complex64::default());
        ModeWindow { lo, hi }
    }

    /// Grows the window where mass has reached its edges.
    fn widen(&mut self, b: &[Complex64]) {
        let n_max = b.len() - 1;
        let live = |c: &Complex64| c.norm_sqr() > NEGLIGIBLE_MASS;
        if self.lo > 0 && b[self.lo..(self.lo + WINDOW_MARGIN / 2).min(self.hi + 1)].iter().any(live) {
            self.lo = self.lo.saturating_sub(WINDOW_MARGIN);
        }
        if self.hi < n_max && b[self.hi.saturating_sub(WINDOW_MARGIN / 2 - 1).max(self.lo)..=self.hi].iter().any(live) {
            self.hi = (self.hi + WINDOW_MARGIN).min(n_max);
        }
    }
}

/// Work arrays for the banded Cayley step at a fixed truncation.
struct CayleyStepper {
    /// `⟨n+1|X|n⟩`
    x1: Vec<f64>,
    /// `⟨n+2|X²|n⟩`
    x2_off: Vec<f64>,
    /// `⟨n|X²|n⟩`
    x2_diag: Vec<f64>,
    /// Eliminated rows, normalised to a unit pivot: first and second
    /// super-diagonal and right-hand side.
    up1: Vec<Complex64>,
    up2: Vec<Complex64>,
    y: Vec<Complex64>,
}

impl CayleyStepper {
    fn new(n_max: usize) -> Self {
        let x = matrix_x(n_max);
        let x2 = matrix_x2(n_max);
        let zeros = vec![Complex64::default(); n_max + 1];
        CayleyStepper {
            x1: x.band(1).to_vec(),
            x2_off: x2.band(2).to_vec(),
            x2_diag: x2.band(0).to_vec(),
            up1: zeros.clone(),
            up2: zeros.clone(),
            y: zeros,
        }
    }

    /// Advances the modes `offset..offset + b.len()`, with every mode outside
    /// held at zero.
    ///
    /// With `g = i h/2` the step solves `(I − gV) b' = (I + gV) b`. Each row
    /// is assembled, its right-hand side formed from the old `b`, and the two
    /// sub-diagonal entries eliminated against the previous two rows in a
    /// single forward pass; back substitution then overwrites `b`. No
    /// pivoting is needed: the matrix is the identity plus a skew-Hermitian
    /// part.
    fn step(&mut self, spec: &QuantumHamiltonianSpec, b: &mut [Complex64], offset: usize, t: f64, t_next: f64, t_ref: f64) {
        let h = t_next - t;
        let mid = t + h / 2.0;
        let half_phi = spec.phi(mid) / 2.0;
        let force = spec.amplitude() * mid.sin();
        if half_phi == 0.0 && force == 0.0 {
            return;
        }
        let theta = mid - t_ref;
        let e1 = Complex64::from_polar(1.0, -theta);
        let e2 = e1 * e1;
        // g V; lower entries carry e^{−iθ}, e^{−2iθ}
        let g = Complex64::new(0.0, h / 2.0);
        let low1 = g * e1 * force;
        let hi1 = g * e1.conj() * force;
        let low2 = g * e2 * half_phi;
        let hi2 = g * e2.conj() * half_phi;
        let diag = g * half_phi;
        let dim = b.len();
        let zero = Complex64::default();
        let one = Complex64::new(1.0, 0.0);
        let (up1, up2, y) = (&mut self.up1[..dim], &mut self.up2[..dim], &mut self.y[..dim]);

        for i in 0..dim {
            let n = offset + i;
            let v0 = if i >= 2 { low2 * self.x2_off[n - 2] } else { zero };
            let v1 = if i >= 1 { low1 * self.x1[n - 1] } else { zero };
            let v2 = diag * self.x2_diag[n];
            let v3 = if i + 1 < dim { hi1 * self.x1[n] } else { zero };
            let v4 = if i + 2 < dim { hi2 * self.x2_off[n] } else { zero };

            let mut r = b[i] + v2 * b[i];
            if i >= 2 {
                r += v0 * b[i - 2];
            }
            if i >= 1 {
                r += v1 * b[i - 1];
            }
            if i + 1 < dim {
                r += v3 * b[i + 1];
            }
            if i + 2 < dim {
                r += v4 * b[i + 2];
            }

            let (mut a1, mut a2, mut a3) = (-v1, one - v2, -v3);
            if i >= 2 {
                let a0 = -v0;
                a1 -= a0 * up1[i - 2];
                a2 -= a0 * up2[i - 2];
                r -= a0 * y[i - 2];
            }
            if i >= 1 {
                a2 -= a1 * up1[i - 1];
                a3 -= a1 * up2[i - 1];
                r -= a1 * y[i - 1];
            }
            let inv = a2.inv();
            up1[i] = a3 * inv;
            up2[i] = -v4 * inv;
            y[i] = r * inv;
        }
        for i in (0..dim).rev() {
            let mut x = y[i];
            if i + 1 < dim {
                x -= up1[i] * b[i + 1];
            }
            if i + 2 < dim {
                x -= up2[i] * b[i + 2];
            }
            b[i] = x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::sobolev_norm;
    use nalgebra::{DMatrix, DVector};

    fn opts() -> EvolveOptions {
        EvolveOptions { sample_step: 0.5, ..EvolveOptions::default() }
    }

    #[test]
    fn cayley_step_matches_dense_solve() {
        let spec = QuantumHamiltonianSpec::new("test", Arc::new(|t: f64| 0.8 * t.sin()), 1.3, 0.05).unwrap();
        let (offset, dim) = (3usize, 12usize);
        let b0: Vec<Complex64> = (0..dim).map(|i| Complex64::new((i as f64).cos(), 0.2 * i as f64)).collect();
        let (t, t_next, t_ref) = (0.7, 0.75, 0.1);
        let mut b = b0.clone();
        CayleyStepper::new(offset + dim + 4).step(&spec, &mut b, offset, t, t_next, t_ref);

        let mid = 0.725f64;
        let theta = mid - t_ref;
        let lab = spec.matrix(mid, offset + dim + 4);
        let v = DMatrix::from_fn(dim, dim, |m, n| {
            let (gm, gn) = (m + offset, n + offset);
            let qho = if gm == gn { gm as f64 + 0.5 } else { 0.0 };
            Complex64::from_polar(1.0, -(gm as f64 - gn as f64) * theta) * (lab.get(gm, gn) - qho)
        });
        let g = Complex64::new(0.0, 0.025);
        let id = DMatrix::<Complex64>::identity(dim, dim);
        let rhs = (&id + &v * g) * DVector::from_vec(b0);
        let expected = (&id - &v * g).lu().solve(&rhs).unwrap();
        for i in 0..dim {
            assert!((b[i] - expected[i]).norm() < 1e-14, "{i}");
        }
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let spec = QuantumHamiltonianSpec::new("test", Arc::new(|t: f64| 0.3 * t.cos()), 0.7, 1e-3).unwrap();
        let m = spec.matrix(1.3, 30).to_dense();
        assert_eq!(m.clone(), m.transpose());
        assert!((m[(1, 0)] - 0.7 * 1.3f64.sin() * 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn eigenstates_are_stationary_without_perturbation() {
        let spec = QuantumHamiltonianSpec::unperturbed(0.0, 1e-3).unwrap();
        let e0 = HermiteState::ground(64, 0.0).unwrap();
        let traj = evolve(&e0, &spec, 5.0, &opts()).unwrap();
        let c = traj.final_state.coeffs();
        assert!((c[0].norm() - 1.0).abs() < 1e-14);
        assert!(c[1..].iter().all(|c| c.norm() <= 1e-10));
        // the oscillator phase e^{i t/2}
        assert!((c[0] - Complex64::from_polar(1.0, 2.5)).norm() < 1e-13);
        let series = traj.sobolev_series(2.0).unwrap();
        assert!(series.iter().all(|v| (v - 5f64.sqrt() / 2.0).abs() < 1e-14));
    }

    #[test]
    fn superposition_moduli_are_constant() {
        let spec = QuantumHamiltonianSpec::unperturbed(0.0, 1e-3).unwrap();
        let mut coeffs = vec![Complex64::default(); 33];
        coeffs[0] = Complex64::new(0.5f64.sqrt(), 0.0);
        coeffs[1] = Complex64::new(0.5f64.sqrt(), 0.0);
        let u = HermiteState::from_coeffs(coeffs, 1.0).unwrap();
        let out = evolve(&u, &spec, 4.0, &opts()).unwrap().final_state;
        assert!((out.coeffs()[0].norm() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((out.coeffs()[1].norm() - 0.5f64.sqrt()).abs() < 1e-14);
        // relative phase e^{i·3}
        let rel = out.coeffs()[1] / out.coeffs()[0];
        assert!((rel - Complex64::from_polar(1.0, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn cayley_step_is_unitary_with_perturbation() {
        let spec = QuantumHamiltonianSpec::new("test", Arc::new(|t: f64| 0.5 * (2.0 * t).cos()), 0.4, 1e-2).unwrap();
        let u = HermiteState::ground(128, 0.0).unwrap();
        let traj = evolve(&u, &spec, 20.0, &opts()).unwrap();
        assert!((traj.final_state.l2_norm() - 1.0).abs() < 1e-12);
        assert!(traj.max_drift_rate < 1e-12);
        assert!(sobolev_norm(&traj.final_state, 1.0) > sobolev_norm(&u, 1.0));
    }

    #[test]
    fn constant_perturbation_matches_exact_diagonalisation() {
        // φ ≡ c on modes 0..=N: the truncated H is constant and exp(iHt) is exact
        let c = 0.4;
        let n_max = 40;
        let spec = QuantumHamiltonianSpec::new("const", Arc::new(move |_| c), 0.0, 1e-3).unwrap();
        let u = HermiteState::ground(n_max, 0.0).unwrap();
        let t_end = 3.0;
        let out = evolve(&u, &spec, t_end, &opts()).unwrap().final_state;
        let h = spec.matrix(0.0, n_max).to_dense();
        let eig = h.symmetric_eigen();
        let mut expected = DVector::<Complex64>::zeros(n_max + 1);
        for k in 0..=n_max {
            let v = eig.eigenvectors.column(k);
            let phase = Complex64::from_polar(v[0], eig.eigenvalues[k] * t_end);
            for n in 0..=n_max {
                expected[n] += phase * v[n];
            }
        }
        let err: f64 = (0..=n_max).map(|n| (out.coeffs()[n] - expected[n]).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn truncation_doubles_when_the_tail_fills() {
        let spec = QuantumHamiltonianSpec::unperturbed(1.0, 1e-3).unwrap();
        let u = HermiteState::ground(16, 0.0).unwrap();
        let traj = evolve(&u, &spec, 12.0, &opts()).unwrap();
        assert!(!traj.growth.is_empty());
        assert!(traj.final_state.truncation() > 16);
        assert!(traj.final_state.tail_mass() <= 1e-10 || traj.growth.last().unwrap().t >= 11.5);
        let capped = EvolveOptions { max_truncation: 16, ..opts() };
        assert!(matches!(evolve(&u, &spec, 12.0, &capped), Err(QuantumError::TruncationCeiling { .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = QuantumHamiltonianSpec::unperturbed(0.0, 1e-3).unwrap();
        let u = HermiteState::ground(8, 1.0).unwrap();
        assert!(evolve(&u, &spec, 0.5, &opts()).is_err());
        let odd = EvolveOptions { sample_step: 0.00015, ..opts() };
        assert!(evolve(&u, &spec, 2.0, &odd).is_err());
        let mut coeffs = vec![Complex64::default(); 11];
        coeffs[10] = Complex64::new(1.0, 0.0);
        let top = HermiteState::from_coeffs(coeffs, 1.0).unwrap();
        assert!(matches!(evolve(&top, &spec, 2.0, &opts()), Err(QuantumError::UnresolvedInitialState { .. })));
    }
}
