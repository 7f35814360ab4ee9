use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ClassicalError;
use crate::ode::{integrate_sampled, OdeOptions, OdeStats};
use crate::perturbation::Perturbation;

pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// The standard symplectic form `[[0, I], [−I, 0]]` on `R^{2n}`.
pub fn symplectic_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Largest entry of `AᵀJ + JA`.
pub fn hamiltonian_defect(a: &DMatrix<f64>, j: &DMatrix<f64>) -> f64 {
    (a.transpose() * j + j * a).amax()
}

/// `z' = A(t) z + ℓ(t)` on `R^{2n}`.
#[derive(Clone)]
pub struct AffineSystemSpec {
    n: usize,
    a: MatrixFn,
    ell: Option<VectorFn>,
    label: String,
}

impl std::fmt::Debug for AffineSystemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AffineSystemSpec")
            .field("n", &self.n)
            .field("forced", &self.ell.is_some())
            .field("label", &self.label)
            .finish()
    }
}

impl AffineSystemSpec {
    pub fn new(n: usize, a: MatrixFn, ell: Option<VectorFn>, label: &str) -> Result<Self, ClassicalError> {
        if n == 0 {
            return Err(ClassicalError::InvalidArguments("dimension must be positive".into()));
        }
        Ok(AffineSystemSpec { n, a, ell, label: label.to_string() })
    }

    /// `A ≡ J`: the unperturbed oscillator in each of the `n` planes.
    pub fn rotation(n: usize) -> Self {
        let j = symplectic_j(n);
        AffineSystemSpec { n, a: Arc::new(move |_| j.clone()), ell: None, label: format!("rotation(n={n})") }
    }

    /// `ξ' = x`, `x' = −(1 + φ(t)) ξ + a sin t`.
    pub fn oscillator(p: &Perturbation, a: f64) -> Self {
        let phi = p.as_fn();
        let matrix: MatrixFn = Arc::new(move |t| DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -(1.0 + phi(t)), 0.0]));
        let ell: Option<VectorFn> =
            if a != 0.0 { Some(Arc::new(move |t: f64| DVector::from_row_slice(&[0.0, a * t.sin()]))) } else { None };
        AffineSystemSpec { n: 1, a: matrix, ell, label: format!("oscillator[{}](a={a})", p.label()) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        (self.a)(t)
    }

    pub fn forcing(&self, t: f64) -> DVector<f64> {
        match &self.ell {
            Some(l) => l(t),
            None => DVector::zeros(2 * self.n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub tol: f64,
    pub sample_step: f64,
    /// Reject non-Hamiltonian `A(t)` at every right-hand-side evaluation.
    pub check_hamiltonian: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-10, sample_step: 0.1, check_hamiltonian: true }
    }
}

/// Sampled `W(t)`, `U(t)` and `z*(t)`.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub n: usize,
    pub times: Vec<f64>,
    pub w: Vec<DMatrix<f64>>,
    pub u: Vec<DMatrix<f64>>,
    pub zstar: Vec<DVector<f64>>,
    pub stats: OdeStats,
    pub tol: f64,
}

/// Operator 2-norm for 2×2 matrices (closed-form singular values), the sum
/// of absolute entries otherwise.
pub fn matrix_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 2 && m.ncols() == 2 {
        let s: f64 = m.iter().map(|x| x * x).sum();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        ((s + disc) / 2.0).sqrt()
    } else {
        m.iter().map(|x| x.abs()).sum()
    }
}

impl FlowResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn w_norm(&self, i: usize) -> f64 {
        matrix_norm(&self.w[i])
    }

    pub fn zstar_norm(&self, i: usize) -> f64 {
        self.zstar[i].norm()
    }

    /// Largest entry of `WᵀJW − J`.
    pub fn symplectic_defect(&self, i: usize) -> f64 {
        let j = symplectic_j(self.n);
        let w = &self.w[i];
        (w.transpose() * &j * w - j).amax()
    }

    /// Largest entry of `W(t) − U(t) exp((t − t0)J) Jᵀ`.
    pub fn wtex_residual(&self, i: usize) -> f64 {
        let j = symplectic_j(self.n);
        let tau = self.times[i] - self.t0();
        let rot = DMatrix::identity(2 * self.n, 2 * self.n) * tau.cos() + &j * tau.sin();
        (&self.w[i] - &self.u[i] * rot * j.transpose()).amax()
    }

    pub fn max_symplectic_defect(&self) -> f64 {
        (0..self.len()).map(|i| self.symplectic_defect(i)).fold(0.0, f64::max)
    }

    pub fn max_wtex_residual(&self) -> f64 {
        (0..self.len()).map(|i| self.wtex_residual(i)).fold(0.0, f64::max)
    }
}

/// Jointly integrates `W' = AW`, `U' = AU − UJ` and `z' = Az + ℓ` from
/// `W(t0) = I`, `U(t0) = J`, `z(t0) = z0`.
pub fn integrate_flow(
    spec: &AffineSystemSpec,
    t0: f64,
    t_end: f64,
    z0: &DVector<f64>,
    opts: &FlowOptions,
) -> Result<FlowResult, ClassicalError> {
    let n = spec.n();
    let d = 2 * n;
    if z0.len() != d {
        return Err(ClassicalError::InvalidArguments(format!("z0 has length {}, expected {d}", z0.len())));
    }
    if !(t_end > t0) || !(opts.tol > 0.0) {
        return Err(ClassicalError::InvalidArguments(format!(
            "need t_end > t0 and tol > 0 (t0 = {t0}, t_end = {t_end}, tol = {})",
            opts.tol
        )));
    }
    let j = symplectic_j(n);
    let dd = d * d;
    // state layout: W (column-major), U (column-major), z
    let mut y0 = Vec::with_capacity(2 * dd + d);
    y0.extend(DMatrix::<f64>::identity(d, d).iter());
    y0.extend(j.iter());
    y0.extend(z0.iter());

    let mut violation: Option<(f64, f64)> = None;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let a = spec.matrix(t);
        if opts.check_hamiltonian {
            let defect = hamiltonian_defect(&a, &j);
            if defect > 1e-12 * a.amax().max(1.0) {
                violation = Some((t, defect));
                return Err(format!("A(t) not Hamiltonian (defect {defect:e})"));
            }
        }
        let w = DMatrix::from_column_slice(d, d, &y[..dd]);
        let u = DMatrix::from_column_slice(d, d, &y[dd..2 * dd]);
        let z = DVector::from_column_slice(&y[2 * dd..]);
        let dw = &a * &w;
        let du = &a * &u - &u * &j;
        let dz = &a * &z + spec.forcing(t);
        dy[..dd].copy_from_slice(dw.as_slice());
        dy[dd..2 * dd].copy_from_slice(du.as_slice());
        dy[2 * dd..].copy_from_slice(dz.as_slice());
        Ok(())
    };

    let mut result = FlowResult {
        n,
        times: Vec::new(),
        w: Vec::new(),
        u: Vec::new(),
        zstar: Vec::new(),
        stats: OdeStats::default(),
        tol: opts.tol,
    };
    let ode_opts = OdeOptions::with_tol(opts.tol);
    let outcome = integrate_sampled(rhs, t0, &y0, t_end, opts.sample_step, &ode_opts, |t, y| {
        result.times.push(t);
        result.w.push(DMatrix::from_column_slice(d, d, &y[..dd]));
        result.u.push(DMatrix::from_column_slice(d, d, &y[dd..2 * dd]));
        result.zstar.push(DVector::from_column_slice(&y[2 * dd..]));
    });
    match outcome {
        Ok(stats) => {
            result.stats = stats;
            Ok(result)
        }
        Err(e) => match violation {
            Some((t, defect)) => Err(ClassicalError::NotHamiltonian { t, defect }),
            None => Err(e.into()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingReport {
    /// `max |⟨X_j, J X_{n+j}⟩ − 1|`
    pub conjugate: f64,
    /// `max |⟨X_j, J X_i⟩|`, `i, j ≤ n`
    pub same_block: f64,
    /// `max |⟨X_j, J X_{n+i}⟩|`, `i ≠ j`
    pub cross_block: f64,
}

impl PairingReport {
    pub fn max_defect(&self) -> f64 {
        self.conjugate.max(self.same_block).max(self.cross_block)
    }
}

/// Symplectic pairings among the columns of `U(t)`, maximised over time.
pub fn check_symplectic_pairings(result: &FlowResult) -> PairingReport {
    let n = result.n;
    let j = symplectic_j(n);
    let mut rep = PairingReport { conjugate: 0.0, same_block: 0.0, cross_block: 0.0 };
    for u in &result.u {
        let g = u.transpose() * &j * u;
        for jj in 0..n {
            rep.conjugate = rep.conjugate.max((g[(jj, n + jj)] - 1.0).abs());
            for i in 0..n {
                rep.same_block = rep.same_block.max(g[(jj, i)].abs());
                if i != jj {
                    rep.cross_block = rep.cross_block.max(g[(jj, n + i)].abs());
                }
            }
        }
    }
    rep
}
