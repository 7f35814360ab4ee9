use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DVector, Matrix2, Vector2};
use serde::Serialize;

use super::ClassicalError;
use crate::growth_rates::GrowthRate;
use crate::perturbation::{phi_from_sample, weighted_sine_integral, HfEvaluator};
use crate::quadrature::{CumulativeIntegral, QuadSpec};

/// Two independent solutions of `ξ'' + (1 + φ_f) ξ = 0` and their
/// derivatives `x = ξ'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisValues {
    pub xi1: f64,
    pub x1: f64,
    pub xi2: f64,
    pub x2: f64,
}

impl BasisValues {
    pub fn wronskian(&self) -> f64 {
        self.xi1 * self.x2 - self.xi2 * self.x1
    }

    /// `[[ξ₂, −ξ₁], [x₂, −x₁]]`
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.xi2, -self.xi1, self.x2, -self.x1)
    }
}

/// Closed-form basis built from `H_f` and
/// `G(t) = ∫_{t0}^t sin(2s) (f'/f) / H_f² ds`:
///
/// ```text
/// ξ₁ = cos t · H          x₁ = (−sin t + r cos³t) · H
/// ξ₂ = sin t / H + cos t · H · G
/// x₂ = (cos t + r cos²t sin t) / H + (r cos³t − sin t) · H · G
/// ```
///
/// with `r = f'/f`. The Wronskian `ξ₁x₂ − ξ₂x₁` equals 1 for every `t0`.
#[derive(Debug)]
pub struct AnalyticBasis {
    rate: GrowthRate,
    hf: Arc<HfEvaluator>,
    g: CumulativeIntegral,
}

impl AnalyticBasis {
    /// Gauss–Kronrod at `quad_tol` for `G`, and Simpson a hundred times
    /// tighter (floored at `1e-14`) for `ln H_f`, so that the inner noise
    /// stays below what the outer rule is asked to resolve.
    pub fn new(rate: &GrowthRate, quad_tol: f64) -> Self {
        let inner = (quad_tol * 1e-2).max(1e-14);
        Self::with_specs(rate, QuadSpec::simpson(inner), QuadSpec::kronrod(quad_tol))
    }

    pub fn with_specs(rate: &GrowthRate, inner: QuadSpec, outer: QuadSpec) -> Self {
        let hf = Arc::new(HfEvaluator::new(rate, inner));
        let g = weighted_sine_integral(&hf, outer);
        AnalyticBasis { rate: rate.clone(), hf, g }
    }

    pub fn rate(&self) -> &GrowthRate {
        &self.rate
    }

    pub fn t0(&self) -> f64 {
        self.rate.t0()
    }

    pub fn hf(&self) -> &Arc<HfEvaluator> {
        &self.hf
    }

    pub fn outer_spec(&self) -> QuadSpec {
        self.g.spec()
    }

    /// `G(t)`
    pub fn g(&self, t: f64) -> Result<f64, ClassicalError> {
        Ok(self.g.value_at(t)?)
    }

    pub fn eval(&self, t: f64) -> Result<BasisValues, ClassicalError> {
        let h = self.hf.eval(t)?;
        let g = self.g(t)?;
        let r = self.rate.log_derivative(t);
        let (s, c) = t.sin_cos();
        let c2 = c * c;
        Ok(BasisValues {
            xi1: c * h,
            x1: (-s + r * c2 * c) * h,
            xi2: s / h + c * h * g,
            x2: (c + r * c2 * s) / h + (r * c2 * c - s) * h * g,
        })
    }

    /// Central-difference residuals of `ξ'' + (1 + φ_f) ξ` for both
    /// solutions, and of `ξ' − x`.
    pub fn ode_residual(&self, t: f64, h: f64) -> Result<[f64; 4], ClassicalError> {
        let (m, z, p) = (self.eval(t - h)?, self.eval(t)?, self.eval(t + h)?);
        let phi = phi_from_sample(&self.rate.sample(t), t);
        let second = |a: f64, b: f64, c: f64| (c - 2.0 * b + a) / (h * h);
        let first = |a: f64, c: f64| (c - a) / (2.0 * h);
        Ok([
            second(m.xi1, z.xi1, p.xi1) + (1.0 + phi) * z.xi1,
            second(m.xi2, z.xi2, p.xi2) + (1.0 + phi) * z.xi2,
            first(m.xi1, p.xi1) - z.x1,
            first(m.xi2, p.xi2) - z.x2,
        ])
    }
}

pub fn analytic_basis_eval(basis: &AnalyticBasis, t: f64) -> Result<(f64, f64, f64, f64), ClassicalError> {
    let v = basis.eval(t)?;
    Ok((v.xi1, v.x1, v.xi2, v.x2))
}

/// True when `t0 = 2kπ + π/2` for an integer `k ≥ 0`, to `1e-9`.
pub fn is_aligned_start(t0: f64) -> bool {
    let k = ((t0 - FRAC_PI_2) / (2.0 * PI)).round();
    k >= 0.0 && (t0 - (2.0 * PI * k + FRAC_PI_2)).abs() <= 1e-9
}

/// `[[ξ₂, −ξ₁], [x₂, −x₁]](t)`, which is the fundamental matrix with
/// `W(t0) = I` only for starts `t0 = 2kπ + π/2`; other starts are refused.
pub fn fundamental_from_analytic(basis: &AnalyticBasis, t: f64) -> Result<Matrix2<f64>, ClassicalError> {
    if !is_aligned_start(basis.t0()) {
        return Err(ClassicalError::Misaligned { t0: basis.t0() });
    }
    Ok(basis.eval(t)?.matrix())
}

/// Fundamental matrix for any start: `B(t) B(t0)⁻¹`.
pub fn fundamental_normalized(basis: &AnalyticBasis, t: f64) -> Result<Matrix2<f64>, ClassicalError> {
    let b = basis.eval(t)?.matrix();
    let b0 = basis.eval(basis.t0())?.matrix();
    // det B = 1, so the inverse is the adjugate
    let inv = Matrix2::new(b0[(1, 1)], -b0[(0, 1)], -b0[(1, 0)], b0[(0, 0)]);
    Ok(b * inv)
}

/// The solution of the forced system from `z(t0) = 0` by variation of
/// constants:
///
/// `z(t) = a B(t) (∫ sin(s) ξ₁(s) ds, ∫ sin(s) ξ₂(s) ds)`,
///
/// using `B(s)⁻¹ (0, sin s) = sin s (ξ₁, ξ₂)` (unit Wronskian). The
/// expression does not depend on the alignment of `t0`.
#[derive(Debug)]
pub struct ForcedDuhamel {
    basis: Arc<AnalyticBasis>,
    amplitude: f64,
    int_xi1: CumulativeIntegral,
    int_xi2: CumulativeIntegral,
}

impl ForcedDuhamel {
    pub fn new(basis: Arc<AnalyticBasis>, amplitude: f64, spec: QuadSpec) -> Self {
        let b1 = basis.clone();
        let b2 = basis.clone();
        let t0 = basis.t0();
        let int_xi1 = CumulativeIntegral::new(
            t0,
            FRAC_PI_2,
            spec,
            Arc::new(move |s: f64| match b1.hf().eval(s) {
                Ok(h) => s.sin() * s.cos() * h,
                Err(_) => f64::NAN,
            }),
        );
        let int_xi2 = CumulativeIntegral::new(
            t0,
            FRAC_PI_2,
            spec,
            Arc::new(move |s: f64| match b2.eval(s) {
                Ok(v) => s.sin() * v.xi2,
                Err(_) => f64::NAN,
            }),
        );
        ForcedDuhamel { basis, amplitude, int_xi1, int_xi2 }
    }

    pub fn basis(&self) -> &Arc<AnalyticBasis> {
        &self.basis
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn eval(&self, t: f64) -> Result<Vector2<f64>, ClassicalError> {
        if self.amplitude == 0.0 {
            return Ok(Vector2::zeros());
        }
        let b = self.basis.eval(t)?.matrix();
        let v = Vector2::new(self.int_xi1.value_at(t)?, self.int_xi2.value_at(t)?);
        Ok(self.amplitude * b * v)
    }
}

/// One-off evaluation of the forced solution at `t`.
pub fn forced_particular_solution(
    basis: &Arc<AnalyticBasis>,
    a: f64,
    t: f64,
    quad_tol: f64,
) -> Result<DVector<f64>, ClassicalError> {
    let z = ForcedDuhamel::new(basis.clone(), a, QuadSpec::kronrod(quad_tol)).eval(t)?;
    Ok(DVector::from_column_slice(z.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth_rates::make_catalog_rate;

    fn basis(name: &str, params: &[f64]) -> AnalyticBasis {
        AnalyticBasis::new(&make_catalog_rate(name, params).unwrap(), 1e-10)
    }

    #[test]
    fn constant_rate_is_unperturbed() {
        let b = basis("constant", &[]);
        for t in [2.0f64, 7.3, 30.0] {
            let v = b.eval(t).unwrap();
            assert!((v.xi1 - t.cos()).abs() < 1e-14);
            assert!((v.xi2 - t.sin()).abs() < 1e-14);
            assert!((v.x1 + t.sin()).abs() < 1e-14);
            assert!((v.x2 - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn values_at_aligned_start() {
        let b = basis("power_log", &[]);
        let v = b.eval(b.t0()).unwrap();
        assert!(v.xi1.abs() < 1e-15);
        assert_eq!(v.xi2, 1.0);
        let w = fundamental_from_analytic(&b, b.t0()).unwrap();
        assert!((w - Matrix2::identity()).amax() < 1e-15);
    }

    #[test]
    fn quarter_turn_for_constant_rate() {
        let b = basis("constant", &[]);
        let w = fundamental_from_analytic(&b, b.t0() + FRAC_PI_2).unwrap();
        assert!((w - Matrix2::new(0.0, 1.0, -1.0, 0.0)).amax() < 1e-15);
    }

    #[test]
    fn misaligned_start_is_refused() {
        let b = basis("oscillatory", &[]);
        assert!(matches!(fundamental_from_analytic(&b, 5.0), Err(ClassicalError::Misaligned { .. })));
        let w = fundamental_normalized(&b, b.t0()).unwrap();
        assert!((w - Matrix2::identity()).amax() < 1e-14);
    }

    #[test]
    fn alignment_predicate() {
        assert!(is_aligned_start(FRAC_PI_2));
        assert!(is_aligned_start(4.0 * PI + FRAC_PI_2));
        assert!(!is_aligned_start(PI));
        assert!(!is_aligned_start(-1.5 * PI));
    }

    #[test]
    fn wronskian_is_one() {
        for (name, params) in [("power_log", vec![]), ("oscillatory", vec![]), ("exp_power", vec![0.5])] {
            let b = basis(name, &params);
            for k in 0..40 {
                let t = b.t0() + 2.5 * k as f64;
                let w = b.eval(t).unwrap().wronskian();
                assert!((w - 1.0).abs() < 1e-8, "{name} t = {t}: {w}");
            }
        }
    }

    #[test]
    fn basis_solves_the_oscillator() {
        let b = basis("oscillatory", &[]);
        for t in [5.0, 20.0, 61.0] {
            let r1 = b.ode_residual(t, 1e-2).unwrap();
            let r2 = b.ode_residual(t, 5e-3).unwrap();
            for i in 0..4 {
                // O(h²): refining by 2 reduces the residual about fourfold
                assert!(r2[i].abs() < 0.4 * r1[i].abs() || r2[i].abs() < 1e-6, "t = {t}, i = {i}: {r1:?} {r2:?}");
            }
        }
    }

    #[test]
    fn forced_constant_rate_closed_form() {
        let b = Arc::new(basis("constant", &[]));
        let t0 = b.t0();
        let forced = ForcedDuhamel::new(b, 1.0, QuadSpec::kronrod(1e-10));
        for k in 1..20 {
            let t = t0 + 3.1 * k as f64;
            let z = forced.eval(t).unwrap();
            let xi = -0.5 * (t - t0) * t.cos();
            let x = -0.5 * t.cos() + 0.5 * (t - t0) * t.sin();
            assert!((z[0] - xi).abs() < 1e-9 && (z[1] - x).abs() < 1e-9, "t = {t}: {z:?}");
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let b = Arc::new(basis("power_log", &[]));
        let z = forced_particular_solution(&b, 0.0, 30.0, 1e-10).unwrap();
        assert_eq!(z.norm(), 0.0);
    }
}
