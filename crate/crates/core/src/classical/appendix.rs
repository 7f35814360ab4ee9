use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::Serialize;

use super::{AnalyticBasis, ClassicalError};
use crate::growth_rates::sample_grid;
use crate::quadrature::{integrate, CumulativeIntegral, QuadSpec};

/// The three integrals controlling the forced solution:
///
/// * `I1 = ∫ sin²(s) / H(s)`
/// * `I2 = ∫ sin(2s) H(s)`
/// * `I3 = ∫ sin(2s) H(s) (G(t) − G(s)) = G(t)·I2 − ∫ sin(2s) H G`
///
/// all over `[t0, t]`, together with the remainders `R1`, `R2` of the
/// decomposition `z/a = (−cos t H I1 + R1, sin t H I1 + R2)`.
#[derive(Debug)]
pub struct AppendixIntegrals {
    basis: Arc<AnalyticBasis>,
    i1: CumulativeIntegral,
    i2: CumulativeIntegral,
    k: CumulativeIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixReport {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `I1 · f^{1/2} / (t − t0)`, expected in a fixed band
    pub i1_band: f64,
    /// `|I2| / f^{1/2}`, expected bounded
    pub i2_band: f64,
    /// `|I3|`, expected bounded
    pub i3_band: f64,
    pub r1: f64,
    pub r2: f64,
    /// `z/a` assembled from the decomposition
    pub z_over_a: [f64; 2],
    /// `2 (R2 sin t − R1 cos t) H I1 / (t − t0)²`
    pub cross_ratio: f64,
}

impl AppendixReport {
    pub fn bands(&self) -> [f64; 3] {
        [self.i1_band, self.i2_band, self.i3_band]
    }
}

impl AppendixIntegrals {
    pub fn new(basis: Arc<AnalyticBasis>, spec: QuadSpec) -> Self {
        let t0 = basis.t0();
        let make = |g: Arc<dyn Fn(f64) -> f64 + Send + Sync>| CumulativeIntegral::new(t0, FRAC_PI_2, spec, g);
        let (b1, b2, b3) = (basis.clone(), basis.clone(), basis.clone());
        let i1 = make(Arc::new(move |s: f64| match b1.hf().eval(s) {
            Ok(h) => s.sin().powi(2) / h,
            Err(_) => f64::NAN,
        }));
        let i2 = make(Arc::new(move |s: f64| match b2.hf().eval(s) {
            Ok(h) => (2.0 * s).sin() * h,
            Err(_) => f64::NAN,
        }));
        let k = make(Arc::new(move |s: f64| match (b3.hf().eval(s), b3.g(s)) {
            (Ok(h), Ok(g)) => (2.0 * s).sin() * h * g,
            _ => f64::NAN,
        }));
        AppendixIntegrals { basis, i1, i2, k }
    }

    pub fn basis(&self) -> &Arc<AnalyticBasis> {
        &self.basis
    }

    pub fn report(&self, t: f64) -> Result<AppendixReport, ClassicalError> {
        let t0 = self.basis.t0();
        if !(t > t0) {
            return Err(ClassicalError::InvalidArguments(format!("t = {t} must exceed t0 = {t0}")));
        }
        let rate = self.basis.rate();
        let i1 = self.i1.value_at(t)?;
        let i2 = self.i2.value_at(t)?;
        let g = self.basis.g(t)?;
        let i3 = g * i2 - self.k.value_at(t)?;
        let h = self.basis.hf().eval(t)?;
        let sample = rate.checked_sample(t).map_err(crate::perturbation::PerturbationError::from)?;
        let sqrt_f = (0.5 * sample.log_value).exp();
        let r = sample.log_d1;
        let (s, c) = t.sin_cos();
        let r1 = s / (2.0 * h) * i2 + 0.5 * c * h * i3;
        let r2 = (c + r * c * c * s) / (2.0 * h) * i2 - r * c.powi(3) * h * i1 + 0.5 * (r * c.powi(3) - s) * h * i3;
        let dt = t - t0;
        Ok(AppendixReport {
            t,
            i1,
            i2,
            i3,
            i1_band: i1 * sqrt_f / dt,
            i2_band: i2.abs() / sqrt_f,
            i3_band: i3.abs(),
            r1,
            r2,
            z_over_a: [-c * h * i1 + r1, s * h * i1 + r2],
            cross_ratio: 2.0 * (r2 * s - r1 * c) * h * i1 / (dt * dt),
        })
    }
}

pub fn appendix_integrals(
    basis: &Arc<AnalyticBasis>,
    t: f64,
    spec: QuadSpec,
) -> Result<AppendixReport, ClassicalError> {
    AppendixIntegrals::new(basis.clone(), spec).report(t)
}

/// A function together with derivatives `G', …, G^{(N)}`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillatoryIntegralReport {
    /// `sup |∫_{t0}^t cos(2s) G|` over `[t0, horizon]`
    pub sup_cos: f64,
    pub sup_sin: f64,
    /// Same suprema restricted to `[t0, t0 + (horizon − t0)/10]`
    pub sup_cos_decade: f64,
    pub sup_sin_decade: f64,
    /// Running suprema changed by less than 1% over the last decade.
    pub bounded_on_horizon: bool,
    /// `|direct − integrated-by-parts|` for the cosine integral at the horizon
    pub ibp_defect: f64,
    /// `∫ |G^{(N)}|` over `[t0, horizon]`
    pub derivative_l1: f64,
    /// `|G^{(j)}(horizon)|` for `j < N`
    pub tail_values: Vec<f64>,
}

/// Running suprema of `∫ cos(2s) G` and `∫ sin(2s) G`; the derivatives feed
/// the `N`-fold integration by parts
///
/// `∫ cos(2s) G = Σ_{l=1}^N (−1)^{l−1} 2^{−l} [cos(2s − lπ/2) G^{(l−1)}] + (−1)^N 2^{−N} ∫ cos(2s − Nπ/2) G^{(N)}`,
///
/// whose agreement with the direct integral checks the derivatives.
pub fn oscillatory_integral_check(
    g: ScalarFn,
    derivatives: &[ScalarFn],
    t0: f64,
    horizon: f64,
    spec: QuadSpec,
) -> Result<OscillatoryIntegralReport, ClassicalError> {
    let order = derivatives.len();
    if order == 0 || !(horizon > t0) {
        return Err(ClassicalError::InvalidArguments(format!(
            "need at least one derivative and horizon > t0 (t0 = {t0}, horizon = {horizon})"
        )));
    }
    let (gc, gs) = (g.clone(), g.clone());
    let cos_int = CumulativeIntegral::new(t0, FRAC_PI_2, spec, Arc::new(move |s: f64| (2.0 * s).cos() * gc(s)));
    let sin_int = CumulativeIntegral::new(t0, FRAC_PI_2, spec, Arc::new(move |s: f64| (2.0 * s).sin() * gs(s)));
    let decade = t0 + (horizon - t0) / 10.0;
    let (mut sup_cos, mut sup_sin, mut sup_cos_decade, mut sup_sin_decade) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in sample_grid(t0, horizon, std::f64::consts::PI / 8.0) {
        let (c, s) = (cos_int.value_at(t)?.abs(), sin_int.value_at(t)?.abs());
        sup_cos = sup_cos.max(c);
        sup_sin = sup_sin.max(s);
        if t <= decade {
            sup_cos_decade = sup_cos_decade.max(c);
            sup_sin_decade = sup_sin_decade.max(s);
        }
    }
    let stable = |full: f64, part: f64| full <= part * 1.01 || full == 0.0;
    let bounded_on_horizon = stable(sup_cos, sup_cos_decade) && stable(sup_sin, sup_sin_decade);

    // integration by parts at the horizon
    let nth = derivatives[order - 1].clone();
    let shift = order as f64 * FRAC_PI_2;
    let remainder = CumulativeIntegral::new(
        t0,
        FRAC_PI_2,
        spec,
        Arc::new(move |s: f64| (2.0 * s - shift).cos() * nth(s)),
    )
    .value_at(horizon)?;
    let mut ibp = (-1f64).powi(order as i32) / 2f64.powi(order as i32) * remainder;
    for l in 1..=order {
        let gl: &ScalarFn = if l == 1 { &g } else { &derivatives[l - 2] };
        let bracket = |s: f64| (2.0 * s - l as f64 * FRAC_PI_2).cos() * gl(s);
        ibp += (-1f64).powi(l as i32 - 1) / 2f64.powi(l as i32) * (bracket(horizon) - bracket(t0));
    }
    let ibp_defect = (cos_int.value_at(horizon)? - ibp).abs();
    let nth = derivatives[order - 1].clone();
    let derivative_l1 = sample_grid(t0, horizon, FRAC_PI_2)
        .windows(2)
        .map(|w| integrate(&|s: f64| nth(s).abs(), w[0], w[1], spec))
        .sum::<Result<f64, _>>()?;
    let tail_values = std::iter::once(&g)
        .chain(derivatives[..order - 1].iter())
        .map(|d| d(horizon).abs())
        .collect();
    Ok(OscillatoryIntegralReport {
        sup_cos,
        sup_sin,
        sup_cos_decade,
        sup_sin_decade,
        bounded_on_horizon,
        ibp_defect,
        derivative_l1,
        tail_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::ForcedDuhamel;
    use crate::growth_rates::make_catalog_rate;

    fn basis(name: &str) -> Arc<AnalyticBasis> {
        Arc::new(AnalyticBasis::new(&make_catalog_rate(name, &[]).unwrap(), 1e-10))
    }

    #[test]
    fn constant_rate_i1_closed_form() {
        let b = basis("constant");
        let t0 = b.t0();
        let app = AppendixIntegrals::new(b, QuadSpec::kronrod(1e-10));
        for t in [t0 + 1.0, t0 + 17.5, t0 + 300.0] {
            let rep = app.report(t).unwrap();
            let exact = (t - t0) / 2.0 - ((2.0 * t).sin() - (2.0 * t0).sin()) / 4.0;
            assert!((rep.i1 - exact).abs() < 1e-9, "t = {t}");
            assert_eq!(rep.i3, 0.0);
        }
        let rep = app.report(t0 + 1e4).unwrap();
        assert!((rep.i1_band - 0.5).abs() < 1e-4);
    }

    #[test]
    fn decomposition_matches_duhamel() {
        let b = basis("power_log");
        let app = AppendixIntegrals::new(b.clone(), QuadSpec::kronrod(1e-10));
        let forced = ForcedDuhamel::new(b.clone(), 1.0, QuadSpec::kronrod(1e-10));
        for k in 1..8 {
            let t = b.t0() + 13.7 * k as f64;
            let rep = app.report(t).unwrap();
            let z = forced.eval(t).unwrap();
            assert!((rep.z_over_a[0] - z[0]).abs() < 1e-7 * z.norm().max(1.0), "t = {t}: {rep:?} {z:?}");
            assert!((rep.z_over_a[1] - z[1]).abs() < 1e-7 * z.norm().max(1.0), "t = {t}: {rep:?} {z:?}");
        }
    }

    #[test]
    fn dirichlet_integral_is_bounded() {
        let g: ScalarFn = Arc::new(|s: f64| 1.0 / s);
        let d: ScalarFn = Arc::new(|s: f64| -1.0 / (s * s));
        let rep = oscillatory_integral_check(g, &[d], 1.0, 1000.0, QuadSpec::kronrod(1e-10)).unwrap();
        assert!(rep.bounded_on_horizon, "{rep:?}");
        assert!(rep.ibp_defect < 1e-8);
        assert!((rep.derivative_l1 - (1.0 - 1e-3)).abs() < 1e-8);
        assert!((rep.tail_values[0] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn zero_function() {
        let z: ScalarFn = Arc::new(|_| 0.0);
        let rep = oscillatory_integral_check(z.clone(), &[z], 1.0, 50.0, QuadSpec::kronrod(1e-10)).unwrap();
        assert_eq!((rep.sup_cos, rep.sup_sin), (0.0, 0.0));
        assert!(rep.bounded_on_horizon);
    }

    #[test]
    fn growing_integral_is_flagged() {
        // cos(2s)·cos(2s) integrates to ~ t/2
        let g: ScalarFn = Arc::new(|s: f64| (2.0 * s).cos());
        let d: ScalarFn = Arc::new(|s: f64| -2.0 * (2.0 * s).sin());
        let rep = oscillatory_integral_check(g, &[d], 0.0, 200.0, QuadSpec::kronrod(1e-10)).unwrap();
        assert!(!rep.bounded_on_horizon);
        assert!(rep.ibp_defect < 1e-8);
    }

    #[test]
    fn needs_a_derivative() {
        let g: ScalarFn = Arc::new(|s: f64| s);
        assert!(oscillatory_integral_check(g, &[], 0.0, 1.0, QuadSpec::kronrod(1e-10)).is_err());
    }
}
