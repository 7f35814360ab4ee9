//! The time-decaying perturbation `φ_f`, the exponential integral
//! `H_f(t) = exp ∫_{t0}^t (f'/f) cos²`, and finite-horizon checks of the
//! hypotheses under which `φ_f` produces `f^{s/2}` growth.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::growth_rates::{sample_grid, GrowthRate, RateError, RateSample};
use crate::quadrature::{CumulativeIntegral, QuadError, QuadSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerturbationError {
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

/// `φ_f` evaluated from a rate sample, with `r = f'/f`, `q = f''/f`:
/// `−r² cos⁴t − (q − r²) cos²t + 4 r cos t sin t`.
pub fn phi_from_sample(s: &RateSample, t: f64) -> f64 {
    let (sn, cs) = t.sin_cos();
    let r = s.log_d1;
    let c2 = cs * cs;
    -r * r * c2 * c2 - (s.curvature - r * r) * c2 + 4.0 * r * cs * sn
}

/// `φ_f` as a function handle on top of its rate. Holds no state of its own.
#[derive(Debug, Clone)]
pub struct Perturbation {
    rate: GrowthRate,
}

impl Perturbation {
    pub fn rate(&self) -> &GrowthRate {
        &self.rate
    }

    pub fn label(&self) -> String {
        format!("phi[{}]", self.rate.label())
    }

    pub fn phi(&self, t: f64) -> f64 {
        phi_from_sample(&self.rate.sample(t), t)
    }

    /// `φ` as a shareable closure for the integrators.
    pub fn as_fn(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        let rate = self.rate.clone();
        Arc::new(move |t| phi_from_sample(&rate.sample(t), t))
    }
}

pub fn build_phi(rate: &GrowthRate) -> Perturbation {
    Perturbation { rate: rate.clone() }
}

/// `H_f` with cumulative caching of `ln H_f` at breakpoints spaced by π/2.
#[derive(Debug)]
pub struct HfEvaluator {
    rate: GrowthRate,
    log_h: CumulativeIntegral,
}

impl HfEvaluator {
    pub fn new(rate: &GrowthRate, spec: QuadSpec) -> Self {
        let r = rate.clone();
        let integrand = Arc::new(move |t: f64| {
            let c = t.cos();
            r.log_derivative(t) * c * c
        });
        HfEvaluator { rate: rate.clone(), log_h: CumulativeIntegral::new(rate.t0(), FRAC_PI_2, spec, integrand) }
    }

    /// Adaptive Simpson at the given tolerance.
    pub fn with_tol(rate: &GrowthRate, tol: f64) -> Self {
        Self::new(rate, QuadSpec::simpson(tol))
    }

    pub fn rate(&self) -> &GrowthRate {
        &self.rate
    }

    pub fn t0(&self) -> f64 {
        self.rate.t0()
    }

    pub fn spec(&self) -> QuadSpec {
        self.log_h.spec()
    }

    pub fn cached_breakpoints(&self) -> usize {
        self.log_h.cached_breakpoints()
    }

    /// `ln H_f(t)`
    pub fn log_eval(&self, t: f64) -> Result<f64, PerturbationError> {
        Ok(self.log_h.value_at(t)?)
    }

    pub fn eval(&self, t: f64) -> Result<f64, PerturbationError> {
        Ok(self.log_eval(t)?.exp())
    }

    /// `H_f(t)` without consulting the cache.
    pub fn eval_from_scratch(&self, t: f64) -> Result<f64, PerturbationError> {
        Ok(self.log_h.value_from_scratch(t)?.exp())
    }
}

pub fn eval_hf(ev: &HfEvaluator, t: f64) -> Result<f64, PerturbationError> {
    ev.eval(t)
}

/// `G(t) = ∫_{t0}^t sin(2s) (f'/f)(s) / H_f(s)² ds`, cached like `H_f`.
///
/// A failed inner evaluation surfaces as a non-finite integrand, which the
/// outer quadrature reports.
pub fn weighted_sine_integral(hf: &Arc<HfEvaluator>, spec: QuadSpec) -> CumulativeIntegral {
    let h = hf.clone();
    let integrand = Arc::new(move |s: f64| match h.log_eval(s) {
        Ok(lh) => (2.0 * s).sin() * h.rate().log_derivative(s) * (-2.0 * lh).exp(),
        Err(_) => f64::NAN,
    });
    CumulativeIntegral::new(hf.t0(), FRAC_PI_2, spec, integrand)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// `sup |φ_f|` on the last 10% of the grid
    pub sup_tail: f64,
    /// `sup |φ_f|` on the first 10% of the grid, for comparison
    pub sup_head: f64,
    pub tolerance: f64,
    pub below_tolerance: bool,
}

pub fn check_decay(p: &Perturbation, horizon: f64, step: f64) -> Result<DecayReport, PerturbationError> {
    check_decay_with(p, horizon, step, 0.1)
}

pub fn check_decay_with(
    p: &Perturbation,
    horizon: f64,
    step: f64,
    tolerance: f64,
) -> Result<DecayReport, PerturbationError> {
    let t0 = p.rate().t0();
    if !(horizon > t0) || !(step > 0.0) {
        return Err(PerturbationError::InvalidArguments(format!(
            "need horizon > t0 = {t0} and step > 0, got {horizon}, {step}"
        )));
    }
    let grid = sample_grid(t0, horizon, step);
    let tenth = (grid.len() / 10).max(1);
    let mut values = Vec::with_capacity(grid.len());
    for &t in &grid {
        let s = p.rate().checked_sample(t)?;
        values.push(phi_from_sample(&s, t).abs());
    }
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let sup_tail = sup(&values[values.len() - tenth..]);
    let sup_head = sup(&values[..tenth]);
    Ok(DecayReport { sup_tail, sup_head, tolerance, below_tolerance: sup_tail < tolerance })
}

/// Running suprema of the three hypotheses on `[t0, horizon]`. Finite
/// values only support the hypotheses on this horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesesReport {
    /// `sup |f'/f|`
    pub sup_c1: f64,
    /// `sup |∫ cos(2s) f'/f|`
    pub sup_c2: f64,
    /// `sup |∫ sin(2s) (f'/f) / H_f²|`
    pub sup_c3: f64,
    pub horizon: f64,
}

pub fn check_hypotheses(rate: &GrowthRate, horizon: f64) -> Result<HypothesesReport, PerturbationError> {
    check_hypotheses_with(rate, horizon, QuadSpec::simpson(1e-10), QuadSpec::kronrod(1e-10))
}

/// Grid step of the running suprema.
const HYPOTHESIS_STEP: f64 = std::f64::consts::PI / 8.0;

pub fn check_hypotheses_with(
    rate: &GrowthRate,
    horizon: f64,
    inner: QuadSpec,
    outer: QuadSpec,
) -> Result<HypothesesReport, PerturbationError> {
    let t0 = rate.t0();
    if !(horizon > t0) {
        return Err(PerturbationError::InvalidArguments(format!("horizon {horizon} must exceed t0 = {t0}")));
    }
    let hf = Arc::new(HfEvaluator::new(rate, inner));
    let r = rate.clone();
    let cos_integral = CumulativeIntegral::new(
        t0,
        FRAC_PI_2,
        outer,
        Arc::new(move |s: f64| (2.0 * s).cos() * r.log_derivative(s)),
    );
    let g = weighted_sine_integral(&hf, outer);
    let mut report = HypothesesReport { sup_c1: 0.0, sup_c2: 0.0, sup_c3: 0.0, horizon };
    for t in sample_grid(t0, horizon, HYPOTHESIS_STEP) {
        let s = rate.checked_sample(t)?;
        report.sup_c1 = report.sup_c1.max(s.log_d1.abs());
        report.sup_c2 = report.sup_c2.max(cos_integral.value_at(t)?.abs());
        report.sup_c3 = report.sup_c3.max(g.value_at(t)?.abs());
    }
    Ok(report)
}
