//! Growth-rate functions `f`, the class-M membership checks, the support
//! condition used by the forced construction, and a catalog of named rates.
//!
//! Every rate carries closed-form first and second derivatives (custom rates
//! may fall back to central differences) together with the logarithmic
//! quantities `ln f`, `f'/f` and `f''/f`. Downstream code only ever needs the
//! ratios, which stay finite long after `f` itself overflows, so the checks
//! here are phrased in terms of `ln f`.

use std::f64::consts::{E, FRAC_PI_2};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("unknown growth rate `{0}`")]
    UnknownName(String),
    #[error("invalid parameters for `{family}`: {reason}")]
    InvalidParams { family: String, reason: String },
    #[error("rate `{label}` is not finite at t = {t}")]
    NonFinite { label: String, t: f64 },
    #[error("invalid check arguments: {0}")]
    InvalidArguments(String),
}

/// Point evaluation of a rate and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSample {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    /// `ln f`
    pub log_value: f64,
    /// `f'/f`
    pub log_d1: f64,
    /// `f''/f`
    pub curvature: f64,
}

impl RateSample {
    /// Builds a sample from `g = ln f` and its first two derivatives.
    fn from_log(g: f64, g1: f64, g2: f64) -> Self {
        let value = g.exp();
        let curvature = g2 + g1 * g1;
        RateSample { value, d1: value * g1, d2: value * curvature, log_value: g, log_d1: g1, curvature }
    }

    fn from_direct(value: f64, d1: f64, d2: f64) -> Self {
        RateSample { value, d1, d2, log_value: value.ln(), log_d1: d1 / value, curvature: d2 / value }
    }

    fn is_finite(&self) -> bool {
        self.log_value.is_finite() && self.log_d1.is_finite() && self.curvature.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    ClosedForm,
    FiniteDifference,
}

/// Catalog families. The parameters are validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateFamily {
    /// `μ t^α ln^β t`
    PowerLog { mu: f64, alpha: f64, beta: f64 },
    /// `exp(ln(t)^a)`
    ExpLogPower { a: f64 },
    /// `exp(t^σ)`, `0 < σ < 1`
    ExpPower { sigma: f64 },
    /// `t / ln t`
    TOverLog,
    /// `ln ln … ln t`, `k` times
    IteratedLog { k: u32 },
    /// `exp(λ t)`; outside class M
    Exponential { lambda: f64 },
    /// `c`; outside class M
    Constant { c: f64 },
    /// `t^{1/3}(1 + ln(t) sin²(√t))`
    Oscillatory,
}

/// Names accepted by [`make_catalog_rate`].
pub const CATALOG_NAMES: [&str; 8] = [
    "power_log",
    "exp_log_power",
    "exp_power",
    "t_over_log",
    "iterated_log",
    "exponential",
    "constant",
    "oscillatory",
];

type RateFn = Arc<dyn Fn(f64) -> RateSample + Send + Sync>;

/// A growth rate `f` on `[t0, ∞)`.
#[derive(Clone)]
pub struct GrowthRate {
    label: String,
    t0: f64,
    family: Option<RateFamily>,
    derivatives: DerivativeSource,
    eval: RateFn,
}

impl fmt::Debug for GrowthRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthRate")
            .field("label", &self.label)
            .field("t0", &self.t0)
            .field("family", &self.family)
            .field("derivatives", &self.derivatives)
            .finish()
    }
}

impl GrowthRate {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn family(&self) -> Option<RateFamily> {
        self.family
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.derivatives
    }

    pub fn sample(&self, t: f64) -> RateSample {
        (self.eval)(t)
    }

    pub fn f(&self, t: f64) -> f64 {
        self.sample(t).value
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.sample(t).d1
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.sample(t).d2
    }

    /// `f'/f`
    pub fn log_derivative(&self, t: f64) -> f64 {
        self.sample(t).log_d1
    }

    /// `f''/f`
    pub fn curvature(&self, t: f64) -> f64 {
        self.sample(t).curvature
    }

    /// Evaluation that fails on non-finite logarithmic quantities.
    pub fn checked_sample(&self, t: f64) -> Result<RateSample, RateError> {
        let s = self.sample(t);
        if s.is_finite() {
            Ok(s)
        } else {
            Err(RateError::NonFinite { label: self.label.clone(), t })
        }
    }

    /// Same rate with a different domain start. The new start must lie in
    /// the domain of `f`.
    pub fn with_t0(mut self, t0: f64) -> Result<Self, RateError> {
        if !t0.is_finite() {
            return Err(RateError::InvalidArguments(format!("t0 = {t0} is not finite")));
        }
        self.t0 = t0;
        let s = self.checked_sample(t0)?;
        if s.value <= 0.0 {
            return Err(RateError::InvalidArguments(format!("f(t0) = {} is not positive", s.value)));
        }
        Ok(self)
    }

    /// A user-supplied rate. Missing derivatives are replaced by central
    /// differences with step `1e-5·max(1, |t|)`.
    pub fn custom<F, D1, D2>(label: &str, t0: f64, f: F, d1: Option<D1>, d2: Option<D2>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let closed = d1.is_some() && d2.is_some();
        let f = Arc::new(f);
        let d1: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match d1 {
            Some(d) => Arc::new(d),
            None => {
                let f = f.clone();
                Arc::new(move |t| {
                    let h = fd_step(t);
                    (f(t + h) - f(t - h)) / (2.0 * h)
                })
            }
        };
        let d2: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match d2 {
            Some(d) => Arc::new(d),
            None => {
                let f = f.clone();
                Arc::new(move |t| {
                    let h = fd_step(t);
                    (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
                })
            }
        };
        GrowthRate {
            label: label.to_string(),
            t0,
            family: None,
            derivatives: if closed {
                DerivativeSource::ClosedForm
            } else {
                DerivativeSource::FiniteDifference
            },
            eval: Arc::new(move |t| RateSample::from_direct(f(t), d1(t), d2(t))),
        }
    }

    fn from_family(label: String, t0: f64, family: RateFamily, eval: RateFn) -> Self {
        GrowthRate { label, t0, family: Some(family), derivatives: DerivativeSource::ClosedForm, eval }
    }
}

fn fd_step(t: f64) -> f64 {
    1e-5 * t.abs().max(1.0)
}

/// Central-difference defects `|f' − δ₁f|` and `|f'' − δ₂f|` at step `h`.
pub fn derivative_defects(rate: &GrowthRate, t: f64, h: f64) -> (f64, f64) {
    let (fm, f0, fp) = (rate.f(t - h), rate.f(t), rate.f(t + h));
    let fd1 = (fp - fm) / (2.0 * h);
    let fd2 = (fp - 2.0 * f0 + fm) / (h * h);
    ((rate.d1(t) - fd1).abs(), (rate.d2(t) - fd2).abs())
}

fn invalid(family: &str, reason: impl Into<String>) -> RateError {
    RateError::InvalidParams { family: family.to_string(), reason: reason.into() }
}

fn take_params<const N: usize>(
    family: &str,
    params: &[f64],
    defaults: [f64; N],
) -> Result<[f64; N], RateError> {
    if params.len() > N {
        return Err(invalid(family, format!("expected at most {N} parameters, got {}", params.len())));
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(invalid(family, format!("parameter {p} is not finite")));
    }
    let mut out = defaults;
    out[..params.len()].copy_from_slice(params);
    Ok(out)
}

/// Builds a catalog rate.
///
/// | name            | params (defaults)      | f                         | t0                   |
/// |-----------------|------------------------|---------------------------|----------------------|
/// | `power_log`     | μ=1, α=1, β=0          | μ t^α ln^β t              | π/2 if β=0, else e   |
/// | `exp_log_power` | a=2                    | exp(ln(t)^a)              | exp(max(1, a−1))     |
/// | `exp_power`     | σ=1/2                  | exp(t^σ)                  | π/2                  |
/// | `t_over_log`    | none                   | t / ln t                  | e²                   |
/// | `iterated_log`  | k=1 (1 ≤ k ≤ 3)        | ln∘…∘ln (k times)         | e↑↑k (so f(t0) = 1)  |
/// | `exponential`   | λ=1/2                  | exp(λt)                   | π/2                  |
/// | `constant`      | c=1                    | c                         | π/2                  |
/// | `oscillatory`   | none                   | t^{1/3}(1+ln t sin²√t)    | e                    |
///
/// The starts make every logarithm defined and `f'/f` monotone from `t0`
/// onward; π/2 is also of the form `2kπ + π/2` required by the forced
/// construction.
pub fn make_catalog_rate(name: &str, params: &[f64]) -> Result<GrowthRate, RateError> {
    match name {
        "power_log" => {
            let [mu, alpha, beta] = take_params(name, params, [1.0, 1.0, 0.0])?;
            if mu <= 0.0 || alpha < 0.0 || beta < 0.0 {
                return Err(invalid(name, "need μ > 0, α ≥ 0, β ≥ 0"));
            }
            let t0 = if beta == 0.0 { FRAC_PI_2 } else { E };
            let family = RateFamily::PowerLog { mu, alpha, beta };
            let label = format!("power_log(mu={mu},alpha={alpha},beta={beta})");
            let eval: RateFn = Arc::new(move |t: f64| {
                let lt = t.ln();
                let mut g = mu.ln() + alpha * lt;
                let mut g1 = alpha / t;
                let mut g2 = -alpha / (t * t);
                if beta != 0.0 {
                    g += beta * lt.ln();
                    g1 += beta / (t * lt);
                    g2 -= beta * (lt + 1.0) / (t * t * lt * lt);
                }
                RateSample::from_log(g, g1, g2)
            });
            Ok(GrowthRate::from_family(label, t0, family, eval))
        }
        "exp_log_power" => {
            let [a] = take_params(name, params, [2.0])?;
            if a <= 0.0 {
                return Err(invalid(name, "need a > 0"));
            }
            let t0 = (a - 1.0).max(1.0).exp();
            let eval: RateFn = Arc::new(move |t: f64| {
                let lt = t.ln();
                let g = lt.powf(a);
                let g1 = a * lt.powf(a - 1.0) / t;
                let g2 = a * lt.powf(a - 2.0) * ((a - 1.0) - lt) / (t * t);
                RateSample::from_log(g, g1, g2)
            });
            Ok(GrowthRate::from_family(format!("exp_log_power(a={a})"), t0, RateFamily::ExpLogPower { a }, eval))
        }
        "exp_power" => {
            let [sigma] = take_params(name, params, [0.5])?;
            if !(sigma > 0.0 && sigma < 1.0) {
                return Err(invalid(name, "need 0 < σ < 1"));
            }
            let eval: RateFn = Arc::new(move |t: f64| {
                let g = t.powf(sigma);
                let g1 = sigma * t.powf(sigma - 1.0);
                let g2 = sigma * (sigma - 1.0) * t.powf(sigma - 2.0);
                RateSample::from_log(g, g1, g2)
            });
            Ok(GrowthRate::from_family(
                format!("exp_power(sigma={sigma})"),
                FRAC_PI_2,
                RateFamily::ExpPower { sigma },
                eval,
            ))
        }
        "t_over_log" => {
            take_params::<0>(name, params, [])?;
            let eval: RateFn = Arc::new(|t: f64| {
                let lt = t.ln();
                let g = lt - lt.ln();
                let g1 = 1.0 / t - 1.0 / (t * lt);
                let g2 = -1.0 / (t * t) + (lt + 1.0) / (t * t * lt * lt);
                RateSample::from_log(g, g1, g2)
            });
            Ok(GrowthRate::from_family("t_over_log".into(), E * E, RateFamily::TOverLog, eval))
        }
        "iterated_log" => {
            let [k] = take_params(name, params, [1.0])?;
            if k.fract() != 0.0 || !(1.0..=3.0).contains(&k) {
                return Err(invalid(name, "k must be an integer in 1..=3 (e↑↑4 overflows)"));
            }
            let k = k as u32;
            // e↑↑k: the point where the k-fold logarithm equals 1
            let t0 = (0..k).fold(1.0f64, |acc, _| acc.exp());
            let eval: RateFn = Arc::new(move |t: f64| {
                // levels[j] = ln^{(j)} t, j = 0..=k
                let mut levels = [t; 4];
                for j in 1..=k as usize {
                    levels[j] = levels[j - 1].ln();
                }
                // level'_j = 1 / (L_0 ⋯ L_{j-1})
                let mut prod = 1.0;
                let mut sum = 0.0;
                for level in levels.iter().take(k as usize) {
                    sum += 1.0 / (prod * level);
                    prod *= level;
                }
                let value = levels[k as usize];
                let d1 = 1.0 / prod;
                let d2 = -d1 * sum;
                RateSample {
                    value,
                    d1,
                    d2,
                    log_value: value.ln(),
                    log_d1: d1 / value,
                    curvature: d2 / value,
                }
            });
            Ok(GrowthRate::from_family(format!("iterated_log(k={k})"), t0, RateFamily::IteratedLog { k }, eval))
        }
        "exponential" => {
            let [lambda] = take_params(name, params, [0.5])?;
            if lambda <= 0.0 {
                return Err(invalid(name, "need λ > 0"));
            }
            let eval: RateFn = Arc::new(move |t: f64| RateSample::from_log(lambda * t, lambda, 0.0));
            Ok(GrowthRate::from_family(
                format!("exponential(lambda={lambda})"),
                FRAC_PI_2,
                RateFamily::Exponential { lambda },
                eval,
            ))
        }
        "constant" => {
            let [c] = take_params(name, params, [1.0])?;
            if c <= 0.0 {
                return Err(invalid(name, "need c > 0"));
            }
            let eval: RateFn = Arc::new(move |_| RateSample::from_log(c.ln(), 0.0, 0.0));
            Ok(GrowthRate::from_family(format!("constant(c={c})"), FRAC_PI_2, RateFamily::Constant { c }, eval))
        }
        "oscillatory" => {
            take_params::<0>(name, params, [])?;
            Ok(oscillatory_rate())
        }
        other => Err(RateError::UnknownName(other.to_string())),
    }
}

/// `f(t) = t^{1/3}(1 + ln(t) sin²(√t))` on `[e, ∞)`.
pub fn oscillatory_rate() -> GrowthRate {
    let eval: RateFn = Arc::new(|t: f64| {
        let rt = t.sqrt();
        let lt = t.ln();
        let u = t.cbrt();
        let u1 = u / (3.0 * t);
        let u2 = -2.0 * u / (9.0 * t * t);
        let (s2, c2) = (2.0 * rt).sin_cos();
        let sq = rt.sin().powi(2);
        let sq1 = s2 / (2.0 * rt);
        let sq2 = c2 / (2.0 * t) - s2 / (4.0 * t * rt);
        let v = 1.0 + lt * sq;
        let v1 = sq / t + lt * sq1;
        let v2 = -sq / (t * t) + 2.0 * sq1 / t + lt * sq2;
        RateSample::from_direct(u * v, u1 * v + u * v1, u2 * v + 2.0 * u1 * v1 + u * v2)
    });
    let rate = GrowthRate::from_family("oscillatory".into(), E, RateFamily::Oscillatory, eval);
    // product/chain-rule derivatives against central differences
    for t in [E, 10.0, 57.3, 400.0] {
        let h = 1e-3 * t.max(1.0);
        let (e1, e2) = derivative_defects(&rate, t, h);
        let scale = rate.f(t);
        assert!(
            e1 <= 1e-4 * scale && e2 <= 1e-3 * scale,
            "oscillatory rate derivatives inconsistent at t = {t}: {e1:e}, {e2:e}"
        );
    }
    rate
}

/// Rate reference as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub t0: Option<f64>,
}

impl RateSpec {
    pub fn resolve(&self) -> Result<GrowthRate, RateError> {
        let rate = make_catalog_rate(&self.name, &self.params)?;
        match self.t0 {
            Some(t0) => rate.with_t0(t0),
            None => Ok(rate),
        }
    }
}

// ---------------------------------------------------------------------------
// checks

/// Thresholds of the finite-horizon class-M verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMConfig {
    /// `f(horizon) ≥ growth_factor · f(t0)` counts as growth to infinity.
    pub growth_factor: f64,
    /// `(f'/f)(horizon) ≤ ratio_decay · max (f'/f)` counts as decay to zero.
    pub ratio_decay: f64,
    /// Per-step slack of the monotonicity tests.
    pub monotone_slack: f64,
}

impl Default for ClassMConfig {
    fn default() -> Self {
        ClassMConfig { growth_factor: 2.0, ratio_decay: 0.05, monotone_slack: 1e-10 }
    }
}

/// Finite-horizon verdicts, labelled as such: they support membership on
/// the sampled horizon and prove nothing about `t → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMReport {
    pub inf_positive: bool,
    pub non_decreasing: bool,
    pub tends_to_infinity: bool,
    pub ratio_to_zero: bool,
    pub ratio_monotone: bool,
    pub horizon: f64,
    pub grid_step: f64,
    pub min_value: f64,
    /// `ln f(horizon) − ln f(t0)`
    pub log_growth: f64,
    pub max_ratio: f64,
    pub ratio_at_horizon: f64,
}

impl ClassMReport {
    pub fn in_class_m(&self) -> bool {
        self.inf_positive
            && self.non_decreasing
            && self.tends_to_infinity
            && self.ratio_to_zero
            && self.ratio_monotone
    }
}

/// `t0, t0 + step, …` up to and including `horizon`.
pub fn sample_grid(t0: f64, horizon: f64, step: f64) -> Vec<f64> {
    let n = ((horizon - t0) / step).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| t0 + step * i as f64).collect();
    if let Some(&last) = grid.last() {
        if horizon - last > 1e-9 * step {
            grid.push(horizon);
        }
    }
    grid
}

fn checked_grid(
    rate: &GrowthRate,
    horizon: f64,
    step: f64,
) -> Result<(Vec<f64>, Vec<RateSample>), RateError> {
    if !(horizon > rate.t0()) {
        return Err(RateError::InvalidArguments(format!(
            "horizon {horizon} must exceed t0 = {}",
            rate.t0()
        )));
    }
    if !(step > 0.0) {
        return Err(RateError::InvalidArguments(format!("step {step} must be positive")));
    }
    let grid = sample_grid(rate.t0(), horizon, step);
    let samples = grid.iter().map(|&t| rate.checked_sample(t)).collect::<Result<Vec<_>, _>>()?;
    Ok((grid, samples))
}

pub fn check_class_m(rate: &GrowthRate, horizon: f64, step: f64) -> Result<ClassMReport, RateError> {
    check_class_m_with(rate, horizon, step, &ClassMConfig::default())
}

pub fn check_class_m_with(
    rate: &GrowthRate,
    horizon: f64,
    step: f64,
    cfg: &ClassMConfig,
) -> Result<ClassMReport, RateError> {
    let (_, samples) = checked_grid(rate, horizon, step)?;
    let first = samples[0];
    let last = *samples.last().expect("non-empty grid");
    let min_value = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let inf_positive = samples.iter().all(|s| s.value > 0.0);
    let non_decreasing = samples
        .windows(2)
        .all(|w| w[1].log_value >= w[0].log_value - cfg.monotone_slack);
    let log_growth = last.log_value - first.log_value;
    let tends_to_infinity = log_growth >= cfg.growth_factor.ln();
    let max_ratio = samples.iter().map(|s| s.log_d1.abs()).fold(0.0, f64::max);
    let ratio_at_horizon = last.log_d1;
    let ratio_to_zero = ratio_at_horizon.abs() <= cfg.ratio_decay * max_ratio;
    let ratio_monotone = samples
        .windows(2)
        .all(|w| w[1].log_d1 <= w[0].log_d1 + cfg.monotone_slack);
    Ok(ClassMReport {
        inf_positive,
        non_decreasing,
        tends_to_infinity,
        ratio_to_zero,
        ratio_monotone,
        horizon,
        grid_step: step,
        min_value,
        log_growth,
        max_ratio,
        ratio_at_horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportReport {
    /// `sup t·f'(t)/f(t)` on the grid
    pub kappa_bound: f64,
    /// `t·f'/f` non-increasing within slack
    pub monotone: bool,
    /// `f(t)/t²` eventually decreasing on the horizon
    pub subquadratic: bool,
}

impl SupportReport {
    pub fn holds(&self) -> bool {
        self.kappa_bound < 2.0 && self.monotone && self.subquadratic
    }
}

/// Support condition of the forced construction: `t·f'/f ≤ κ < 2`,
/// non-increasing, and `f = o(t²)`.
///
/// The last property is judged on the second half of the horizon: `f/t²`
/// must be non-increasing there and strictly smaller at the horizon than at
/// the midpoint.
pub fn check_support_condition(
    rate: &GrowthRate,
    horizon: f64,
    step: f64,
) -> Result<SupportReport, RateError> {
    let slack = ClassMConfig::default().monotone_slack;
    let (grid, samples) = checked_grid(rate, horizon, step)?;
    let g: Vec<f64> = grid.iter().zip(&samples).map(|(t, s)| t * s.log_d1).collect();
    let kappa_bound = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone = g.windows(2).all(|w| w[1] <= w[0] + slack);
    // ln(f/t²) avoids overflow for fast rates
    let q: Vec<f64> = grid.iter().zip(&samples).map(|(t, s)| s.log_value - 2.0 * t.ln()).collect();
    let mid = q.len() / 2;
    let tail = &q[mid..];
    let subquadratic = tail.windows(2).all(|w| w[1] <= w[0] + slack)
        && q[q.len() - 1] < q[mid] - 1e-9;
    Ok(SupportReport { kappa_bound, monotone, subquadratic })
}
