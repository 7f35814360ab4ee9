use std::sync::Arc;

use serde::Serialize;

use super::ExperimentError;
use crate::classical::{AnalyticBasis, AppendixIntegrals};
use crate::growth_rates::{check_class_m, check_support_condition, sample_grid, ClassMReport, RateSpec, SupportReport};
use crate::perturbation::{build_phi, check_decay, check_hypotheses, DecayReport, HypothesesReport};
use crate::quadrature::QuadSpec;

/// Grid step of the class-M and support checks.
const RATE_CHECK_STEP: f64 = 1.0;

/// Hypothesis reports of one rate on a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub rate_label: String,
    pub t0: f64,
    pub horizon: f64,
    pub in_class_m: bool,
    pub class_m: ClassMReport,
    pub support_holds: bool,
    pub support: SupportReport,
    pub hypotheses: HypothesesReport,
    pub decay: DecayReport,
}

pub fn check_rate(spec: &RateSpec, horizon: f64) -> Result<RateCheck, ExperimentError> {
    let rate = spec.resolve()?;
    let class_m = check_class_m(&rate, horizon, RATE_CHECK_STEP)?;
    let support = check_support_condition(&rate, horizon, RATE_CHECK_STEP)?;
    let hypotheses = check_hypotheses(&rate, horizon)?;
    let decay = check_decay(&build_phi(&rate), horizon, RATE_CHECK_STEP)?;
    Ok(RateCheck {
        rate_label: rate.label().to_string(),
        t0: rate.t0(),
        horizon,
        in_class_m: class_m.in_class_m(),
        class_m,
        support_holds: support.holds(),
        support,
        hypotheses,
        decay,
    })
}

/// Largest relative growth of an appendix statistic when the horizon
/// doubles.
pub const APPENDIX_DRIFT_LIMIT: f64 = 0.2;

/// Extremes of the three appendix ratios on `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixWindow {
    pub t_end: f64,
    /// Smallest and largest `I1 f^{1/2} / (t − t0)`.
    pub i1_min: f64,
    pub i1_max: f64,
    /// Largest `|I2| / f^{1/2}`.
    pub i2_sup: f64,
    /// Largest `|I3|`.
    pub i3_sup: f64,
}

impl AppendixWindow {
    fn stats(&self) -> [f64; 3] {
        [self.i1_max / self.i1_min, self.i2_sup, self.i3_sup]
    }
}

/// The appendix ratios on the full window and on its first half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixSummary {
    pub rate_label: String,
    pub t0: f64,
    pub window_start: f64,
    pub half: AppendixWindow,
    pub full: AppendixWindow,
    /// `stat(full) / stat(half) − 1` for the `I1` spread and the `I2`,
    /// `I3` suprema.
    pub drift: [f64; 3],
    pub passed: bool,
}

/// Samples the appendix ratios every `step` from `t0 + window_offset` to
/// `horizon`.
pub fn appendix_summary(
    spec: &RateSpec,
    horizon: f64,
    window_offset: f64,
    step: f64,
    quad_tol: f64,
) -> Result<AppendixSummary, ExperimentError> {
    let rate = spec.resolve()?;
    let t0 = rate.t0();
    let window_start = t0 + window_offset;
    let midpoint = t0 + (horizon - t0) / 2.0;
    if !(midpoint > window_start) || !(step > 0.0) {
        return Err(ExperimentError::Config(format!(
            "horizon {horizon} leaves no room for a window starting at {window_start}"
        )));
    }
    let basis = Arc::new(AnalyticBasis::new(&rate, quad_tol));
    let integrals = AppendixIntegrals::new(basis, QuadSpec::kronrod(quad_tol));
    let empty = |t_end| AppendixWindow { t_end, i1_min: f64::INFINITY, i1_max: 0.0, i2_sup: 0.0, i3_sup: 0.0 };
    let (mut half, mut full) = (empty(midpoint), empty(horizon));
    for t in sample_grid(window_start, horizon, step) {
        let r = integrals.report(t)?;
        let windows: &mut [&mut AppendixWindow] = if t <= midpoint { &mut [&mut half, &mut full] } else { &mut [&mut full] };
        for w in windows.iter_mut() {
            w.i1_min = w.i1_min.min(r.i1_band);
            w.i1_max = w.i1_max.max(r.i1_band);
            w.i2_sup = w.i2_sup.max(r.i2_band);
            w.i3_sup = w.i3_sup.max(r.i3_band);
        }
    }
    let (h, f) = (half.stats(), full.stats());
    let grow = |full: f64, half: f64| if full == half { 0.0 } else { full / half - 1.0 };
    let drift = [grow(f[0], h[0]), grow(f[1], h[1]), grow(f[2], h[2])];
    Ok(AppendixSummary {
        rate_label: rate.label().to_string(),
        t0,
        window_start,
        half,
        full,
        drift,
        passed: drift.iter().all(|d| *d <= APPENDIX_DRIFT_LIMIT),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, params: &[f64]) -> RateSpec {
        RateSpec { name: name.into(), params: params.to_vec(), t0: None }
    }

    #[test]
    fn exponential_is_outside_class_m() {
        let check = check_rate(&spec("exponential", &[0.5]), 200.0).unwrap();
        assert!(!check.in_class_m);
        assert!(!check.class_m.ratio_to_zero);
        assert!(check.class_m.tends_to_infinity);
    }

    #[test]
    fn linear_rate_is_in_class_m() {
        let check = check_rate(&spec("power_log", &[]), 1000.0).unwrap();
        assert!(check.in_class_m && check.support_holds, "{check:?}");
        assert!(check.decay.below_tolerance);
    }

    #[test]
    fn constant_rate_appendix_band_is_a_half() {
        // I1 = (t − t0)/2 − (sin 2t − sin 2t0)/4 and f = 1, so the band
        // deviates from 1/2 by at most 1/(2·offset) and I3 vanishes
        let s = appendix_summary(&spec("constant", &[]), 200.0, 10.0, 1.0, 1e-10).unwrap();
        assert!((s.full.i1_min - 0.5).abs() <= 0.05 && (s.full.i1_max - 0.5).abs() <= 0.05, "{s:?}");
        assert_eq!(s.full.i3_sup, 0.0);
        assert!(s.passed, "{s:?}");
    }
}
