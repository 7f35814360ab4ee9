//! Comparison of measured quantum Sobolev norms with the classical
//! prediction `‖z*(t)‖^s + ‖W(t)‖^s`, and the band statistics used to judge
//! growth claims that hold up to constants.

use serde::Serialize;
use thiserror::Error;

use crate::classical::FlowResult;
use crate::quantum::QuantumTrajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrespondenceError {
    #[error("sample {index} is at t = {classical} on the classical side and t = {quantum} on the quantum side")]
    GridMismatch { index: usize, classical: f64, quantum: f64 },
    #[error("the trajectory has no recorded Sobolev norm of order {0}")]
    MissingOrder(f64),
    #[error("no samples at or after t = {0}")]
    EmptyWindow(f64),
    #[error("non-positive or non-finite value {value} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

/// `zstar_norm^s + w_norm^s`.
pub fn predicted_norm(s: f64, w_norm: f64, zstar_norm: f64) -> f64 {
    zstar_norm.powf(s) + w_norm.powf(s)
}

/// Extremes, spread and drift of a positive series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandSummary {
    pub min: f64,
    pub max: f64,
    /// `max / min`
    pub spread: f64,
    /// Geometric mean over the second half of the samples against the first
    /// half, inverted if below 1, so that `1` means no trend.
    pub drift: f64,
    pub samples: usize,
}

impl BandSummary {
    /// `None` for an empty series or one with a non-positive entry.
    pub fn of(values: &[f64]) -> Option<BandSummary> {
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(0.0, f64::max);
        let half = values.len() / 2;
        let log_mean = |xs: &[f64]| xs.iter().map(|v| v.ln()).sum::<f64>() / xs.len() as f64;
        let drift = if half == 0 {
            1.0
        } else {
            (log_mean(&values[values.len() - half..]) - log_mean(&values[..half])).abs().exp()
        };
        Some(BandSummary { min, max, spread: max / min, drift, samples: values.len() })
    }
}

/// Measured and predicted norms on a window of sample times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSeries {
    pub s: f64,
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub predicted: Vec<f64>,
    pub window_start: f64,
}

impl RatioSeries {
    /// Keeps the samples with `t ≥ window_start`; times must increase and
    /// both series must be positive there.
    pub fn new(
        s: f64,
        times: &[f64],
        measured: &[f64],
        predicted: &[f64],
        window_start: f64,
    ) -> Result<Self, CorrespondenceError> {
        if times.len() != measured.len() || times.len() != predicted.len() {
            return Err(CorrespondenceError::InvalidArguments(format!(
                "series lengths differ: {} times, {} measured, {} predicted",
                times.len(),
                measured.len(),
                predicted.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CorrespondenceError::InvalidArguments("times must be strictly increasing".into()));
        }
        let first = times.iter().position(|&t| t >= window_start).ok_or(CorrespondenceError::EmptyWindow(window_start))?;
        for i in first..times.len() {
            for value in [measured[i], predicted[i]] {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(CorrespondenceError::NonPositive { t: times[i], value });
                }
            }
        }
        Ok(RatioSeries {
            s,
            times: times[first..].to_vec(),
            measured: measured[first..].to_vec(),
            predicted: predicted[first..].to_vec(),
            window_start,
        })
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.measured.iter().zip(&self.predicted).map(|(m, p)| m / p).collect()
    }

    pub fn report(&self) -> BandSummary {
        BandSummary::of(&self.ratios()).expect("window is non-empty and positive by construction")
    }

    /// The part of the window with `t ≤ t_end`.
    pub fn truncated(&self, t_end: f64) -> Result<RatioSeries, CorrespondenceError> {
        let n = self.times.iter().take_while(|&&t| t <= t_end).count();
        if n == 0 {
            return Err(CorrespondenceError::EmptyWindow(self.window_start));
        }
        Ok(RatioSeries {
            s: self.s,
            times: self.times[..n].to_vec(),
            measured: self.measured[..n].to_vec(),
            predicted: self.predicted[..n].to_vec(),
            window_start: self.window_start,
        })
    }
}

/// Times within this relative distance count as the same sample.
const TIME_MATCH: f64 = 1e-9;

/// `‖u(t)‖_s` against `‖z*(t)‖^s + ‖W(t)‖^s` on the shared sample times.
pub fn ratio_series(
    flow: &FlowResult,
    trajectory: &QuantumTrajectory,
    s: f64,
    window_start: f64,
) -> Result<RatioSeries, CorrespondenceError> {
    let measured = trajectory.sobolev_series(s).ok_or(CorrespondenceError::MissingOrder(s))?;
    let quantum_times = trajectory.times();
    if flow.len() != quantum_times.len() {
        let index = flow.len().min(quantum_times.len());
        return Err(CorrespondenceError::GridMismatch {
            index,
            classical: flow.times.get(index).copied().unwrap_or(f64::NAN),
            quantum: quantum_times.get(index).copied().unwrap_or(f64::NAN),
        });
    }
    for (index, (&c, &q)) in flow.times.iter().zip(&quantum_times).enumerate() {
        if (c - q).abs() > TIME_MATCH * c.abs().max(1.0) {
            return Err(CorrespondenceError::GridMismatch { index, classical: c, quantum: q });
        }
    }
    let predicted: Vec<f64> = (0..flow.len()).map(|i| predicted_norm(s, flow.w_norm(i), flow.zstar_norm(i))).collect();
    RatioSeries::new(s, &flow.times, &measured, &predicted, window_start)
}

/// The two subsequences on which the oscillating rate
/// `t^{1/3}(1 + ln t · sin²√t)` touches its envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    /// `t_k = (kπ)²`, where `sin²√t = 0` and `f = t^{1/3}`.
    Lower,
    /// `t_k = ((k + 1/2)π)²`, where `sin²√t = 1`.
    Upper,
}

impl Envelope {
    /// The envelope times inside `[t_start, t_end]`.
    pub fn times(self, t_start: f64, t_end: f64) -> Vec<f64> {
        let offset = match self {
            Envelope::Lower => 0.0,
            Envelope::Upper => 0.5,
        };
        let pi = std::f64::consts::PI;
        let k0 = (t_start.max(0.0).sqrt() / pi - offset).ceil().max(0.0) as usize;
        (k0..)
            .map(|k| ((k as f64 + offset) * pi).powi(2))
            .skip_while(|&t| t < t_start)
            .take_while(|&t| t <= t_end)
            .collect()
    }

    /// `t^{s/6}` on the lower envelope, `t^{s/6} ln^{s/2} t` on the upper.
    pub fn scale(self, s: f64, t: f64) -> f64 {
        let base = t.powf(s / 6.0);
        match self {
            Envelope::Lower => base,
            Envelope::Upper => base * t.ln().powf(s / 2.0),
        }
    }
}

/// `value(t_k) / scale(t_k)` along an envelope.
pub fn envelope_band(
    envelope: Envelope,
    s: f64,
    times: &[f64],
    values: &[f64],
) -> Result<BandSummary, CorrespondenceError> {
    if times.len() != values.len() {
        return Err(CorrespondenceError::InvalidArguments("times and values differ in length".into()));
    }
    let ratios: Vec<f64> = times.iter().zip(values).map(|(&t, &v)| v / envelope.scale(s, t)).collect();
    BandSummary::of(&ratios).ok_or_else(|| {
        CorrespondenceError::InvalidArguments(format!("{envelope:?} envelope: empty or non-positive series"))
    })
}

/// Linear interpolation of `values` sampled at increasing `times`.
pub fn interpolate_at(times: &[f64], values: &[f64], t: f64) -> Option<f64> {
    let i = times.partition_point(|&x| x <= t);
    if i == 0 || times.len() < 2 {
        return (times.first() == Some(&t)).then(|| values[0]);
    }
    if i == times.len() {
        return (times[i - 1] == t).then(|| values[i - 1]);
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let w = (t - t0) / (t1 - t0);
    Some(values[i - 1] * (1.0 - w) + values[i] * w)
}
