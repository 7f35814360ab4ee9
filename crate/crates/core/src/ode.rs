//! Dormand–Prince 5(4) with PI step-size control and the standard
//! fourth-order dense output, sampling the solution on a uniform grid.

use serde::Serialize;
use thiserror::Error;

use crate::growth_rates::sample_grid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite solution at t = {t}")]
    NonFinite { t: f64 },
    #[error("right-hand side failed at t = {t}: {message}")]
    Rhs { t: f64, message: String },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, max_steps: 10_000_000, initial_step: None, max_step: f64::INFINITY }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// difference between the 5th and 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// step control
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
/// bounds on h_old / h_new
const FAC_SHRINK: f64 = 5.0;
const FAC_GROW: f64 = 0.1;

/// Right-hand side `y' = f(t, y)` written into the output slice.
pub trait OdeRhs {
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String>;
}

impl<F> OdeRhs for F
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>,
{
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String> {
        self(t, y, dy)
    }
}

struct Stages {
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    err: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
            err: vec![0.0; n],
            cont: std::array::from_fn(|_| vec![0.0; n]),
        }
    }
}

fn call<R: OdeRhs>(rhs: &mut R, stats: &mut OdeStats, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), OdeError> {
    stats.evaluations += 1;
    rhs.eval(t, y, dy).map_err(|message| OdeError::Rhs { t, message })?;
    if dy.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { t })
    }
}

fn rms_norm(v: &[f64], scale: impl Fn(usize) -> f64) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / n).sqrt()
}

fn initial_step<R: OdeRhs>(
    rhs: &mut R,
    stats: &mut OdeStats,
    t: f64,
    y: &[f64],
    f0: &[f64],
    opts: &OdeOptions,
) -> Result<f64, OdeError> {
    let sk = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let dnf = rms_norm(f0, sk);
    let dny = rms_norm(y, sk);
    let mut h = if dnf <= 1e-5 || dny <= 1e-5 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(opts.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h * b).collect();
    let mut f1 = vec![0.0; y.len()];
    call(rhs, stats, t + h, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let der2 = rms_norm(&diff, sk) / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
    Ok((100.0 * h).min(h1).min(opts.max_step))
}

/// Integrates from `t0` to `t_end` and calls `on_sample(t, y)` at
/// `t0 + k·sample_step` (and at `t_end` if it is off the grid).
pub fn integrate_sampled<R, S>(
    mut rhs: R,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    sample_step: f64,
    opts: &OdeOptions,
    mut on_sample: S,
) -> Result<OdeStats, OdeError>
where
    R: OdeRhs,
    S: FnMut(f64, &[f64]),
{
    if !(t_end > t0) || !(sample_step > 0.0) || !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(OdeError::InvalidArguments(format!(
            "need t_end > t0, sample_step > 0 and positive tolerances (t0 = {t0}, t_end = {t_end}, step = {sample_step})"
        )));
    }
    let n = y0.len();
    let samples = sample_grid(t0, t_end, sample_step);
    let mut next_sample = 0;
    let mut stats = OdeStats::default();
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;

    call(&mut rhs, &mut stats, t, &y, &mut st.k[0])?;
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => initial_step(&mut rhs, &mut stats, t, &y, &st.k[0], opts)?,
    };
    while next_sample < samples.len() && samples[next_sample] <= t {
        on_sample(samples[next_sample], &y);
        next_sample += 1;
    }

    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let steps_cap = opts.max_steps;
    loop {
        if stats.accepted + stats.rejected >= steps_cap {
            return Err(OdeError::TooManySteps { t, max_steps: steps_cap });
        }
        if 0.1 * h.abs() <= t.abs() * f64::EPSILON {
            return Err(OdeError::StepUnderflow { t, h });
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }
        step(&mut rhs, &mut stats, &mut st, t, &y, h)?;

        let err = rms_norm(&st.err, |i| opts.atol + opts.rtol * y[i].abs().max(st.ynew[i].abs()));
        if !err.is_finite() {
            return Err(OdeError::NonFinite { t });
        }
        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(FAC_GROW, FAC_SHRINK);
        let mut hnew = h / fac;
        if err <= 1.0 {
            facold = err.max(1e-4);
            stats.accepted += 1;
            dense_coefficients(&mut st, &y, h);
            let t_new = if last { t_end } else { t + h };
            while next_sample < samples.len() && samples[next_sample] <= t_new {
                let ts = samples[next_sample];
                let theta = ((ts - t) / h).clamp(0.0, 1.0);
                let ys = interpolate(&st, theta);
                on_sample(ts, &ys);
                next_sample += 1;
            }
            std::mem::swap(&mut y, &mut st.ynew);
            st.k.swap(0, 6);
            t = t_new;
            if last || t >= t_end {
                break;
            }
            hnew = hnew.min(opts.max_step);
            if last_rejected {
                hnew = hnew.min(h);
            }
            last_rejected = false;
        } else {
            hnew = h / (fac11 / SAFETY).min(FAC_SHRINK);
            last_rejected = true;
            stats.rejected += 1;
        }
        h = hnew;
    }
    // grid points that round past t_end by an ulp
    for &ts in &samples[next_sample..] {
        on_sample(ts, &y);
    }
    Ok(stats)
}

fn step<R: OdeRhs>(
    rhs: &mut R,
    stats: &mut OdeStats,
    st: &mut Stages,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<(), OdeError> {
    let n = y.len();
    let [k1, k2, k3, k4, k5, k6, k7] = &mut st.k;
    let ytmp = &mut st.ytmp;
    for i in 0..n {
        ytmp[i] = y[i] + h * A21 * k1[i];
    }
    call(rhs, stats, t + C2 * h, ytmp, k2)?;
    for i in 0..n {
        ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    call(rhs, stats, t + C3 * h, ytmp, k3)?;
    for i in 0..n {
        ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    call(rhs, stats, t + C4 * h, ytmp, k4)?;
    for i in 0..n {
        ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    call(rhs, stats, t + C5 * h, ytmp, k5)?;
    for i in 0..n {
        ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    call(rhs, stats, t + h, ytmp, k6)?;
    let ynew = &mut st.ynew;
    for i in 0..n {
        ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    call(rhs, stats, t + h, ynew, k7)?;
    for i in 0..n {
        st.err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(())
}

fn dense_coefficients(st: &mut Stages, y: &[f64], h: f64) {
    let k = &st.k;
    for i in 0..y.len() {
        let ydiff = st.ynew[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        st.cont[0][i] = y[i];
        st.cont[1][i] = ydiff;
        st.cont[2][i] = bspl;
        st.cont[3][i] = ydiff - h * k[6][i] - bspl;
        st.cont[4][i] =
            h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
}

fn interpolate(st: &Stages, theta: f64) -> Vec<f64> {
    let theta1 = 1.0 - theta;
    let c = &st.cont;
    (0..c[0].len())
        .map(|i| c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i]))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect<R: OdeRhs>(rhs: R, y0: &[f64], t_end: f64, step: f64, tol: f64) -> (Vec<f64>, Vec<Vec<f64>>, OdeStats) {
        let mut ts = Vec::new();
        let mut ys = Vec::new();
        let stats = integrate_sampled(rhs, 0.0, y0, t_end, step, &OdeOptions::with_tol(tol), |t, y| {
            ts.push(t);
            ys.push(y.to_vec());
        })
        .unwrap();
        (ts, ys, stats)
    }

    #[test]
    fn exponential_decay() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            Ok(())
        };
        let (ts, ys, stats) = collect(rhs, &[1.0], 10.0, 0.1, 1e-10);
        assert_eq!(ts.len(), 101);
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "t = {t}: {} vs {}", y[0], (-t).exp());
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_rotation_with_dense_output() {
        // samples far denser than the steps exercise the interpolant
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let (ts, ys, stats) = collect(rhs, &[0.0, 1.0], 50.0, 0.01, 1e-11);
        assert!(stats.accepted < ts.len() / 2, "{stats:?}");
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-8 && (y[1] - t.cos()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn sample_grid_includes_end() {
        let rhs = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
            Ok(())
        };
        let (ts, ys, _) = collect(rhs, &[0.0], 1.05, 0.1, 1e-8);
        assert_eq!(ts.len(), 12);
        assert_eq!(*ts.last().unwrap(), 1.05);
        assert!((ys.last().unwrap()[0] - 1.05).abs() < 1e-12);
    }

    #[test]
    fn tolerance_refinement_reduces_error() {
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * t.cos();
            Ok(())
        };
        let err = |tol: f64| {
            let (_, ys, _) = collect(rhs, &[1.0], 20.0, 20.0, tol);
            (ys.last().unwrap()[0] - 20f64.sin().exp()).abs()
        };
        let (coarse, fine) = (err(1e-6), err(1e-10));
        assert!(fine < coarse * 1e-2, "{coarse:e} {fine:e}");
    }

    #[test]
    fn blow_up_is_an_error() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0];
            Ok(())
        };
        let res = integrate_sampled(rhs, 0.0, &[1.0], 2.0, 0.1, &OdeOptions::default(), |_, _| {});
        assert!(matches!(res, Err(OdeError::StepUnderflow { .. }) | Err(OdeError::NonFinite { .. })), "{res:?}");
    }

    #[test]
    fn rhs_failure_propagates() {
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 0.0;
            if t > 0.5 {
                Err("boom".to_string())
            } else {
                Ok(())
            }
        };
        let res = integrate_sampled(rhs, 0.0, &[1.0], 2.0, 0.1, &OdeOptions::default(), |_, _| {});
        assert!(matches!(res, Err(OdeError::Rhs { .. })));
    }

    #[test]
    fn invalid_arguments() {
        let rhs = |_t: f64, _y: &[f64], _dy: &mut [f64]| Ok(());
        assert!(integrate_sampled(rhs, 1.0, &[0.0], 1.0, 0.1, &OdeOptions::default(), |_, _| {}).is_err());
    }
}
