//! One-dimensional quadrature: adaptive Simpson, adaptive Gauss–Kronrod
//! (7/15), and a cumulative integral with cached breakpoints for integrals
//! that are queried at many increasing upper limits.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integrand shared across threads.
pub type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] (estimated error {error:e})")]
    NoConvergence { a: f64, b: f64, error: f64 },
    #[error("integrand is not finite near t = {t}")]
    NonFinite { t: f64 },
    #[error("upper limit {t} lies before the integration origin {origin}")]
    BeforeOrigin { t: f64, origin: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMethod {
    AdaptiveSimpson,
    GaussKronrod,
}

impl QuadMethod {
    pub fn name(self) -> &'static str {
        match self {
            QuadMethod::AdaptiveSimpson => "adaptive_simpson",
            QuadMethod::GaussKronrod => "gauss_kronrod_15",
        }
    }
}

/// Method plus tolerance. The tolerance is relative to the estimate of
/// `∫|f|` over the interval, which for a log-integral such as `ln H_f` is an
/// absolute bound on the logarithm and therefore a relative bound on `H_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub method: QuadMethod,
    pub tol: f64,
    pub max_depth: usize,
}

impl QuadSpec {
    pub fn simpson(tol: f64) -> Self {
        QuadSpec { method: QuadMethod::AdaptiveSimpson, tol, max_depth: 48 }
    }

    pub fn kronrod(tol: f64) -> Self {
        QuadSpec { method: QuadMethod::GaussKronrod, tol, max_depth: 48 }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        QuadSpec { tol, ..self }
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::simpson(1e-10)
    }
}

/// Smallest tolerance the rules are asked to reach; anything below is lost
/// in roundoff.
const TOL_FLOOR: f64 = 1e-14;

pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    spec: QuadSpec,
) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, spec).map(|v| -v);
    }
    let value = match spec.method {
        QuadMethod::AdaptiveSimpson => simpson(f, a, b, spec)?,
        QuadMethod::GaussKronrod => kronrod(f, a, b, spec)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(QuadError::NonFinite { t: 0.5 * (a + b) })
    }
}

// ---------------------------------------------------------------------------
// adaptive Simpson

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn checked<F: Fn(f64) -> f64 + ?Sized>(f: &F, t: f64) -> Result<f64, QuadError> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadError::NonFinite { t })
    }
}

fn simpson<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    spec: QuadSpec,
) -> Result<f64, QuadError> {
    // Four initial panels, so that a single parabola cannot miss a whole
    // oscillation of the integrand.
    const PANELS: usize = 4;
    let h = (b - a) / PANELS as f64;
    let mut nodes = [0.0; 2 * PANELS + 1];
    for (i, node) in nodes.iter_mut().enumerate() {
        let t = if i == 2 * PANELS { b } else { a + 0.5 * h * i as f64 };
        *node = checked(f, t)?;
    }
    let resabs: f64 = (0..PANELS)
        .map(|p| {
            simpson_rule(0.0, h, nodes[2 * p].abs(), nodes[2 * p + 1].abs(), nodes[2 * p + 2].abs())
        })
        .sum();
    if resabs == 0.0 {
        return Ok(0.0);
    }
    let eps = spec.tol.max(TOL_FLOOR) * resabs / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let pa = a + h * p as f64;
        let pb = if p + 1 == PANELS { b } else { a + h * (p + 1) as f64 };
        let (fa, fm, fb) = (nodes[2 * p], nodes[2 * p + 1], nodes[2 * p + 2]);
        let panel = Panel { a: pa, b: pb, fa, fm, fb, whole: simpson_rule(pa, pb, fa, fm, fb) };
        total += simpson_recurse(f, panel, eps, spec.max_depth)?;
    }
    Ok(total)
}

fn simpson_recurse<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    p: Panel,
    eps: f64,
    depth: usize,
) -> Result<f64, QuadError> {
    let m = 0.5 * (p.a + p.b);
    let lm = checked(f, 0.5 * (p.a + m))?;
    let rm = checked(f, 0.5 * (m + p.b))?;
    let left = simpson_rule(p.a, m, p.fa, lm, p.fm);
    let right = simpson_rule(m, p.b, p.fm, rm, p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if m <= p.a || m >= p.b {
        // panel at roundoff width: nothing left to resolve
        return Ok(left + right);
    }
    if depth == 0 {
        return Err(QuadError::NoConvergence { a: p.a, b: p.b, error: delta.abs() / 15.0 });
    }
    let l = Panel { a: p.a, b: m, fa: p.fa, fm: lm, fb: p.fm, whole: left };
    let r = Panel { a: m, b: p.b, fa: p.fm, fm: rm, fb: p.fb, whole: right };
    Ok(simpson_recurse(f, l, 0.5 * eps, depth - 1)? + simpson_recurse(f, r, 0.5 * eps, depth - 1)?)
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod 7/15

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct KronrodPiece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

fn kronrod_piece<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
) -> Result<KronrodPiece, QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = checked(f, c)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = fc.abs() * WGK[7];
    let mut samples = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = checked(f, c - dx)?;
        let f2 = checked(f, c + dx)?;
        samples[j] = (f1, f2);
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((samples[j].0 - mean).abs() + (samples[j].1 - mean).abs());
    }
    let value = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut error = ((resk - resg) * h).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(KronrodPiece { a, b, value, error, resabs })
}

fn kronrod<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    spec: QuadSpec,
) -> Result<f64, QuadError> {
    let first = kronrod_piece(f, a, b)?;
    let mut pieces = vec![first];
    let max_pieces = 4 * spec.max_depth.max(1) * 8;
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let resabs: f64 = pieces.iter().map(|p| p.resabs).sum();
        let target = spec.tol.max(TOL_FLOOR) * resabs;
        if error <= target || resabs == 0.0 {
            return Ok(value);
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one piece");
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // the worst piece is at roundoff width; the integrand is noisier
            // than the tolerance and further splitting cannot help
            return Ok(value);
        }
        if pieces.len() >= max_pieces {
            return Err(QuadError::NoConvergence { a, b, error });
        }
        pieces.push(kronrod_piece(f, p.a, m)?);
        pieces.push(kronrod_piece(f, m, p.b)?);
    }
}

// ---------------------------------------------------------------------------
// cumulative integral

/// `t ↦ ∫_{origin}^t g` with the integral cached at the breakpoints
/// `origin + k·spacing`. A query costs one partial-interval quadrature once
/// the breakpoints up to `t` are filled, so sweeping increasing `t` is linear
/// in the horizon.
///
/// The cache is behind a mutex; every breakpoint value is a deterministic
/// function of the integrand and the spec, so concurrent callers observe
/// identical results.
pub struct CumulativeIntegral {
    origin: f64,
    spacing: f64,
    spec: QuadSpec,
    integrand: Integrand,
    cache: Mutex<Vec<f64>>,
}

impl std::fmt::Debug for CumulativeIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CumulativeIntegral")
            .field("origin", &self.origin)
            .field("spacing", &self.spacing)
            .field("spec", &self.spec)
            .field("cached_breakpoints", &self.cached_breakpoints())
            .finish()
    }
}

impl CumulativeIntegral {
    pub fn new(origin: f64, spacing: f64, spec: QuadSpec, integrand: Integrand) -> Self {
        assert!(spacing > 0.0, "breakpoint spacing must be positive");
        CumulativeIntegral { origin, spacing, spec, integrand, cache: Mutex::new(vec![0.0]) }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spec(&self) -> QuadSpec {
        self.spec
    }

    pub fn cached_breakpoints(&self) -> usize {
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    fn breakpoint(&self, k: usize) -> f64 {
        self.origin + self.spacing * k as f64
    }

    fn integrate_piece(&self, a: f64, b: f64) -> Result<f64, QuadError> {
        let g = &*self.integrand;
        integrate(g, a, b, self.spec)
    }

    /// Integral from the origin to `t`.
    pub fn value_at(&self, t: f64) -> Result<f64, QuadError> {
        if t < self.origin {
            return Err(QuadError::BeforeOrigin { t, origin: self.origin });
        }
        if !t.is_finite() {
            return Err(QuadError::NonFinite { t });
        }
        let k = ((t - self.origin) / self.spacing).floor() as usize;
        let base = {
            let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            while cache.len() <= k {
                let i = cache.len() - 1;
                let piece = self.integrate_piece(self.breakpoint(i), self.breakpoint(i + 1))?;
                let next = cache[i] + piece;
                cache.push(next);
            }
            cache[k]
        };
        let bk = self.breakpoint(k);
        if t > bk {
            Ok(base + self.integrate_piece(bk, t)?)
        } else {
            Ok(base)
        }
    }

    /// Same value computed without the cache, one quadrature per breakpoint
    /// interval from the origin.
    pub fn value_from_scratch(&self, t: f64) -> Result<f64, QuadError> {
        if t < self.origin {
            return Err(QuadError::BeforeOrigin { t, origin: self.origin });
        }
        let k = ((t - self.origin) / self.spacing).floor() as usize;
        let mut acc = 0.0;
        for i in 0..k {
            acc += self.integrate_piece(self.breakpoint(i), self.breakpoint(i + 1))?;
        }
        let bk = self.breakpoint(k);
        if t > bk {
            acc += self.integrate_piece(bk, t)?;
        }
        Ok(acc)
    }
}
