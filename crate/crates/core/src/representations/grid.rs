use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::RepError;

/// Uniform periodic grid `x_j = −L + j·(2L/M)`, `j = 0..M`, with its
/// Fourier dual `ξ_k = k·π/L` (signed `k`, FFT order).
#[derive(Clone)]
pub struct Grid {
    half_width: f64,
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("half_width", &self.half_width).field("points", &self.points).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_width == other.half_width && self.points == other.points
    }
}

pub const DEFAULT_HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_POINTS: usize = 1024;

impl Default for Grid {
    fn default() -> Self {
        Grid::new(DEFAULT_HALF_WIDTH, DEFAULT_POINTS).expect("default grid is valid")
    }
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self, RepError> {
        if !(half_width > 0.0 && half_width.is_finite()) || points < 8 || points % 2 != 0 {
            return Err(RepError::InvalidArguments(format!(
                "need L > 0 and an even M ≥ 8, got L = {half_width}, M = {points}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            half_width,
            points,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    /// Points needed to resolve the image of a Gaussian under a symplectic
    /// matrix of norm `norm`: `M ≥ 16·‖𝔸‖·L`, rounded up to a power of two.
    pub fn recommended_points(norm: f64, half_width: f64) -> usize {
        ((16.0 * norm.max(1.0) * half_width).ceil() as usize).next_power_of_two()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|j| self.x(j))
    }

    /// Signed frequency index of FFT slot `k`.
    fn signed(&self, k: usize) -> f64 {
        if k < self.points / 2 {
            k as f64
        } else {
            k as f64 - self.points as f64
        }
    }

    /// `ξ_k` in FFT order.
    pub fn xi(&self, k: usize) -> f64 {
        self.signed(k) * self.dxi()
    }

    /// `û(ξ_k) = ∫ e^{−ixξ_k} u(x) dx` by the trapezoid rule, in FFT order.
    pub fn fourier(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let dx = self.dx();
        buf.iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(dx, self.xi(k) * self.half_width))
            .collect()
    }

    /// Inverse of [`Grid::fourier`].
    pub fn inverse_fourier(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let dx = self.dx();
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0 / dx, -self.xi(k) * self.half_width))
            .collect();
        self.inverse.process(&mut buf);
        let m = self.points as f64;
        buf.iter_mut().for_each(|c| *c /= m);
        buf
    }

    /// Trigonometric interpolant of grid values at an arbitrary `y`; zero
    /// outside `[−L, L)`, where the periodic extension has no meaning.
    pub fn interpolate(&self, coeffs: &[Complex64], y: f64) -> Complex64 {
        if y < -self.half_width || y >= self.half_width {
            return Complex64::default();
        }
        // coeffs are the raw FFT of the samples; sum over signed frequencies
        let w = Complex64::from_polar(1.0, self.dxi() * (y + self.half_width));
        let half = self.points / 2;
        let mut pos = Complex64::new(1.0, 0.0);
        let mut sum = coeffs[0];
        for k in 1..half {
            pos *= w;
            sum += coeffs[k] * pos + coeffs[self.points - k] * pos.conj();
        }
        // the Nyquist slot, split evenly between ±π/dx
        pos *= w;
        sum += coeffs[half] * pos.re;
        sum / self.points as f64
    }

    pub(crate) fn raw_fft(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        buf
    }
}

/// Fraction of points on each side checked by the boundary-decay test.
pub const BOUNDARY_FRACTION: f64 = 0.05;
/// Largest allowed boundary value relative to the maximum.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self, RepError> {
        if values.len() != grid.points() {
            return Err(RepError::InvalidArguments(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.points()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.xs().map(f).collect();
        GridFunction { grid: grid.clone(), values }
    }

    /// `e^{−(x−x₀)²/(2w²)} e^{i k₀ x}`
    pub fn gaussian(grid: &Grid, center: f64, width: f64, momentum: f64) -> Self {
        Self::from_fn(grid, |x| Complex64::from_polar((-(x - center).powi(2) / (2.0 * width * width)).exp(), momentum * x))
    }

    /// The Hermite function `h_n`, normalised in `L²`.
    pub fn hermite(grid: &Grid, n: usize) -> Self {
        Self::from_fn(grid, |x| Complex64::new(hermite_function(n, x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn with_values(&self, values: Vec<Complex64>) -> Self {
        GridFunction { grid: self.grid.clone(), values }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `‖|x|^s u‖`
    pub fn position_moment(&self, s: f64) -> f64 {
        let dx = self.grid.dx();
        let sum: f64 = self.grid.xs().zip(&self.values).map(|(x, c)| x.abs().powf(2.0 * s) * c.norm_sqr()).sum();
        (dx * sum).sqrt()
    }

    /// `‖|ξ|^s û‖ / √(2π)`, so that `s = 0` gives the `L²` norm.
    pub fn momentum_moment(&self, s: f64) -> f64 {
        let spectrum = self.grid.fourier(&self.values);
        let sum: f64 = spectrum
            .iter()
            .enumerate()
            .map(|(k, c)| self.grid.xi(k).abs().powf(2.0 * s) * c.norm_sqr())
            .sum();
        (self.grid.dxi() * sum / (2.0 * PI)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|u|` on the outer 5% of points on either side, relative to
    /// the maximum.
    pub fn boundary_ratio(&self) -> f64 {
        let m = self.values.len();
        let edge = ((BOUNDARY_FRACTION * m as f64).ceil() as usize).max(1);
        let outer = self.values[..edge].iter().chain(&self.values[m - edge..]).map(|c| c.norm()).fold(0.0, f64::max);
        let max = self.max_abs();
        if max == 0.0 {
            0.0
        } else {
            outer / max
        }
    }

    /// Whether the function has decayed at the edges of the domain.
    pub fn is_resolved(&self) -> bool {
        self.boundary_ratio() < BOUNDARY_TOLERANCE
    }

    /// Radius outside of which `|u| < rel · max|u|`.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let cut = rel * self.max_abs();
        self.grid.xs().zip(&self.values).filter(|(_, c)| c.norm() >= cut).map(|(x, _)| x.abs()).fold(0.0, f64::max)
    }

    /// `⟨h_n, u⟩` for `n = 0..=n_max`.
    pub fn hermite_coefficients(&self, n_max: usize) -> Vec<Complex64> {
        let dx = self.grid.dx();
        let mut out = vec![Complex64::default(); n_max + 1];
        for (x, c) in self.grid.xs().zip(&self.values) {
            for_each_hermite(n_max, x, |n, h| out[n] += c * (h * dx));
        }
        out
    }

    /// `min_θ ‖u − e^{iθ} v‖` in `L²`.
    pub fn distance_mod_phase(&self, other: &GridFunction) -> Result<f64, RepError> {
        if self.grid != other.grid {
            return Err(RepError::GridMismatch);
        }
        let overlap: Complex64 = other.values.iter().zip(&self.values).map(|(v, u)| v.conj() * u).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        let sum: f64 = self.values.iter().zip(&other.values).map(|(u, v)| (u - phase * v).norm_sqr()).sum();
        Ok((self.grid.dx() * sum).sqrt())
    }

    /// `max_j |u_j − v_j|`, no phase alignment.
    pub fn max_difference(&self, other: &GridFunction) -> Result<f64, RepError> {
        if self.grid != other.grid {
            return Err(RepError::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max))
    }
}

/// Calls `visit(n, h_n(x))` for `n = 0..=n_max` via the three-term
/// recurrence, which is stable for the normalised functions.
fn for_each_hermite(n_max: usize, x: f64, mut visit: impl FnMut(usize, f64)) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-x * x / 2.0).exp();
    visit(0, cur);
    for n in 0..n_max {
        let n = n as f64;
        let next = (2.0 / (n + 1.0)).sqrt() * x * cur - (n / (n + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        visit(n as usize + 1, cur);
    }
}

/// The normalised Hermite function `h_n(x)`.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut out = 0.0;
    for_each_hermite(n, x, |k, h| {
        if k == n {
            out = h;
        }
    });
    out
}

/// `‖u‖ + ‖|x|^s u‖ + ‖|ξ|^s û‖/√(2π)`, an equivalent form of the Sobolev
/// norm. With the `1/√(2π)` the Fourier term is Plancherel-normalised, so
/// `s = 0` gives three times the `L²` norm.
pub fn sobolev_norm_grid(u: &GridFunction, s: f64) -> f64 {
    u.l2_norm() + u.position_moment(s) + u.momentum_moment(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_of_gaussian() {
        let grid = Grid::default();
        let u = GridFunction::gaussian(&grid, 0.0, 1.0, 0.0);
        let spec = grid.fourier(u.values());
        for k in [0usize, 5, 40, grid.points() - 7] {
            let xi = grid.xi(k);
            let exact = (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp();
            assert!((spec[k] - exact).norm() < 1e-12, "{k}");
        }
        let back = grid.inverse_fourier(&spec);
        assert!(u.values().iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    #[test]
    fn interpolation_reproduces_smooth_functions() {
        let grid = Grid::new(10.0, 256).unwrap();
        let u = GridFunction::gaussian(&grid, 0.5, 1.2, 0.7);
        let coeffs = grid.raw_fft(u.values());
        for y in [-3.31, 0.0, 0.123, 2.9] {
            let exact = Complex64::from_polar((-(y - 0.5f64).powi(2) / 2.88).exp(), 0.7 * y);
            assert!((grid.interpolate(&coeffs, y) - exact).norm() < 1e-12, "{y}");
        }
        assert_eq!(grid.interpolate(&coeffs, 11.0), Complex64::default());
    }

    #[test]
    fn gaussian_norms() {
        let grid = Grid::default();
        let u = GridFunction::gaussian(&grid, 0.0, 1.0, 0.0);
        let l2 = PI.powf(0.25);
        assert!((u.l2_norm() / l2 - 1.0).abs() < 1e-12);
        assert!((sobolev_norm_grid(&u, 0.0) / (3.0 * l2) - 1.0).abs() < 1e-6);
        // ∫ x⁴ e^{−x²} = 3√π/4, the same in momentum after normalisation
        let second = (3.0 * PI.sqrt() / 4.0).sqrt();
        assert!((sobolev_norm_grid(&u, 2.0) / (l2 + 2.0 * second) - 1.0).abs() < 1e-4);
        assert!(u.is_resolved());
        assert!(!GridFunction::gaussian(&grid, 17.0, 1.0, 0.0).is_resolved());
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let grid = Grid::default();
        for n in [0usize, 1, 5, 20] {
            let coeffs = GridFunction::hermite(&grid, n).hermite_coefficients(25);
            for (m, c) in coeffs.iter().enumerate() {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((c.re - expected).abs() < 1e-12 && c.im.abs() < 1e-12, "({n},{m}) {c}");
            }
        }
        assert!((hermite_function(1, 0.7) - 2f64.sqrt() * 0.7 * PI.powf(-0.25) * (-0.245f64).exp()).abs() < 1e-15);
    }
}
