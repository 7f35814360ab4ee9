use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::grid::{sobolev_norm_grid, GridFunction};
use super::symplectic::{PhasePoint, SymplecticMatrix};
use super::RepError;

/// Relative level that delimits the numerical support of a grid function.
const SUPPORT_LEVEL: f64 = 1e-10;

/// Smallest block magnitude either explicit formula accepts as a pivot.
pub const PIVOT_THRESHOLD: f64 = 1e-6;

/// `(ρ(v)u)(x) = e^{iqx + ipq/2} u(x + p)`, the shift taken in Fourier space.
pub fn schrodinger_rep(v: PhasePoint, u: &GridFunction) -> Result<GridFunction, RepError> {
    let grid = u.grid();
    let radius = u.support_radius(SUPPORT_LEVEL);
    if radius + v.p.abs() > grid.half_width() {
        return Err(RepError::OutsideGrid { shift: v.p, radius, half_width: grid.half_width() });
    }
    let mut spectrum = grid.fourier(u.values());
    let band = spectral_radius(&spectrum, grid.dxi());
    let nyquist = PI / grid.dx();
    if band + v.q.abs() > nyquist {
        return Err(RepError::OutsideGrid { shift: v.q, radius: band, half_width: nyquist });
    }
    for (k, c) in spectrum.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, v.p * grid.xi(k));
    }
    let shifted = grid.inverse_fourier(&spectrum);
    let values = grid
        .xs()
        .zip(shifted)
        .map(|(x, c)| c * Complex64::from_polar(1.0, v.q * x + v.p * v.q / 2.0))
        .collect();
    Ok(u.with_values(values))
}

fn spectral_radius(spectrum: &[Complex64], dxi: f64) -> f64 {
    let m = spectrum.len();
    let max = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let cut = SUPPORT_LEVEL * max;
    spectrum
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= cut)
        .map(|(k, _)| if k < m / 2 { k as f64 } else { (m - k) as f64 } * dxi)
        .fold(0.0, f64::max)
}

/// Which explicit formula evaluates `M(𝔸)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaplecticBranch {
    /// Needs `A ≠ 0`: a Fourier multiplier followed by a dilation and a chirp.
    Fourier,
    /// Needs `B ≠ 0`: a chirped integral kernel.
    Kernel,
}

/// The branch [`metaplectic_apply`] picks: [`MetaplecticBranch::Fourier`]
/// when `|A| ≥ |B|`.
pub fn preferred_branch(m: &SymplecticMatrix) -> Result<MetaplecticBranch, RepError> {
    let (a, b) = (m.a().abs(), m.b().abs());
    if a < PIVOT_THRESHOLD && b < PIVOT_THRESHOLD {
        return Err(RepError::Degenerate { a: m.a(), b: m.b() });
    }
    Ok(if a >= b { MetaplecticBranch::Fourier } else { MetaplecticBranch::Kernel })
}

/// `M(𝔸)u`, defined up to a global phase.
pub fn metaplectic_apply(m: &SymplecticMatrix, u: &GridFunction) -> Result<GridFunction, RepError> {
    metaplectic_apply_branch(m, u, preferred_branch(m)?)
}

/// `M(𝔸)u` by a chosen formula. With `𝔸 = [[A, B], [C, F]]`:
///
/// * Fourier: `(2π)⁻¹ A^{−1/2} ∫ e^{iS(ξ,x)} û(ξ) dξ`,
///   `S = −(C/2A) x² + ξx/A + (B/2A) ξ²`, evaluated as the multiplier
///   `e^{i(B/2A)ξ²}`, an inverse transform sampled at `x/A`, and a chirp;
/// * Kernel: `(i/2π)^{1/2} B^{−1/2} ∫ e^{iT(x,y)} u(y) dy`,
///   `T = −(F/2B) x² + xy/B − (A/2B) y²`, evaluated by direct quadrature
///   and set to zero where `x/B` lies beyond the grid's band limit.
///
/// Square roots take the principal branch.
pub fn metaplectic_apply_branch(
    m: &SymplecticMatrix,
    u: &GridFunction,
    branch: MetaplecticBranch,
) -> Result<GridFunction, RepError> {
    let grid = u.grid();
    let (a, b, c, f) = (m.a(), m.b(), m.c(), m.f());
    let values = match branch {
        MetaplecticBranch::Fourier => {
            if a.abs() < PIVOT_THRESHOLD {
                return Err(RepError::Degenerate { a, b });
            }
            let mut spectrum = grid.fourier(u.values());
            for (k, s) in spectrum.iter_mut().enumerate() {
                let xi = grid.xi(k);
                *s *= Complex64::from_polar(1.0, b / (2.0 * a) * xi * xi);
            }
            let evolved = grid.inverse_fourier(&spectrum);
            let coeffs = grid.raw_fft(&evolved);
            let prefactor = Complex64::new(a, 0.0).sqrt().inv();
            grid.xs()
                .map(|x| prefactor * Complex64::from_polar(1.0, -c / (2.0 * a) * x * x) * grid.interpolate(&coeffs, x / a))
                .collect()
        }
        MetaplecticBranch::Kernel => {
            if b.abs() < PIVOT_THRESHOLD {
                return Err(RepError::Degenerate { a, b });
            }
            let dx = grid.dx();
            let chirped: Vec<Complex64> = grid
                .xs()
                .zip(u.values())
                .map(|(y, v)| v * Complex64::from_polar(dx, -a / (2.0 * b) * y * y))
                .collect();
            let prefactor = (Complex64::i() / (2.0 * PI)).sqrt() * Complex64::new(b, 0.0).sqrt().inv();
            let y0 = grid.x(0);
            let nyquist = PI / dx;
            grid.xs()
                .map(|x| {
                    // the discrete sum is periodic in x/B; beyond the band
                    // limit it would return an alias of the low frequencies
                    if (x / b).abs() > nyquist {
                        return Complex64::default();
                    }
                    // Σ_j e^{i x y_j / B} h_j with the phase advanced by recurrence
                    let step = Complex64::from_polar(1.0, x * dx / b);
                    let mut phase = Complex64::from_polar(1.0, x * y0 / b);
                    let mut sum = Complex64::default();
                    for h in &chirped {
                        sum += h * phase;
                        phase *= step;
                    }
                    prefactor * Complex64::from_polar(1.0, -f / (2.0 * b) * x * x) * sum
                })
                .collect()
        }
    };
    Ok(u.with_values(values))
}

/// `max_x |ρ(v₁)ρ(v₂)u − e^{i(p₁q₂ − q₁p₂)/2} ρ(v₁+v₂)u|`
pub fn group_law_defect(v1: PhasePoint, v2: PhasePoint, u: &GridFunction) -> Result<f64, RepError> {
    let lhs = schrodinger_rep(v1, &schrodinger_rep(v2, u)?)?;
    let joint = schrodinger_rep(v1 + v2, u)?;
    let phase = Complex64::from_polar(1.0, v1.symplectic_product(&v2) / 2.0);
    let rhs = u.with_values(joint.values().iter().map(|c| c * phase).collect());
    lhs.max_difference(&rhs)
}

/// `|‖M(𝔸)u‖ − ‖u‖| / ‖u‖`
pub fn unitarity_defect(m: &SymplecticMatrix, u: &GridFunction) -> Result<f64, RepError> {
    let image = metaplectic_apply(m, u)?;
    Ok((image.l2_norm() - u.l2_norm()).abs() / u.l2_norm())
}

/// `L²` distance, modulo a global phase, between `ρ(𝔸v) M(𝔸) u` and
/// `M(𝔸) ρ(v) u`, relative to `‖u‖`.
pub fn verify_conjugation(m: &SymplecticMatrix, v: PhasePoint, u: &GridFunction) -> Result<f64, RepError> {
    let lhs = schrodinger_rep(m.apply(v), &metaplectic_apply(m, u)?)?;
    let rhs = metaplectic_apply(m, &schrodinger_rep(v, u)?)?;
    Ok(lhs.distance_mod_phase(&rhs)? / u.l2_norm())
}

/// Distance, modulo a global phase and relative to `‖u‖`, between the two
/// explicit formulas.
pub fn cross_branch_defect(m: &SymplecticMatrix, u: &GridFunction) -> Result<f64, RepError> {
    let fourier = metaplectic_apply_branch(m, u, MetaplecticBranch::Fourier)?;
    let kernel = metaplectic_apply_branch(m, u, MetaplecticBranch::Kernel)?;
    Ok(fourier.distance_mod_phase(&kernel)? / u.l2_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEquivalenceReport {
    pub s: f64,
    pub matrix_norm: f64,
    pub shift_norm: f64,
    /// `‖ρ(v) M(𝔸) u‖_s` on the grid
    pub value: f64,
    /// `value / ‖𝔸‖^s`, or `value / (‖v‖^s + ‖𝔸‖^s)` when a shift is given
    pub ratio: f64,
    /// Whether the image still decays at the edges of the grid.
    pub resolved: bool,
}

/// `‖M(𝔸)u‖_s / ‖𝔸‖^s`.
pub fn verify_norm_equivalence(m: &SymplecticMatrix, u: &GridFunction, s: f64) -> Result<NormEquivalenceReport, RepError> {
    let image = metaplectic_apply(m, u)?;
    let norm = m.norm();
    let value = sobolev_norm_grid(&image, s);
    Ok(NormEquivalenceReport {
        s,
        matrix_norm: norm,
        shift_norm: 0.0,
        value,
        ratio: value / norm.powf(s),
        resolved: image.is_resolved(),
    })
}

/// `‖ρ(v)M(𝔸)u‖_s / (‖v‖^s + ‖𝔸‖^s)`.
pub fn verify_shifted_norm_equivalence(
    m: &SymplecticMatrix,
    v: PhasePoint,
    u: &GridFunction,
    s: f64,
) -> Result<NormEquivalenceReport, RepError> {
    let image = schrodinger_rep(v, &metaplectic_apply(m, u)?)?;
    let (norm, shift) = (m.norm(), v.norm());
    let value = sobolev_norm_grid(&image, s);
    Ok(NormEquivalenceReport {
        s,
        matrix_norm: norm,
        shift_norm: shift,
        value,
        ratio: value / (shift.powf(s) + norm.powf(s)),
        resolved: image.is_resolved(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::grid::Grid;

    fn gaussian() -> GridFunction {
        GridFunction::gaussian(&Grid::default(), 0.0, 1.0, 0.0)
    }

    #[test]
    fn zero_vector_is_identity() {
        let u = GridFunction::gaussian(&Grid::default(), 0.3, 0.8, 1.1);
        let out = schrodinger_rep(PhasePoint::new(0.0, 0.0), &u).unwrap();
        assert!(out.max_difference(&u).unwrap() < 1e-14);
    }

    #[test]
    fn shift_and_modulation_match_closed_form() {
        let u = gaussian();
        let v = PhasePoint::new(1.5, -0.7);
        let out = schrodinger_rep(v, &u).unwrap();
        let exact = GridFunction::from_fn(u.grid(), |x| {
            Complex64::from_polar((-(x + 1.5f64).powi(2) / 2.0).exp(), -0.7 * x - 1.5 * 0.7 / 2.0)
        });
        assert!(out.max_difference(&exact).unwrap() < 1e-12);
        assert!((out.l2_norm() - u.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn group_law_and_inverse() {
        let u = gaussian();
        let (v1, v2) = (PhasePoint::new(1.2, 0.4), PhasePoint::new(-0.5, 2.0));
        assert!(group_law_defect(v1, v2, &u).unwrap() < 1e-10);
        let back = schrodinger_rep(-v1, &schrodinger_rep(v1, &u).unwrap()).unwrap();
        assert!(back.max_difference(&u).unwrap() < 1e-10);
    }

    #[test]
    fn large_shifts_are_refused() {
        let u = gaussian();
        assert!(matches!(schrodinger_rep(PhasePoint::new(18.0, 0.0), &u), Err(RepError::OutsideGrid { .. })));
        assert!(matches!(schrodinger_rep(PhasePoint::new(0.0, 79.0), &u), Err(RepError::OutsideGrid { .. })));
    }

    #[test]
    fn j_is_a_scaled_fourier_transform() {
        // T(x, y) = xy: M(J)u(x) = (i/2π)^{1/2} ∫ e^{ixy} u(y) dy = (i/2π)^{1/2} û(−x)
        let u = GridFunction::gaussian(&Grid::default(), 0.7, 1.0, 0.5);
        let out = metaplectic_apply(&SymplecticMatrix::j(), &u).unwrap();
        let exact = GridFunction::from_fn(u.grid(), |x| {
            // û(ξ) for e^{−(y−a)²/2} e^{iky} is √(2π) e^{−(ξ−k)²/2} e^{−i(ξ−k)a}
            let xi = -x;
            Complex64::from_polar((2.0 * PI).sqrt() * (-(xi - 0.5f64).powi(2) / 2.0).exp(), -(xi - 0.5) * 0.7)
                / (2.0 * PI).sqrt()
        });
        assert!(out.distance_mod_phase(&exact).unwrap() < 1e-4);
    }

    #[test]
    fn dilation_rescales() {
        let u = GridFunction::gaussian(&Grid::default(), 0.4, 1.0, 0.0);
        let out = metaplectic_apply(&SymplecticMatrix::dilation(2.0).unwrap(), &u).unwrap();
        let exact = GridFunction::from_fn(u.grid(), |x| Complex64::new((-(x / 2.0 - 0.4f64).powi(2) / 2.0).exp() / 2f64.sqrt(), 0.0));
        assert!(out.distance_mod_phase(&exact).unwrap() < 1e-4);
    }

    #[test]
    fn identity_conjugation_is_exact() {
        let u = gaussian();
        let d = verify_conjugation(&SymplecticMatrix::identity(), PhasePoint::new(0.8, -0.3), &u).unwrap();
        assert!(d < 1e-10, "{d:e}");
    }

    #[test]
    fn conjugation_turns_shift_into_modulation() {
        let u = gaussian();
        let d = verify_conjugation(&SymplecticMatrix::j(), PhasePoint::new(1.0, 0.0), &u).unwrap();
        assert!(d < 1e-3, "{d:e}");
        let d = verify_conjugation(&SymplecticMatrix::dilation(2.0).unwrap(), PhasePoint::new(0.5, 0.3), &u).unwrap();
        assert!(d < 1e-3, "{d:e}");
    }

    #[test]
    fn branches_agree_on_a_rotation() {
        let u = GridFunction::gaussian(&Grid::default(), 0.5, 1.3, -0.4);
        let d = cross_branch_defect(&SymplecticMatrix::rotation(0.7), &u).unwrap();
        assert!(d < 1e-3, "{d:e}");
    }

    #[test]
    fn norm_ratio_of_identity_is_the_norm() {
        let u = gaussian();
        let r = verify_norm_equivalence(&SymplecticMatrix::identity(), &u, 1.0).unwrap();
        assert!((r.ratio - sobolev_norm_grid(&u, 1.0)).abs() < 1e-12);
        assert!(r.resolved);
    }
}
