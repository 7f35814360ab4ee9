use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use serde::Serialize;

use super::RepError;

/// Largest `|det − 1|` accepted for a symplectic 2×2 matrix.
pub const DET_TOLERANCE: f64 = 1e-12;

/// Phase-space vector `v = (p, q)`: `p` shifts, `q` modulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub p: f64,
    pub q: f64,
}

impl PhasePoint {
    pub fn new(p: f64, q: f64) -> Self {
        PhasePoint { p, q }
    }

    pub fn norm(&self) -> f64 {
        self.p.hypot(self.q)
    }

    /// `⟨p₁, q₂⟩ − ⟨q₁, p₂⟩`
    pub fn symplectic_product(&self, other: &PhasePoint) -> f64 {
        self.p * other.q - self.q * other.p
    }
}

impl std::ops::Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.p + o.p, self.q + o.q)
    }
}

impl std::ops::Neg for PhasePoint {
    type Output = PhasePoint;
    fn neg(self) -> PhasePoint {
        PhasePoint::new(-self.p, -self.q)
    }
}

/// `𝔸 = [[A, B], [C, F]]` with `AF − CB = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticMatrix(Matrix2<f64>);

impl SymplecticMatrix {
    pub fn new(a: f64, b: f64, c: f64, f: f64) -> Result<Self, RepError> {
        let det = a * f - c * b;
        if !((det - 1.0).abs() <= DET_TOLERANCE) {
            return Err(RepError::NotSymplectic { det });
        }
        Ok(SymplecticMatrix(Matrix2::new(a, b, c, f)))
    }

    pub fn identity() -> Self {
        SymplecticMatrix(Matrix2::identity())
    }

    /// `[[0, 1], [−1, 0]]`
    pub fn j() -> Self {
        SymplecticMatrix(Matrix2::new(0.0, 1.0, -1.0, 0.0))
    }

    /// `diag(a, 1/a)`
    pub fn dilation(a: f64) -> Result<Self, RepError> {
        if a == 0.0 || !a.is_finite() {
            return Err(RepError::InvalidArguments(format!("dilation factor {a}")));
        }
        Ok(SymplecticMatrix(Matrix2::new(a, 0.0, 0.0, 1.0 / a)))
    }

    /// `[[cos θ, sin θ], [−sin θ, cos θ]]`, the flow of `J` for time `θ`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        SymplecticMatrix(Matrix2::new(c, s, -s, c))
    }

    /// `[[1, 0], [σ, 1]]`
    pub fn shear(sigma: f64) -> Self {
        SymplecticMatrix(Matrix2::new(1.0, 0.0, sigma, 1.0))
    }

    /// Accepts any real 2×2 matrix with unit determinant, rescaling by
    /// `det^{−1/2}` when it is off by roundoff.
    pub fn from_matrix(m: Matrix2<f64>) -> Result<Self, RepError> {
        let det = m.determinant();
        if !(det > 0.0) || (det - 1.0).abs() > 1e-6 {
            return Err(RepError::NotSymplectic { det });
        }
        Ok(SymplecticMatrix(m / det.sqrt()))
    }

    /// `R(θ₁) diag(σ, 1/σ) R(θ₂)` with `ln σ` uniform on `[0, ln max_norm]`
    /// and uniform angles; the operator norm is exactly `σ`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> Self {
        let sigma = (rng.gen::<f64>() * max_norm.max(1.0).ln()).exp();
        let r1 = Self::rotation(rng.gen::<f64>() * 2.0 * PI);
        let r2 = Self::rotation(rng.gen::<f64>() * 2.0 * PI);
        let d = SymplecticMatrix(Matrix2::new(sigma, 0.0, 0.0, 1.0 / sigma));
        r1 * d * r2
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn a(&self) -> f64 {
        self.0[(0, 0)]
    }

    pub fn b(&self) -> f64 {
        self.0[(0, 1)]
    }

    pub fn c(&self) -> f64 {
        self.0[(1, 0)]
    }

    pub fn f(&self) -> f64 {
        self.0[(1, 1)]
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// Operator 2-norm, `≥ 1` for symplectic matrices.
    pub fn norm(&self) -> f64 {
        let m = &self.0;
        let fro2 = m.iter().map(|x| x * x).sum::<f64>();
        let det = self.det();
        ((fro2 + (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    pub fn inverse(&self) -> Self {
        SymplecticMatrix(Matrix2::new(self.f(), -self.b(), -self.c(), self.a()))
    }

    pub fn apply(&self, v: PhasePoint) -> PhasePoint {
        let w = self.0 * Vector2::new(v.p, v.q);
        PhasePoint::new(w[0], w[1])
    }
}

impl Mul for SymplecticMatrix {
    type Output = SymplecticMatrix;
    fn mul(self, rhs: SymplecticMatrix) -> SymplecticMatrix {
        SymplecticMatrix(self.0 * rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_unit_determinant() {
        assert!(SymplecticMatrix::new(1.0, 1.0, 0.0, 1.0).is_ok());
        assert!(matches!(SymplecticMatrix::new(2.0, 0.0, 0.0, 1.0), Err(RepError::NotSymplectic { .. })));
    }

    #[test]
    fn random_matrices_have_the_drawn_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = SymplecticMatrix::random(&mut rng, 5.0);
            assert!((m.det() - 1.0).abs() < 1e-12);
            assert!(m.norm() >= 1.0 - 1e-12 && m.norm() <= 5.0 + 1e-12);
            let prod = m * m.inverse();
            assert!((prod.matrix() - Matrix2::identity()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn norms_of_simple_matrices() {
        assert!((SymplecticMatrix::dilation(4.0).unwrap().norm() - 4.0).abs() < 1e-14);
        assert!((SymplecticMatrix::j().norm() - 1.0).abs() < 1e-14);
        assert!((SymplecticMatrix::rotation(0.3).norm() - 1.0).abs() < 1e-14);
    }
}
