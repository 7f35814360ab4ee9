use num_complex::Complex64;
use serde::Serialize;

use super::QuantumError;

/// Fraction of the modes counted as tail: `n > TAIL_START · N`.
pub const TAIL_START: f64 = 0.9;

/// Expansion `u = Σ c_n h_n` in the Hermite functions `h_n`, `n = 0..=N`,
/// the eigenfunctions of the oscillator with eigenvalues `n + 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteState {
    coeffs: Vec<Complex64>,
    time: f64,
}

impl HermiteState {
    pub fn from_coeffs(coeffs: Vec<Complex64>, time: f64) -> Result<Self, QuantumError> {
        if coeffs.len() < 3 {
            return Err(QuantumError::InvalidArguments("need a truncation N ≥ 2".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(QuantumError::InvalidArguments("coefficients must be finite".into()));
        }
        Ok(HermiteState { coeffs, time })
    }

    /// The basis vector `e_n` with truncation `n_max`.
    pub fn basis(n: usize, n_max: usize, time: f64) -> Result<Self, QuantumError> {
        if n > n_max {
            return Err(QuantumError::InvalidArguments(format!("mode {n} exceeds truncation {n_max}")));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self::from_coeffs(coeffs, time)
    }

    pub fn ground(n_max: usize, time: f64) -> Result<Self, QuantumError> {
        Self::basis(0, n_max, time)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Truncation `N`; the state holds `N + 1` coefficients.
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `Σ_{n > 0.9 N} |c_n|²`
    pub fn tail_mass(&self) -> f64 {
        tail_mass(&self.coeffs)
    }

    /// Zero-pads to truncation `n_max`.
    pub fn padded(&self, n_max: usize) -> Result<Self, QuantumError> {
        if n_max < self.truncation() {
            return Err(QuantumError::InvalidArguments(format!(
                "cannot pad truncation {} down to {n_max}",
                self.truncation()
            )));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n_max + 1, Complex64::new(0.0, 0.0));
        Ok(HermiteState { coeffs, time: self.time })
    }

    /// `min_θ ‖u − e^{iθ} v‖`; states of different truncation are compared
    /// after zero-padding.
    pub fn distance_mod_phase(&self, other: &HermiteState) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        let at = |v: &[Complex64], n: usize| v.get(n).copied().unwrap_or_default();
        let overlap: Complex64 = (0..len).map(|n| at(&other.coeffs, n).conj() * at(&self.coeffs, n)).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        (0..len)
            .map(|n| (at(&self.coeffs, n) - phase * at(&other.coeffs, n)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn tail_mass(coeffs: &[Complex64]) -> f64 {
    let n_max = coeffs.len() - 1;
    let start = (TAIL_START * n_max as f64).floor() as usize + 1;
    coeffs.iter().skip(start).map(|c| c.norm_sqr()).sum()
}

pub(crate) fn sobolev_norm_of(coeffs: &[Complex64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| ((n as f64 + 0.5).powf(s) + 1.0) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖u‖_s = (‖𝒯^{s/2} u‖² + ‖u‖²)^{1/2} = (Σ ((n + 1/2)^s + 1) |c_n|²)^{1/2}`.
pub fn sobolev_norm(state: &HermiteState, s: f64) -> f64 {
    sobolev_norm_of(&state.coeffs, s)
}

/// A Sobolev norm together with whether the truncation resolved the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckedNorm {
    pub value: f64,
    pub tail_mass: f64,
    pub trusted: bool,
}

pub fn sobolev_norm_checked(state: &HermiteState, s: f64, tail_threshold: f64) -> CheckedNorm {
    let tail = state.tail_mass();
    CheckedNorm { value: sobolev_norm(state, s), tail_mass: tail, trusted: tail <= tail_threshold }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_norms_of_eigenstates() {
        let e0 = HermiteState::ground(8, 0.0).unwrap();
        assert!((sobolev_norm(&e0, 2.0) - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((sobolev_norm(&e0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        let e1 = HermiteState::basis(1, 8, 0.0).unwrap();
        assert!((sobolev_norm(&e1, 1.0) - 2.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_order_norm_is_scaled_l2() {
        let coeffs = (0..20).map(|n| Complex64::new((n as f64).cos(), 0.3 * n as f64 / 20.0)).collect();
        let u = HermiteState::from_coeffs(coeffs, 0.0).unwrap();
        assert!((sobolev_norm(&u, 0.0) - 2f64.sqrt() * u.l2_norm()).abs() < 1e-13);
    }

    #[test]
    fn tail_counts_top_tenth() {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 101];
        coeffs[90] = Complex64::new(1.0, 0.0);
        coeffs[91] = Complex64::new(0.0, 2.0);
        let u = HermiteState::from_coeffs(coeffs, 0.0).unwrap();
        assert_eq!(u.tail_mass(), 4.0);
        let padded = u.padded(200).unwrap();
        assert_eq!(padded.truncation(), 200);
        assert_eq!(padded.tail_mass(), 0.0);
        assert_eq!(padded.l2_norm_sq(), 5.0);
        assert!(!sobolev_norm_checked(&u, 1.0, 1e-10).trusted);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let u = HermiteState::from_coeffs(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::default()], 0.0)
            .unwrap();
        let rotated: Vec<_> = u.coeffs().iter().map(|c| c * Complex64::from_polar(1.0, 1.1)).collect();
        let v = HermiteState::from_coeffs(rotated, 0.0).unwrap();
        assert!(u.distance_mod_phase(&v) < 1e-14);
        let w = HermiteState::basis(2, 2, 0.0).unwrap();
        assert!((u.distance_mod_phase(&w) - 2f64.sqrt()).abs() < 1e-15);
    }
}
