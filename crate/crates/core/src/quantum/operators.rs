use nalgebra::DMatrix;

/// Real symmetric banded matrix on modes `0..=n_max`, stored by lower
/// diagonals: `bands[k][n] = ⟨n+k|M|n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    dim: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth).map(|k| vec![0.0; dim.saturating_sub(k)]).collect();
        SymBand { dim, bands }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// `⟨m|M|n⟩`
    pub fn get(&self, m: usize, n: usize) -> f64 {
        let (lo, k) = if m >= n { (n, m - n) } else { (m, n - m) };
        self.bands.get(k).and_then(|b| b.get(lo)).copied().unwrap_or(0.0)
    }

    pub fn band(&self, k: usize) -> &[f64] {
        &self.bands[k]
    }

    pub fn band_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.bands[k]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |m, n| self.get(m, n))
    }

    /// `self + c · other`, widening the band if needed.
    pub fn add_scaled(&self, c: f64, other: &SymBand) -> SymBand {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let width = self.bandwidth().max(other.bandwidth());
        let mut out = SymBand::zeros(self.dim, width);
        for (k, band) in out.bands.iter_mut().enumerate() {
            for (n, v) in band.iter_mut().enumerate() {
                *v = self.get(n + k, n) + c * other.get(n + k, n);
            }
        }
        out
    }
}

/// Position operator `X = (a + a†)/√2` on modes `0..=n_max`:
/// `⟨n+1|X|n⟩ = √((n+1)/2)`.
pub fn matrix_x(n_max: usize) -> SymBand {
    assert!(n_max >= 1, "need at least two modes");
    let mut m = SymBand::zeros(n_max + 1, 1);
    for (n, v) in m.band_mut(1).iter_mut().enumerate() {
        *v = ((n as f64 + 1.0) / 2.0).sqrt();
    }
    m
}

/// `X²` on modes `0..=n_max`: diagonal `n + 1/2`, second off-diagonal
/// `√((n+1)(n+2))/2`. Exact, unlike the product of two truncated `X`
/// matrices, which is wrong in the last row.
pub fn matrix_x2(n_max: usize) -> SymBand {
    assert!(n_max >= 2, "need at least three modes");
    let mut m = SymBand::zeros(n_max + 1, 2);
    for (n, v) in m.band_mut(0).iter_mut().enumerate() {
        *v = n as f64 + 0.5;
    }
    for (n, v) in m.band_mut(2).iter_mut().enumerate() {
        let n = n as f64;
        *v = ((n + 1.0) * (n + 2.0)).sqrt() / 2.0;
    }
    m
}

/// `D² = 2𝒯 − X²` with `𝒯 = diag(n + 1/2)`.
pub fn matrix_d2(n_max: usize) -> SymBand {
    let x2 = matrix_x2(n_max);
    let mut m = SymBand::zeros(n_max + 1, 2);
    for (n, v) in m.band_mut(0).iter_mut().enumerate() {
        *v = 2.0 * (n as f64 + 0.5) - x2.get(n, n);
    }
    for (n, v) in m.band_mut(2).iter_mut().enumerate() {
        *v = -x2.get(n + 2, n);
    }
    m
}

/// The oscillator Hamiltonian `𝒯 = ½(D² + X²)`, diagonal `n + 1/2`.
pub fn matrix_qho(n_max: usize) -> SymBand {
    let mut m = SymBand::zeros(n_max + 1, 0);
    for (n, v) in m.band_mut(0).iter_mut().enumerate() {
        *v = n as f64 + 0.5;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_matrix_elements() {
        let x = matrix_x(3);
        assert!((x.get(1, 0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(x.get(0, 0), 0.0);
        let dense = x.to_dense();
        for n in 0..3 {
            let expected = ((n as f64 + 1.0) / 2.0).sqrt();
            assert_eq!(dense[(n + 1, n)], expected);
            assert_eq!(dense[(n, n + 1)], expected);
        }
        assert_eq!(dense[(2, 0)], 0.0);
    }

    #[test]
    fn x_squared_matches_product_away_from_the_edge() {
        let n_max = 12;
        let x = matrix_x(n_max).to_dense();
        let prod = &x * &x;
        let x2 = matrix_x2(n_max);
        assert_eq!(x2.get(0, 0), 0.5);
        for m in 0..n_max {
            for n in 0..n_max {
                assert!((prod[(m, n)] - x2.get(m, n)).abs() < 1e-14, "({m},{n})");
            }
        }
        // the last diagonal entry of the truncated product misses ⟨N+1|X|N⟩²
        assert!((prod[(n_max, n_max)] - x2.get(n_max, n_max)).abs() > 1.0);
    }

    #[test]
    fn kinetic_and_potential_sum_to_the_oscillator() {
        let n_max = 20;
        let sum = matrix_d2(n_max).add_scaled(1.0, &matrix_x2(n_max));
        let qho = matrix_qho(n_max);
        for m in 0..=n_max {
            for n in 0..=n_max {
                assert_eq!(0.5 * sum.get(m, n), qho.get(m, n));
            }
        }
    }
}
