use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::{Grid, GridFunction};
use super::operators::{
    cross_branch_defect, group_law_defect, schrodinger_rep, unitarity_defect, verify_conjugation,
    verify_norm_equivalence, verify_shifted_norm_equivalence,
};
use super::symplectic::{PhasePoint, SymplecticMatrix};
use super::RepError;

/// Settings of the randomized identity checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random matrices drawn for the unitarity, conjugation and norm checks.
    pub samples: usize,
    /// Largest operator norm of a drawn matrix.
    pub max_norm: f64,
    /// Largest norm of a drawn phase-space vector.
    pub max_shift: f64,
    /// Sobolev order of the norm-equivalence ratios.
    pub s: f64,
    pub half_width: f64,
    pub points: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        // a norm-5 matrix widens the squeezed test function to width ≈ 7,
        // which stays above the shift margin out to |x| ≈ 50; shifts then add
        // up to 15 in position and in frequency
        SuiteOptions { seed: 0, samples: 50, max_norm: 5.0, max_shift: 3.0, s: 1.0, half_width: 75.0, points: 4096 }
    }
}

/// Smallest and largest value seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub min: f64,
    pub max: f64,
}

impl Band {
    fn empty() -> Self {
        Band { min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    /// Whether `self` lies inside `outer`.
    pub fn within(&self, outer: &Band) -> bool {
        outer.min <= self.min && self.max <= outer.max
    }
}

pub const GROUP_LAW_LIMIT: f64 = 1e-6;
pub const ISOMETRY_LIMIT: f64 = 1e-8;
pub const UNITARITY_LIMIT: f64 = 1e-4;
pub const CONJUGATION_LIMIT: f64 = 1e-3;
pub const CROSS_BRANCH_LIMIT: f64 = 1e-3;

/// Range of `‖M(𝔸)u‖₁ / ‖𝔸‖` for the standard Gaussian `u` over
/// `1 ≤ ‖𝔸‖ ≤ max_norm`.
///
/// The image is a Gaussian whose position and frequency variances are the
/// diagonal `d₁, d₂` of `𝔸𝔸ᵀ/2`, so the ratio is
/// `π^{1/4}(1 + (√d₁ + √d₂)/√2)/σ` with `σ = ‖𝔸‖`. Since `d₁ + d₂ = σ² + σ⁻²`
/// and `d₁d₂ ≥ det 𝔸𝔸ᵀ = 1`, `(√d₁ + √d₂)²` lies in
/// `[σ² + σ⁻² + 2, 2(σ² + σ⁻²)]`; both ends decrease in `σ`.
pub fn gaussian_ratio_envelope(max_norm: f64) -> Band {
    let root = std::f64::consts::PI.powf(0.25);
    let sigma = max_norm.max(1.0);
    Band {
        min: root * (1.0 + (sigma + 1.0 / sigma) / std::f64::consts::SQRT_2) / sigma,
        max: root * (1.0 + std::f64::consts::SQRT_2),
    }
}

/// Largest defects and observed ratio bands of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    /// `max |ρ(v₁)ρ(v₂)u − e^{iσ/2}ρ(v₁+v₂)u|`
    pub group_law: f64,
    /// `max |ρ(v)ρ(−v)u − u|`
    pub inverse: f64,
    /// `max |‖ρ(v)u‖ − ‖u‖| / ‖u‖`
    pub isometry: f64,
    pub unitarity: f64,
    pub conjugation: f64,
    pub cross_branch: f64,
    /// Matrices with both `|A|` and `|B|` above `0.5`.
    pub cross_branch_cases: usize,
    /// `‖M(𝔸)u‖_s / ‖𝔸‖^s`
    pub norm_ratio: Band,
    /// `‖ρ(v)M(𝔸)u‖_s / (‖v‖^s + ‖𝔸‖^s)`
    pub shifted_ratio: Band,
    /// Images that reached the grid boundary.
    pub unresolved: usize,
    /// [`gaussian_ratio_envelope`] when `s = 1`.
    pub norm_envelope: Option<Band>,
}

impl SuiteReport {
    /// Every defect within its limit, every image resolved, and the norm
    /// ratios inside the closed-form envelope where one is known.
    pub fn passed(&self) -> bool {
        self.group_law <= GROUP_LAW_LIMIT
            && self.inverse <= GROUP_LAW_LIMIT
            && self.isometry <= ISOMETRY_LIMIT
            && self.unitarity <= UNITARITY_LIMIT
            && self.conjugation <= CONJUGATION_LIMIT
            && self.cross_branch <= CROSS_BRANCH_LIMIT
            && self.unresolved == 0
            && self.norm_envelope.map_or(true, |env| self.norm_ratio.within(&env))
    }
}

fn random_shift<R: Rng + ?Sized>(rng: &mut R, max: f64) -> PhasePoint {
    let r = max * rng.gen::<f64>().sqrt();
    let (s, c) = (rng.gen::<f64>() * std::f64::consts::TAU).sin_cos();
    PhasePoint::new(r * c, r * s)
}

/// The fixed test functions: the standard Gaussian, a displaced boosted
/// one and a squeezed one.
pub fn gaussian_test_set(grid: &Grid) -> Vec<GridFunction> {
    vec![
        GridFunction::gaussian(grid, 0.0, 1.0, 0.0),
        GridFunction::gaussian(grid, 0.8, 1.0, -0.6),
        GridFunction::gaussian(grid, -0.3, 0.7, 0.4),
    ]
}

/// Draws random matrices and phase-space vectors from `opts.seed` and
/// records the worst defect of every identity.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport, RepError> {
    let grid = Grid::new(opts.half_width, opts.points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tests = gaussian_test_set(&grid);
    let base = &tests[0];
    let mut report = SuiteReport {
        options: opts.clone(),
        group_law: 0.0,
        inverse: 0.0,
        isometry: 0.0,
        unitarity: 0.0,
        conjugation: 0.0,
        cross_branch: 0.0,
        cross_branch_cases: 0,
        norm_ratio: Band::empty(),
        shifted_ratio: Band::empty(),
        unresolved: 0,
        norm_envelope: (opts.s == 1.0).then(|| gaussian_ratio_envelope(opts.max_norm)),
    };

    for u in &tests {
        for _ in 0..opts.samples.div_ceil(tests.len()) {
            let (v1, v2) = (random_shift(&mut rng, opts.max_shift), random_shift(&mut rng, opts.max_shift));
            report.group_law = report.group_law.max(group_law_defect(v1, v2, u)?);
            let back = schrodinger_rep(-v1, &schrodinger_rep(v1, u)?)?;
            report.inverse = report.inverse.max(back.max_difference(u)?);
            let moved = schrodinger_rep(v1, u)?;
            report.isometry = report.isometry.max((moved.l2_norm() - u.l2_norm()).abs() / u.l2_norm());
        }
    }

    for i in 0..opts.samples {
        let m = SymplecticMatrix::random(&mut rng, opts.max_norm);
        let v = random_shift(&mut rng, opts.max_shift);
        let u = &tests[i % tests.len()];
        report.unitarity = report.unitarity.max(unitarity_defect(&m, u)?);
        report.conjugation = report.conjugation.max(verify_conjugation(&m, v, u)?);
        if m.a().abs() > 0.5 && m.b().abs() > 0.5 {
            report.cross_branch = report.cross_branch.max(cross_branch_defect(&m, u)?);
            report.cross_branch_cases += 1;
        }
        let plain = verify_norm_equivalence(&m, base, opts.s)?;
        let shifted = verify_shifted_norm_equivalence(&m, v, base, opts.s)?;
        report.norm_ratio.push(plain.ratio);
        report.shifted_ratio.push(shifted.ratio);
        report.unresolved += usize::from(!plain.resolved) + usize::from(!shifted.resolved);
    }
    Ok(report)
}
