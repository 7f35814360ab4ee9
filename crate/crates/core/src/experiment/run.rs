use nalgebra::DVector;
use serde::Serialize;

use super::checks::{check_rate, RateCheck};
use super::{ExperimentError, Scenario};
use crate::classical::{integrate_flow, AffineSystemSpec, FlowOptions, FlowResult};
use crate::correspondence::{envelope_band, interpolate_at, ratio_series, BandSummary, Envelope, RatioSeries};
use crate::growth_rates::RateFamily;
use crate::perturbation::build_phi;
use crate::quantum::{evolve, EvolveOptions, HermiteState, QuantumHamiltonianSpec, QuantumTrajectory, TruncationGrowth};

/// Largest measured/predicted drift accepted over the window.
pub const DRIFT_LIMIT: f64 = 2.0;
/// Largest spread of a growth band.
pub const GROWTH_BAND_LIMIT: f64 = 10.0;
/// Largest spread of the classical forced band `‖z‖/(t − t0)`.
pub const FORCED_CLASSICAL_LIMIT: f64 = 5.0;
/// Largest deviation from constancy of the unperturbed ratio.
pub const BASELINE_TOLERANCE: f64 = 1e-6;
/// Largest `L²` drift per unit time.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// A named pass/fail check. `bound` is the largest accepted value; a
/// missing bound only requires a finite value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: Option<f64>,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Verdict { name: name.into(), passed: value <= bound, value, bound: Some(bound) }
    }

    pub fn finite(name: impl Into<String>, value: f64) -> Self {
        Verdict { name: name.into(), passed: value.is_finite(), value, bound: None }
    }
}

/// Which growth law a scenario is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthLaw {
    /// Constant rate without forcing: the ratio must be constant.
    Baseline,
    /// `‖u‖_s ≍ f^{s/2}`
    Homogeneous,
    /// `‖u‖_s ≍ f^{s/2}` checked on the envelope subsequences.
    Oscillatory,
    /// `‖u‖_s ≍ t^s` and `‖z‖ ≍ t − t0`.
    Forced,
}

impl GrowthLaw {
    pub fn of(scenario: &Scenario, family: Option<RateFamily>) -> Self {
        if scenario.a != 0.0 {
            return GrowthLaw::Forced;
        }
        match family {
            Some(RateFamily::Constant { .. }) => GrowthLaw::Baseline,
            Some(RateFamily::Oscillatory) => GrowthLaw::Oscillatory,
            _ => GrowthLaw::Homogeneous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumSummary {
    pub steps: usize,
    pub final_truncation: usize,
    pub max_drift_rate: f64,
    pub max_tail_mass: f64,
    pub growth: Vec<TruncationGrowth>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalSummary {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_symplectic_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceSummary {
    pub s: f64,
    pub band: BandSummary,
}

/// Everything a scenario run decides, in a stable serialisable form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub rate_label: String,
    pub t0: f64,
    pub horizon: f64,
    pub window_start: f64,
    pub law: GrowthLaw,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    pub correspondence: Vec<CorrespondenceSummary>,
    pub classical: ClassicalSummary,
    pub quantum: QuantumSummary,
    /// Hypothesis checks on the rate; informational, not verdicts.
    pub rate_check: RateCheck,
}

/// The computed series behind a [`ScenarioReport`].
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub flow: FlowResult,
    pub trajectory: QuantumTrajectory,
    pub series: Vec<RatioSeries>,
}

/// Runs the classical flow and the quantum evolution of a scenario on the
/// same sample grid and judges the result.
pub fn evaluate_scenario(scenario: &Scenario) -> Result<ScenarioRun, ExperimentError> {
    scenario.validate()?;
    let rate = scenario.resolve_rate()?;
    let (t0, horizon, window_start) = (rate.t0(), scenario.end()?, scenario.window_start()?);
    let perturbation = build_phi(&rate);

    let system = AffineSystemSpec::oscillator(&perturbation, scenario.a);
    let flow_opts = FlowOptions { tol: scenario.ode_tol, sample_step: scenario.sample_step, ..FlowOptions::default() };
    let flow = integrate_flow(&system, t0, horizon, &DVector::zeros(2), &flow_opts)?;

    let hamiltonian = QuantumHamiltonianSpec::from_perturbation(&perturbation, scenario.a, scenario.dt)?;
    let evolve_opts =
        EvolveOptions { sample_step: scenario.sample_step, sobolev_orders: scenario.s.clone(), ..EvolveOptions::default() };
    let trajectory = evolve(&HermiteState::ground(scenario.n0, t0)?, &hamiltonian, horizon, &evolve_opts)?;

    let law = GrowthLaw::of(scenario, rate.family());
    let mut verdicts = vec![Verdict::at_most("l2_drift_rate", trajectory.max_drift_rate, NORM_DRIFT_LIMIT)];
    let mut series = Vec::new();
    let mut correspondence = Vec::new();
    let times = trajectory.times();

    for &s in &scenario.s {
        let ratios = ratio_series(&flow, &trajectory, s, window_start)?;
        let band = ratios.report();
        verdicts.push(Verdict::finite(format!("correspondence_s{s}_band"), band.spread));
        verdicts.push(Verdict::at_most(format!("correspondence_s{s}_drift"), band.drift, DRIFT_LIMIT));
        correspondence.push(CorrespondenceSummary { s, band });

        let measured = trajectory.sobolev_series(s).expect("orders were requested");
        match law {
            GrowthLaw::Baseline => {
                verdicts.push(Verdict::at_most(format!("baseline_s{s}_constant"), band.spread - 1.0, BASELINE_TOLERANCE));
            }
            GrowthLaw::Homogeneous => {
                let scaled: Vec<f64> = times
                    .iter()
                    .zip(&measured)
                    .filter(|(&t, _)| t >= window_start)
                    .map(|(&t, &m)| m / rate.f(t).powf(s / 2.0))
                    .collect();
                let spread = BandSummary::of(&scaled).map_or(f64::INFINITY, |b| b.spread);
                verdicts.push(Verdict::at_most(format!("growth_s{s}_band"), spread, GROWTH_BAND_LIMIT));
            }
            GrowthLaw::Oscillatory => {
                for (envelope, tag) in [(Envelope::Lower, "lower"), (Envelope::Upper, "upper")] {
                    let at = envelope.times(window_start, horizon);
                    let values: Vec<f64> =
                        at.iter().map(|&t| interpolate_at(&times, &measured, t).unwrap_or(f64::NAN)).collect();
                    let spread = envelope_band(envelope, s, &at, &values).map_or(f64::INFINITY, |b| b.spread);
                    verdicts.push(Verdict::at_most(format!("envelope_{tag}_s{s}_band"), spread, GROWTH_BAND_LIMIT));
                }
            }
            GrowthLaw::Forced => {
                let scaled: Vec<f64> = times
                    .iter()
                    .zip(&measured)
                    .filter(|(&t, _)| t >= window_start)
                    .map(|(&t, &m)| m / t.powf(s))
                    .collect();
                let spread = BandSummary::of(&scaled).map_or(f64::INFINITY, |b| b.spread);
                verdicts.push(Verdict::at_most(format!("forced_quantum_s{s}_band"), spread, GROWTH_BAND_LIMIT));
            }
        }
        series.push(ratios);
    }
    if law == GrowthLaw::Forced {
        let scaled: Vec<f64> = (0..flow.len())
            .filter(|&i| flow.times[i] >= window_start)
            .map(|i| flow.zstar_norm(i) / (flow.times[i] - t0))
            .collect();
        let spread = BandSummary::of(&scaled).map_or(f64::INFINITY, |b| b.spread);
        verdicts.push(Verdict::at_most("forced_classical_band", spread, FORCED_CLASSICAL_LIMIT));
    }

    let rate_check = check_rate(&scenario.rate_spec(), horizon)?;
    let report = ScenarioReport {
        scenario: scenario.clone(),
        rate_label: rate.label().to_string(),
        t0,
        horizon,
        window_start,
        law,
        passed: verdicts.iter().all(|v| v.passed),
        verdicts,
        correspondence,
        classical: ClassicalSummary {
            accepted_steps: flow.stats.accepted,
            rejected_steps: flow.stats.rejected,
            max_symplectic_defect: flow.max_symplectic_defect(),
        },
        quantum: QuantumSummary {
            steps: trajectory.steps,
            final_truncation: trajectory.final_state.truncation(),
            max_drift_rate: trajectory.max_drift_rate,
            max_tail_mass: trajectory.samples.iter().map(|s| s.tail_mass).fold(0.0, f64::max),
            growth: trajectory.growth.clone(),
        },
        rate_check,
    };
    Ok(ScenarioRun { report, flow, trajectory, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_constructors() {
        assert!(Verdict::at_most("x", 1.0, 1.0).passed);
        assert!(!Verdict::at_most("x", 1.5, 1.0).passed);
        assert!(!Verdict::at_most("x", f64::NAN, 1.0).passed);
        assert!(Verdict::finite("x", 1e300).passed);
        assert!(!Verdict::finite("x", f64::INFINITY).passed);
    }

    #[test]
    fn short_baseline_passes() {
        let scenario = Scenario::new("short", "constant", &[], &[1.0], 0.0, 12.0);
        let run = evaluate_scenario(&scenario).unwrap();
        assert_eq!(run.report.law, GrowthLaw::Baseline);
        assert!(run.report.passed, "{:?}", run.report.verdicts);
        // ‖e₀‖₁ = √(3/2) against ‖W‖ = 1
        for r in run.series[0].ratios() {
            assert!((r - 1.5f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn laws_follow_the_scenario() {
        let forced = Scenario::new("f", "power_log", &[], &[1.0], 1.0, 20.0);
        assert_eq!(GrowthLaw::of(&forced, None), GrowthLaw::Forced);
        let osc = Scenario::new("o", "oscillatory", &[], &[1.0], 0.0, 20.0);
        assert_eq!(GrowthLaw::of(&osc, Some(RateFamily::Oscillatory)), GrowthLaw::Oscillatory);
        assert_eq!(GrowthLaw::of(&osc, None), GrowthLaw::Homogeneous);
    }
}
