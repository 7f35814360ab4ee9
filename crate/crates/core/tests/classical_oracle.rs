//! Integrated flow against the closed-form basis.

use std::sync::Arc;

use growthlab::classical::{
    check_symplectic_pairings, fundamental_normalized, integrate_flow, AffineSystemSpec, AnalyticBasis,
    FlowOptions, ForcedDuhamel,
};
use growthlab::growth_rates::make_catalog_rate;
use growthlab::perturbation::build_phi;
use growthlab::quadrature::QuadSpec;
use nalgebra::DVector;

fn max_relative_gap(name: &str, params: &[f64], span: f64) -> f64 {
    let rate = make_catalog_rate(name, params).unwrap();
    let t0 = rate.t0();
    let flow = integrate_flow(
        &AffineSystemSpec::oscillator(&build_phi(&rate), 0.0),
        t0,
        t0 + span,
        &DVector::zeros(2),
        &FlowOptions::default(),
    )
    .unwrap();
    let basis = AnalyticBasis::new(&rate, 1e-12);
    let mut worst = 0.0f64;
    for (i, &t) in flow.times.iter().enumerate() {
        let w = fundamental_normalized(&basis, t).unwrap();
        let gap = (0..4).map(|k| (flow.w[i][k] - w[k]).abs()).fold(0.0, f64::max);
        worst = worst.max(gap / flow.w_norm(i).max(1.0));
    }
    worst
}

#[test]
fn flow_matches_closed_form_basis() {
    for (name, params) in [
        ("constant", vec![]),
        ("power_log", vec![]),
        ("power_log", vec![1.0, 0.5, 0.0]),
        ("power_log", vec![1.0, 1.0, 1.0]),
        ("oscillatory", vec![]),
    ] {
        let gap = max_relative_gap(name, &params, 100.0);
        assert!(gap <= 1e-6, "{name} {params:?}: {gap:e}");
    }
}

#[test]
fn symplectic_invariants_linear_rate() {
    let rate = make_catalog_rate("power_log", &[]).unwrap();
    let t0 = rate.t0();
    let run = |tol: f64| {
        integrate_flow(
            &AffineSystemSpec::oscillator(&build_phi(&rate), 1.0),
            t0,
            t0 + 200.0,
            &DVector::zeros(2),
            &FlowOptions { tol, ..FlowOptions::default() },
        )
        .unwrap()
    };
    let flow = run(1e-10);
    assert!(flow.max_symplectic_defect() <= 1e-8);
    assert!(flow.max_wtex_residual() <= 1e-6);
    // the pairings of U carry the doubled frequency and need a tighter tolerance
    let fine = run(1e-12);
    assert!(check_symplectic_pairings(&fine).max_defect() <= 1e-8);
    let coarse = check_symplectic_pairings(&flow).max_defect();
    assert!(check_symplectic_pairings(&fine).max_defect() < coarse / 10.0);
}

#[test]
fn duhamel_matches_integrated_forcing() {
    let rate = make_catalog_rate("power_log", &[]).unwrap();
    let t0 = rate.t0();
    let flow = integrate_flow(
        &AffineSystemSpec::oscillator(&build_phi(&rate), 1.0),
        t0,
        t0 + 100.0,
        &DVector::zeros(2),
        &FlowOptions::default(),
    )
    .unwrap();
    let forced = ForcedDuhamel::new(Arc::new(AnalyticBasis::new(&rate, 1e-12)), 1.0, QuadSpec::kronrod(1e-11));
    for i in (0..flow.len()).step_by(37) {
        let z = forced.eval(flow.times[i]).unwrap();
        let gap = ((flow.zstar[i][0] - z[0]).powi(2) + (flow.zstar[i][1] - z[1]).powi(2)).sqrt();
        assert!(gap <= 1e-6 * z.norm().max(1.0), "t = {}: {gap:e}", flow.times[i]);
    }
}
