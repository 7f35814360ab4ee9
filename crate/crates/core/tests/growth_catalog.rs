use growthlab::growth_rates::{
    check_class_m, check_support_condition, derivative_defects, make_catalog_rate, CATALOG_NAMES,
};
use proptest::prelude::*;

const HORIZON: f64 = 1e4;

#[test]
fn sub_exponential_catalog_is_in_class_m() {
    let members: [(&str, &[f64]); 10] = [
        ("power_log", &[]),
        ("power_log", &[1.0, 0.5, 0.0]),
        ("power_log", &[2.0, 1.0, 1.0]),
        ("exp_log_power", &[0.5]),
        ("exp_log_power", &[2.0]),
        ("exp_log_power", &[3.0]),
        ("exp_power", &[0.5]),
        ("t_over_log", &[]),
        ("iterated_log", &[1.0]),
        ("iterated_log", &[2.0]),
    ];
    for (name, params) in members {
        let rate = make_catalog_rate(name, params).unwrap();
        let report = check_class_m(&rate, HORIZON, 1.0).unwrap();
        assert!(report.in_class_m(), "{}: {report:?}", rate.label());
    }
}

#[test]
fn powers_of_members_stay_in_class_m() {
    for lambda in [0.25, 0.5, 3.0] {
        let rate = make_catalog_rate("power_log", &[1.0, lambda, 0.0]).unwrap();
        assert!(check_class_m(&rate, HORIZON, 1.0).unwrap().in_class_m());
        // (t ln t)^λ
        let rate = make_catalog_rate("power_log", &[1.0, lambda, lambda]).unwrap();
        assert!(check_class_m(&rate, HORIZON, 1.0).unwrap().in_class_m());
    }
}

#[test]
fn exponential_and_constant_are_rejected() {
    let exp = check_class_m(&make_catalog_rate("exponential", &[0.5]).unwrap(), 200.0, 0.5).unwrap();
    assert!(!exp.ratio_to_zero);
    assert!(!exp.in_class_m());
    let constant = check_class_m(&make_catalog_rate("constant", &[]).unwrap(), HORIZON, 1.0).unwrap();
    assert!(!constant.tends_to_infinity);
    assert!(!constant.in_class_m());
}

#[test]
fn support_condition_on_power_logs() {
    let linear = check_support_condition(&make_catalog_rate("power_log", &[]).unwrap(), HORIZON, 1.0).unwrap();
    assert!((linear.kappa_bound - 1.0).abs() < 1e-12);
    assert!(linear.holds());
    let exp = check_support_condition(&make_catalog_rate("exponential", &[0.5]).unwrap(), 200.0, 0.5).unwrap();
    assert!(exp.kappa_bound > 2.0);
    assert!(!exp.holds());
}

fn catalog_member() -> impl Strategy<Value = (&'static str, Vec<f64>)> {
    prop_oneof![
        (0.5f64..3.0, 0.1f64..1.9, 0.0f64..2.0).prop_map(|(m, a, b)| ("power_log", vec![m, a, b])),
        (0.3f64..3.0).prop_map(|a| ("exp_log_power", vec![a])),
        (0.1f64..0.9).prop_map(|s| ("exp_power", vec![s])),
        Just(("t_over_log", vec![])),
        (1u32..=2).prop_map(|k| ("iterated_log", vec![k as f64])),
        (0.05f64..1.0).prop_map(|l| ("exponential", vec![l])),
        Just(("oscillatory", vec![])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_derivatives_converge_at_second_order(
        (name, params) in catalog_member(),
        offset in 0.5f64..60.0,
    ) {
        let rate = make_catalog_rate(name, &params).unwrap();
        let t = rate.t0() + offset;
        let h = 1e-2 * t.max(1.0).sqrt();
        let (e1, e2) = derivative_defects(&rate, t, h);
        let (e1h, e2h) = derivative_defects(&rate, t, h / 2.0);
        let scale = rate.f(t).abs().max(rate.d1(t).abs()).max(rate.d2(t).abs());
        // errors that have already hit the roundoff floor carry no order information
        let floor = 1e-9 * scale;
        if e1 > floor && e1h > floor {
            let ratio = e1 / e1h;
            prop_assert!((ratio - 4.0).abs() <= 0.8, "{name} {params:?} t={t}: d1 ratio {ratio}");
        }
        if e2 > 1e3 * floor && e2h > 1e3 * floor {
            let ratio = e2 / e2h;
            prop_assert!((ratio - 4.0).abs() <= 0.8, "{name} {params:?} t={t}: d2 ratio {ratio}");
        }
    }

    #[test]
    fn catalog_construction_is_deterministic((name, params) in catalog_member(), offset in 0.0f64..100.0) {
        let a = make_catalog_rate(name, &params).unwrap();
        let b = make_catalog_rate(name, &params).unwrap();
        let t = a.t0() + offset;
        prop_assert_eq!(a.t0(), b.t0());
        prop_assert_eq!(a.label(), b.label());
        prop_assert_eq!(a.sample(t), b.sample(t));
    }

    #[test]
    fn rates_are_positive_from_their_start((name, params) in catalog_member(), offset in 0.0f64..1e4) {
        let rate = make_catalog_rate(name, &params).unwrap();
        let s = rate.checked_sample(rate.t0() + offset).unwrap();
        prop_assert!(s.log_value.is_finite());
        prop_assert!(s.value > 0.0 || s.log_value > 700.0);
    }

    #[test]
    fn class_m_report_is_deterministic(alpha in 0.1f64..1.9, step in 0.5f64..4.0) {
        let rate = make_catalog_rate("power_log", &[1.0, alpha, 0.0]).unwrap();
        let a = check_class_m(&rate, 2e3, step).unwrap();
        let b = check_class_m(&rate, 2e3, step).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn unknown_names_and_bad_parameters_are_errors() {
    assert!(make_catalog_rate("li_exp", &[]).is_err());
    assert!(make_catalog_rate("exp_power", &[1.5]).is_err());
    assert!(make_catalog_rate("iterated_log", &[4.0]).is_err());
    assert!(make_catalog_rate("power_log", &[1.0, 1.0, 0.0, 1.0]).is_err());
    for name in CATALOG_NAMES {
        assert!(make_catalog_rate(name, &[]).is_ok(), "{name}");
    }
}
