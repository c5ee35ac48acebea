use gradlase::model::bose_einstein;
use gradlase::threshold::*;
use gradlase::{steady_state, Model, PhysicalParams};
use proptest::prelude::*;

fn reference(t1: f64, n: u64) -> PhysicalParams {
    PhysicalParams::reference(t1, 0.1, n)
}

#[test]
fn closed_form_matches_reduced_model() {
    for t1 in [60.0, 100.0, 200.0, 400.0, 1000.0] {
        let closed = n_threshold(&reference(t1, 1), t1).unwrap();
        assert!(closed.valid);
        let reduced = ReducedModel::new(&Model::new(reference(t1, 1)).unwrap())
            .unwrap()
            .n_threshold();
        assert!(
            (reduced / closed.n_th - 1.0).abs() <= 1e-6,
            "T1={t1}: {reduced} vs {}",
            closed.n_th
        );
    }
}

#[test]
fn closed_root_matches_reduced_root() {
    for (t1, factor) in [(100.0, 3.0), (300.0, 2.0), (400.0, 10.0)] {
        let nth = n_threshold(&reference(t1, 1), t1).unwrap().n_th;
        let p = reference(t1, (factor * nth).round() as u64);
        let model = Model::new(p.clone()).unwrap();
        let closed = correlation_root_closed(&p, model.occ.n2);
        let red = ReducedModel::new(&model).unwrap();
        let reduced = red.correlation_root();
        assert!(closed > 0.0);
        assert!(
            (reduced / closed - 1.0).abs() <= 1e-6,
            "T1={t1}: {reduced} vs {closed}"
        );
        assert!(red.linearized_rate(reduced) < 0.0);
        assert!(red.linearized_rate(0.0) > 0.0);
    }
}

#[test]
fn hot_threshold_at_ten_million_structures() {
    let t = t1_threshold(&reference(300.0, 1), 1e7).unwrap();
    assert!((t - 75.21).abs() <= 0.05, "{t}");
}

#[test]
fn temperature_and_structure_thresholds_are_inverse() {
    let p = reference(300.0, 1);
    for n in [1e6, 1e7, 4e8] {
        let t = t1_threshold(&p, n).unwrap();
        let back = n_threshold(&p, t).unwrap().n_th;
        assert!((back / n - 1.0).abs() <= 1e-5, "N={n}: {back}");
    }
}

#[test]
fn no_threshold_beyond_the_scan_range() {
    // The closed form levels off near 7.8e5 structures at high pump.
    assert!(t1_threshold(&reference(300.0, 1), 3e5).is_err());
}

#[test]
fn closed_correlation_tracks_the_cumulant_steady_state() {
    for t1 in [150.0, 300.0] {
        let nth = n_threshold(&reference(t1, 1), t1).unwrap().n_th;
        let model = Model::new(reference(t1, (2.0 * nth).round() as u64)).unwrap();
        let c = cooperative_correlation_st(&model);
        assert!(c.valid && c.value > 0.0);
        let ss = steady_state(&model).unwrap();
        let rel = (ss.state.c_luul / c.value - 1.0).abs();
        assert!(rel <= 0.05, "T1={t1}: {} vs {}", ss.state.c_luul, c.value);
    }
}

#[test]
fn correlation_vanishes_below_threshold() {
    let nth = n_threshold(&reference(300.0, 1), 300.0).unwrap().n_th;
    let model = Model::new(reference(300.0, (0.5 * nth).round() as u64)).unwrap();
    assert_eq!(cooperative_correlation_st(&model).value, 0.0);
}

#[test]
fn variant_window_opens_with_cold_bath() {
    let p = PhysicalParams::reference_absorptive(1000.0, 1.0, 10_000_000);
    let t2 = t2_threshold_variant(&p, 1e7, 1000.0).unwrap();
    assert!(t2 > 1.0 && t2 < 30.0, "{t2}");
    let below =
        ReducedModel::new(&Model::new(p.clone().with_temperatures(1000.0, 0.8 * t2)).unwrap())
            .unwrap();
    let above =
        ReducedModel::new(&Model::new(p.with_temperatures(1000.0, 1.2 * t2)).unwrap()).unwrap();
    assert!(below.n_threshold() > 1e7);
    assert!(above.n_threshold() < 1e7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_scales_as_kappa_over_g_squared(
        n2 in 1e-3f64..10.0,
        kappa_factor in 0.1f64..10.0,
        g_factor in 0.1f64..10.0,
    ) {
        let p = reference(300.0, 1);
        let mut q = p.clone();
        q.kappa *= kappa_factor;
        q.g *= g_factor;
        let a = n_threshold_closed(&p, n2).unwrap();
        let b = n_threshold_closed(&q, n2).unwrap();
        let expected = kappa_factor / (g_factor * g_factor);
        prop_assert!((b / a / expected - 1.0).abs() <= 1e-12);
    }

    /// Pump occupations reached within the scanned hot-bath range.
    #[test]
    fn threshold_falls_with_pump_occupation(n2 in 1e-4f64..4.0, step in 1.001f64..3.0) {
        prop_assume!(n2 * step <= 4.5);
        let p = reference(300.0, 1);
        prop_assert!(n_threshold_closed(&p, n2 * step).unwrap() < n_threshold_closed(&p, n2).unwrap());
    }

    #[test]
    fn root_sign_marks_the_threshold(t1 in 60.0f64..800.0, factor in 0.2f64..5.0) {
        prop_assume!((factor - 1.0).abs() > 0.01);
        let p = reference(t1, 1);
        let nth = n_threshold(&p, t1).unwrap().n_th;
        let n2 = bose_einstein(p.omega[1], t1).unwrap();
        let q = reference(t1, (factor * nth).round() as u64);
        let c = correlation_root_closed(&q, n2);
        prop_assert_eq!(c > 0.0, factor > 1.0);
    }
}
