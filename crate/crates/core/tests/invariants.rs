use gradlase::config::{AxisParam, AxisSpec, Config, OutputKind, Spacing};
use gradlase::cumulant::{
    idx, integrate, rhs, steady_state, CumulantState, MomentEquations, Tolerances,
};
use gradlase::sweep::{run_sweep, PointFlag};
use gradlase::{Model, PhysicalParams};
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = PhysicalParams> {
    (1.7f64..2.8, -1.0f64..2.0, 3.0f64..7.5).prop_map(|(lt1, lt2, ln)| {
        PhysicalParams::reference(10f64.powf(lt1), 10f64.powf(lt2), 10f64.powf(ln) as u64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_state_is_physical(p in params_strategy()) {
        let m = Model::new(p).unwrap();
        if let Ok(ss) = steady_state(&m) {
            let s = ss.state;
            prop_assert!((s.trace() - 1.0).abs() <= 1e-10);
            prop_assert!(s.populations().iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
            prop_assert!(s.n_phot >= 0.0);
            // Cauchy-Schwarz for the field-dipole and cross-structure moments.
            prop_assert!(s.c_aul.norm_sqr() <= s.n_phot * s.p_u * (1.0 + 1e-9) + 1e-30);
            prop_assert!(s.c_luul.abs() <= s.p_u.max(s.p_l) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn dynamics_conserve_trace(p in params_strategy(), seed in -1e-4f64..1e-4) {
        let m = Model::new(p).unwrap();
        let d = rhs(&CumulantState::seeded(seed), &m).unwrap();
        let scale = MomentEquations::new(&m).term_magnitudes(&CumulantState::seeded(seed).to_vector());
        let mag = idx::POPULATIONS.iter().map(|&i| scale[i]).fold(0.0, f64::max);
        prop_assert!(d.trace().abs() <= 1e-13 * mag.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn cross_structure_correlation_stays_real(
        p in params_strategy(),
        re in -1e-3f64..1e-3,
        im in -1e-3f64..1e-3,
        inv in -0.5f64..0.5,
    ) {
        let m = Model::new(p).unwrap();
        let eq = MomentEquations::new(&m);
        let mut y = CumulantState::seeded(1e-5).to_vector();
        y[idx::P_I2] = 0.5;
        y[idx::P_U] = 0.25 + inv / 2.0;
        y[idx::P_L] = 0.25 - inv / 2.0;
        y[idx::AUL_RE] = re;
        y[idx::AUL_IM] = im;
        let scale = eq.term_magnitudes(&y)[idx::LUUL].max(f64::MIN_POSITIVE);
        prop_assert!(eq.luul_imaginary_drive(&y).abs() <= 1e-12 * scale);
    }

    #[test]
    fn uncoupled_field_ignores_the_structures(t1 in 50.0f64..600.0, t2 in 0.1f64..300.0, ln in 0.0f64..8.0) {
        let mut p = PhysicalParams::reference(t1, t2, 10f64.powf(ln) as u64);
        p.g = 0.0;
        let m = Model::new(p).unwrap();
        let ss = steady_state(&m).unwrap();
        prop_assert!((ss.state.n_phot - m.occ.n1).abs() <= 1e-10 * m.occ.n1.max(1e-300));
        prop_assert_eq!(ss.state.c_luul, 0.0);
        prop_assert_eq!(ss.state.c_aul.norm(), 0.0);
    }
}

#[test]
fn steady_state_is_deterministic() {
    for (t1, t2, n) in [(400.0, 0.1, 10_000_000u64), (100.0, 30.0, 1000)] {
        let m = Model::new(PhysicalParams::reference(t1, t2, n)).unwrap();
        let a = steady_state(&m).unwrap().state.to_vector();
        let b = steady_state(&m).unwrap().state.to_vector();
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn integration_keeps_trace_and_realness() {
    let m = Model::new(PhysicalParams::reference(400.0, 0.1, 10_000_000)).unwrap();
    let traj = integrate(
        &CumulantState::seeded(1e-6),
        &m,
        2e-3,
        &Tolerances::default(),
    )
    .unwrap();
    assert!(traj.max_trace_drift <= 1e-8, "{}", traj.max_trace_drift);
    let eq = MomentEquations::new(&m);
    for s in &traj.states {
        let y = s.to_vector();
        let scale = eq.term_magnitudes(&y)[idx::LUUL].max(f64::MIN_POSITIVE);
        assert!(eq.luul_imaginary_drive(&y).abs() <= 1e-12 * scale);
    }
}

#[test]
fn single_point_uncoupled_sweep_reproduces_thermal_light() {
    let mut p = PhysicalParams::reference(300.0, 50.0, 10_000_000);
    p.g = 0.0;
    let mut config = Config::from_params(p.clone());
    config.axes = vec![AxisSpec::new(
        AxisParam::T1,
        300.0,
        300.0,
        1,
        Spacing::Linear,
    )];
    config.outputs = vec![OutputKind::PhotonNumber, OutputKind::Linewidth];
    let result = run_sweep(&config, 1).unwrap();
    assert_eq!(result.points.len(), 1);
    let point = &result.points[0];
    assert_ne!(point.flag, PointFlag::Failed);
    let s = point.summary.unwrap();
    let n1 = Model::new(p).unwrap().occ.n1;
    assert!((s.n_phot - n1).abs() <= 1e-10 * n1);
    assert!((s.fwhm_hz.unwrap() / 1e6 - 1.0).abs() <= 0.01);
}

#[test]
fn sweep_rows_follow_the_first_axis() {
    let mut config = Config::from_params(PhysicalParams::reference(300.0, 0.1, 1));
    config.axes = vec![
        AxisSpec::new(AxisParam::T1, 100.0, 300.0, 3, Spacing::Linear),
        AxisSpec::new(AxisParam::NStructures, 1e4, 1e6, 2, Spacing::Log),
    ];
    config.outputs = vec![OutputKind::PhotonNumber];
    let result = run_sweep(&config, 2).unwrap();
    let coords: Vec<_> = result
        .points
        .iter()
        .map(|p| (p.coords[0], p.coords[1]))
        .collect();
    assert_eq!(
        coords,
        vec![
            (100.0, 1e4),
            (100.0, 1e6),
            (200.0, 1e4),
            (200.0, 1e6),
            (300.0, 1e4),
            (300.0, 1e6)
        ]
    );
    let mut buf = Vec::new();
    result.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
}
