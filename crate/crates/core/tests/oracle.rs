use gradlase::oracle::*;
use gradlase::spectrum::{default_grid, emission_spectrum, regression_matrix};
use gradlase::{steady_state, Error, Model, PhysicalParams};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn model(t1: f64, t2: f64) -> Model {
    Model::new(PhysicalParams::reference(t1, t2, 1)).unwrap()
}

fn strong(t1: f64, t2: f64, g_over_kappa: f64, detuning_over_kappa: f64) -> Model {
    let mut p = PhysicalParams::reference(t1, t2, 1);
    p.g = g_over_kappa * p.kappa;
    p.delta_u = detuning_over_kappa * p.kappa;
    Model::new(p).unwrap()
}

#[test]
fn rejects_many_structures() {
    let m = Model::new(PhysicalParams::reference(300.0, 0.1, 2)).unwrap();
    assert!(matches!(Liouvillian::new(&m, 4), Err(Error::Domain(_))));
}

#[test]
fn steady_state_is_a_density_matrix() {
    for (t1, t2) in [(300.0, 0.1), (150.0, 80.0)] {
        let l = Liouvillian::new(&model(t1, t2), DEFAULT_CUTOFF).unwrap();
        let st = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
        let (herm, trace, min_eig) = st.validity();
        assert!(herm <= 1e-12, "hermiticity {herm}");
        assert!(trace <= 1e-10, "trace {trace}");
        assert!(min_eig >= -1e-10, "eigenvalue {min_eig}");
        let residual = l
            .apply(&st.rho)
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        assert!(residual <= 1e-6, "generator residual {residual}");
    }
}

#[test]
fn action_preserves_trace_and_hermiticity() {
    let l = Liouvillian::new(&strong(400.0, 50.0, 0.3, 0.5), 3).unwrap();
    let d = l.basis.dim();
    let x = DMatrix::from_fn(d, d, |i, j| {
        C::new(((i * 7 + j) as f64).sin(), ((3 * i + 5 * j) as f64).cos())
    });
    let rho = &x * x.adjoint();
    let out = l.apply(&rho);
    let scale = out.iter().map(|x| x.norm()).fold(0.0, f64::max);
    assert!(out.trace().norm() <= 1e-12 * scale);
    let herm = (&out - out.adjoint())
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    assert!(herm <= 1e-12 * scale);
}

#[test]
fn steady_sector_has_one_zero_mode() {
    let l = Liouvillian::new(&model(300.0, 50.0), 3).unwrap();
    let eig = generator_spectrum(&l);
    assert!(!eig.is_empty());
    let scale = eig.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let zeros = eig.iter().filter(|e| e.norm() <= 1e-9 * scale).count();
    assert_eq!(zeros, 1);
    assert!(eig.iter().all(|e| e.re <= 1e-9 * scale));
}

#[test]
fn uncoupled_field_is_thermal_at_common_temperature() {
    let mut p = PhysicalParams::reference(120.0, 120.0, 1);
    p.g = 0.0;
    let m = Model::new(p).unwrap();
    let l = Liouvillian::new(&m, 10).unwrap();
    let st = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
    let n1 = m.occ.n1;
    assert!((st.moments.n_phot - n1).abs() <= 1e-9 * n1.max(1e-3));
    let b = l.basis;
    for n in 0..=4 {
        let pn: f64 = (0..6)
            .map(|lev| st.rho[(b.index(lev, n), b.index(lev, n))].re)
            .sum();
        let geometric = n1.powi(n as i32) / (1.0 + n1).powi(n as i32 + 1);
        assert!(
            (pn - geometric).abs() <= 1e-9,
            "P({n}) = {pn} vs {geometric}"
        );
    }
    // Without the dipole coupling the field and the levels are independent.
    let pu = st.moments.populations[4];
    let i = b.index(4, 1);
    let p1 = n1 / (1.0 + n1).powi(2);
    assert!((st.rho[(i, i)].re - pu * p1).abs() <= 1e-9);
}

#[test]
fn methods_agree() {
    for (t1, t2) in [(100.0, 0.1), (300.0, 50.0)] {
        let l = Liouvillian::new(&strong(t1, t2, 0.3, 0.2), DEFAULT_CUTOFF + 2).unwrap();
        let (_, diff) = oracle_steady_state_checked(&l).unwrap();
        assert!(diff <= METHOD_TOLERANCE, "{diff}");
    }
}

#[test]
fn cutoff_is_converged() {
    let m = strong(400.0, 50.0, 0.3, 0.0);
    let coarse =
        oracle_steady_state(&Liouvillian::new(&m, 8).unwrap(), OracleMethod::NullSpace).unwrap();
    let fine =
        oracle_steady_state(&Liouvillian::new(&m, 11).unwrap(), OracleMethod::NullSpace).unwrap();
    let d = coarse.moments.max_abs_difference(&fine.moments);
    assert!(d <= 1e-6, "{d}");
}

#[test]
fn leakage_into_the_top_level_is_an_error() {
    let l = Liouvillian::new(&model(300.0, 300.0), 2).unwrap();
    assert!(matches!(
        oracle_steady_state(&l, OracleMethod::NullSpace),
        Err(Error::Oracle(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn long_time_limit_ignores_the_initial_state(
        weights in proptest::collection::vec(0.0f64..1.0, 6),
        photons in 0usize..3,
    ) {
        let m = strong(400.0, 50.0, 0.3, 0.0);
        let l = Liouvillian::new(&m, 8).unwrap();
        let b = l.basis;
        let total: f64 = weights.iter().sum::<f64>() + 1e-3;
        let mut rho0 = DMatrix::zeros(b.dim(), b.dim());
        for (lev, w) in weights.iter().enumerate() {
            let i = b.index(lev, photons);
            rho0[(i, i)] = C::from((w + 1e-3 / 6.0) / total);
        }
        let relaxed = oracle_relax(&l, &rho0).unwrap();
        let reference = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
        let d = relaxed.moments.max_abs_difference(&reference.moments);
        prop_assert!(d <= METHOD_TOLERANCE, "{}", d);
    }
}

#[test]
fn correlation_starts_at_the_photon_number() {
    let l = Liouvillian::new(&strong(400.0, 50.0, 0.3, 0.5), 8).unwrap();
    let st = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
    let corr = FieldCorrelation::new(&l, &st);
    let g0 = corr.at(0.0);
    assert!((g0.re - st.moments.n_phot).abs() <= 1e-12 + 1e-9 * st.moments.n_phot);
    assert!(g0.im.abs() <= 1e-12);
}

#[test]
fn uncoupled_correlation_decays_at_kappa() {
    let mut p = PhysicalParams::reference(300.0, 50.0, 1);
    p.g = 0.0;
    let m = Model::new(p).unwrap();
    let l = Liouvillian::new(&m, DEFAULT_CUTOFF).unwrap();
    let st = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
    let corr = FieldCorrelation::new(&l, &st);
    let kappa = m.params.kappa;
    for k in [0.5, 1.0, 3.0] {
        let tau = k / kappa;
        let exact = st.moments.n_phot * (-kappa * tau).exp();
        let got = corr.at(tau);
        assert!(
            (got - C::from(exact)).norm() <= 1e-9 * st.moments.n_phot,
            "tau={tau}: {got} vs {exact}"
        );
    }
}

#[test]
fn cumulant_populations_match_at_one_structure() {
    for (t1, t2) in SUITE_POINTS.iter().take(6) {
        let m = model(*t1, *t2);
        let exact = oracle_steady_state(
            &Liouvillian::new(&m, DEFAULT_CUTOFF).unwrap(),
            OracleMethod::NullSpace,
        )
        .unwrap();
        let cum = steady_state(&m).unwrap();
        let d = exact
            .moments
            .max_population_difference(&MomentSet::from_state(&cum.state));
        assert!(d <= POPULATION_TOLERANCE, "T1={t1} T2={t2}: {d}");
    }
}

#[test]
fn weak_coupling_linewidth_matches_regression() {
    let m = model(300.0, 50.0);
    let l = Liouvillian::new(&m, DEFAULT_CUTOFF).unwrap();
    let st = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
    let corr = FieldCorrelation::new(&l, &st);
    let ss = steady_state(&m).unwrap();
    let sys = regression_matrix(&ss, &m).unwrap();
    let grid = default_grid(&sys, 20.0, 801);
    let exact = corr.spectrum(&grid).unwrap().fwhm;
    let reg = emission_spectrum(&sys, &grid).unwrap().fwhm;
    assert!(
        (reg - exact).abs() <= LINEWIDTH_TOLERANCE * exact,
        "{reg} vs {exact}"
    );
}

/// At strong single-structure coupling the sign of the dipole term in the
/// numerator decides whether the regression spectrum follows the exact one.
#[test]
fn regression_numerator_sign_follows_exact_spectrum() {
    let m = strong(400.0, 50.0, 0.2, 0.0);
    let l = Liouvillian::new(&m, 8).unwrap();
    let st = oracle_steady_state(&l, OracleMethod::NullSpace).unwrap();
    let corr = FieldCorrelation::new(&l, &st);
    let ss = steady_state(&m).unwrap();
    let sys = regression_matrix(&ss, &m).unwrap();
    let kappa = m.params.kappa;
    for k in [0.0, 0.3, 1.0, 3.0] {
        let w = k * kappa;
        let s = C::new(0.0, -w);
        let exact = 2.0 * corr.laplace(s).unwrap().re;
        let ours = sys.density(w).unwrap();
        assert!(
            (ours - exact).abs() <= 0.06 * exact,
            "w={k}k: {ours} vs {exact}"
        );
        // Opposite sign of the dipole term in the numerator.
        let dip = s - C::i() * sys.delta_u + sys.big_gamma;
        let den = (s + sys.kappa) * dip - sys.g * sys.g * sys.n_structures * sys.inversion;
        let flipped = 2.0
            * ((sys.initial[0] * dip - C::i() * sys.g * sys.n_structures * sys.initial[1]) / den)
                .re;
        if k == 0.0 {
            assert!(
                (flipped - exact).abs() >= 0.5 * exact,
                "flipped {flipped} vs {exact}"
            );
        }
    }
}

#[test]
fn check_suite_passes_on_reference_parameters() {
    let checks =
        run_check_suite(&PhysicalParams::reference(300.0, 0.1, 1), DEFAULT_CUTOFF).unwrap();
    assert!(checks.len() >= 3 * SUITE_POINTS.len());
    for c in &checks {
        assert!(c.passed, "{}: {} > {}", c.name, c.measured, c.tolerance);
    }
}
