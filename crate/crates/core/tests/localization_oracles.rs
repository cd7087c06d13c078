use proptest::prelude::*;
use tfloc_core::hermite::*;
use tfloc_core::localization::*;
use tfloc_core::*;

fn line_1024() -> GridSpec {
    GridSpec::line(1024, 1.0 / 64.0, -8.0).unwrap()
}

fn setup(t: (f64, f64), w: (f64, f64)) -> LocalizationSetup {
    LocalizationSetup::new(line_1024(), MeasurableSet::interval(t.0, t.1), MeasurableSet::interval(w.0, w.1)).unwrap()
}

#[test]
fn traces_of_unit_and_rectangular_pairs() {
    for ((t, w), exact) in [(((0.0, 1.0), (0.0, 1.0)), 1.0), (((0.0, 2.0), (0.0, 3.0)), 6.0)] {
        let q = materialize_q(setup(t, w)).unwrap();
        assert!((trace_q(&q) - exact).abs() <= 0.01 * exact);
        let hs = hs_norm_pwpt(&q).unwrap();
        assert!((hs * hs - trace_q(&q)).abs() <= 1e-8 * exact);
    }
}

#[test]
fn q_is_hermitian_with_spectrum_in_the_unit_interval() {
    let q = materialize_q(setup((0.0, 1.0), (-0.5, 0.5))).unwrap();
    assert!(q_asymmetry(&q).unwrap() <= 1e-12);
    let ev = q_eigenvalues(&q).unwrap();
    assert!(ev.iter().all(|&l| l >= -1e-8 && l <= 1.0 + 1e-8));
    let sum: f64 = ev.iter().sum();
    assert!((sum - trace_q(&q)).abs() <= 1e-8 * trace_q(&q));
}

#[test]
fn closed_form_kernel_matches_the_fft_path() {
    let q = materialize_q(setup((-1.0, 1.5), (-2.0, 1.0))).unwrap();
    let k = kernel_matrix(&q).unwrap();
    let diff = (&q.q().unwrap().matrix - &k).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12);
}

#[test]
fn top_eigenvalue_grows_with_the_boxes() {
    let small = q_eigenvalues(&materialize_q(setup((-1.0, 1.0), (-1.0, 1.0))).unwrap()).unwrap()[0];
    let large = q_eigenvalues(&materialize_q(setup((-2.0, 2.0), (-2.0, 2.0))).unwrap()).unwrap()[0];
    // The top eigenvalue of the larger pair sits within round-off of 1.
    assert!(small > 0.0 && small < large && large <= 1.0 + 1e-12);
    assert!(large > 0.999);
}

#[test]
fn ground_state_band_mass() {
    // ∫_{−1}^{1} 2^{1/2} e^{−2πξ²} dξ = erf(√(2π)) ≈ 0.999607.
    let grid = GridSpec::default_1d();
    let h0 = hermite_function(0, &grid).unwrap();
    let p = project_freq(&h0, &MeasurableSet::interval(-1.0, 1.0)).unwrap();
    assert!((p.norm_sq() - 0.999_607_249_411_713_7).abs() < 1e-3);
}

#[test]
fn low_hermite_audits() {
    let grid = GridSpec::default_1d();
    let sys = OrthonormalSystem::new(hermite_system(3, &grid).unwrap(), GRAM_TOLERANCE).unwrap();
    let box2 = MeasurableSet::interval(-2.0, 2.0);
    let a = localization_audit(&sys, &box2, &box2).unwrap();
    assert!(a.pass && a.majorization_pass && a.lhs_sum <= 16.0);
    assert!(a.rayleigh_margin >= -1e-12);

    let sys = OrthonormalSystem::new(hermite_system(9, &grid).unwrap(), GRAM_TOLERANCE).unwrap();
    let box1 = MeasurableSet::interval(-1.0, 1.0);
    let a = localization_audit(&sys, &box1, &box1).unwrap();
    assert!(a.rayleigh_sum <= 4.0 + 1e-6);

    let whole = MeasurableSet::interval(-16.0, 16.0);
    let band = MeasurableSet::interval(-32.0, 32.0);
    let single = OrthonormalSystem::new(vec![hermite_function(0, &grid).unwrap()], GRAM_TOLERANCE).unwrap();
    let a = localization_audit(&single, &whole, &band).unwrap();
    assert!(a.per_member[0].a == 0.0 && a.per_member[0].b < 1e-7);
}

#[test]
fn umbrella_bound_of_indicators() {
    let grid = GridSpec::default_1d();
    let chi = SampledFunction::from_real_fn(&grid, Domain::Time, |x| if x[0] >= 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 });
    let b = umbrella_bound(&chi, &chi, 1.0 / 6.0).unwrap();
    // K(1/6) = 35/36 in the continuum; on the grid it is rounded up to whole cells.
    let h = grid.axis(0).h;
    let k = (35.0f64 / 36.0 / h).ceil() * h;
    assert!((b - 2.0 * k * k).abs() < 1e-12, "{b}");
    assert!(b >= 2.0 * (35.0f64 / 36.0).powi(2) && b <= 2.0 * (35.0 / 36.0 + h).powi(2));
    assert!(umbrella_bound(&chi, &chi, 0.34).is_err());
}

#[test]
fn count_audit_of_low_hermite_functions() {
    let grid = GridSpec::default_1d();
    let sys = OrthonormalSystem::new(hermite_system(3, &grid).unwrap(), GRAM_TOLERANCE).unwrap();
    let a = concentration_count_audit(&sys, 0.25).unwrap();
    assert!(a.pass && a.count == 4 && a.worst_tail <= 0.0625);
    let taus: Vec<f64> = sys.members().iter().map(|h| tfloc_core::functionals::tau_p(h, 2.0).unwrap()).collect();
    let j = taus.iter().copied().fold(0.0, f64::max);
    assert!(4.0 <= jk_count_bound(j, j, 2.0, 1).unwrap());
}

#[test]
fn annihilation_without_spatial_constraint() {
    let grid = GridSpec::line(2048, 1.0 / 64.0, -16.0).unwrap();
    let a = annihilating_function(0.0, 1.0, &grid).unwrap();
    assert!(a.residual <= 1e-6);
    assert!((a.function.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn annihilating_function_vanishes_on_the_ball() {
    let grid = GridSpec::line(512, 1.0 / 32.0, -8.0).unwrap();
    let a = annihilating_function(1.0, 1.0, &grid).unwrap();
    assert!(a.residual <= 1e-3);
    for (i, z) in a.function.samples().iter().enumerate() {
        if grid.axis(0).time_coord(i).abs() <= 1.0 {
            assert_eq!(*z, Complex64::new(0.0, 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn hs_norm_squared_equals_trace(lo in -6.0f64..2.0, len in 0.5f64..4.0, wlo in -20.0f64..5.0, wlen in 0.5f64..10.0) {
        let q = materialize_q(setup((lo, lo + len), (wlo, wlo + wlen))).unwrap();
        let hs = hs_norm_pwpt(&q).unwrap();
        let tr = trace_q(&q);
        prop_assert!((hs * hs - tr).abs() <= 1e-8 * tr.max(1e-12));
        let direct = setup((lo, lo + len), (wlo, wlo + wlen));
        prop_assert!((trace_q(&direct) - tr).abs() <= 1e-10 * tr.max(1.0));
    }

    #[test]
    fn count_bound_is_monotone_in_epsilon(e1 in 0.01f64..0.32, e2 in 0.01f64..0.32, r in 0.1f64..3.0) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(concentration_count_bound(r, r, lo, 2).unwrap() <= concentration_count_bound(r, r, hi, 2).unwrap());
    }
}
