use std::f64::consts::PI;

use proptest::prelude::*;
use tfloc_core::functionals::*;
use tfloc_core::hermite::*;
use tfloc_core::*;

/// Unit Gaussian 2^{1/4} a^{−1/2} e^{−π((x − c)/a)²}: mean c, variance a²/(4π).
fn gaussian(grid: &GridSpec, c: f64, a: f64) -> SampledFunction {
    SampledFunction::from_real_fn(grid, Domain::Time, move |x| {
        let u = (x[0] - c) / a;
        2f64.powf(0.25) / a.sqrt() * (-PI * u * u).exp()
    })
}

#[test]
fn hermite_functions_are_orthonormal() {
    let hs = hermite_system(30, &GridSpec::default_1d()).unwrap();
    assert!(gram_deviation(&hs).unwrap() < 1e-12);
}

#[test]
fn hermite_means_vanish_and_tensor_dispersions_add() {
    let grid = GridSpec::default_2d();
    for idx in [vec![0, 0], vec![2, 1], vec![3, 4]] {
        let f = hermite_tensor(&HermiteIndex(idx.clone()), &grid).unwrap();
        assert!(mean_vector(&f).unwrap().iter().all(|m| m.abs() < 1e-12));
        let target: f64 = idx.iter().map(|&k| (2 * k + 1) as f64 / (4.0 * PI)).sum();
        assert!((dispersion(&f).unwrap() - target.sqrt()).abs() < 1e-10);
    }
}

#[test]
fn tau_p_of_hermite_ground_state() {
    // ∫|x|^p 2^{1/2} e^{−2πx²} = 2^{1/2} Γ((p+1)/2) / (2π)^{(p+1)/2}. The grid sum
    // sees the kink of |x| at 0: for p = 1 it is low by h²|h_0(0)|²/6 + O(h⁴),
    // for p = 3 the first defect is O(h⁴), even p are spectrally accurate.
    let grid = GridSpec::default_1d();
    let h = grid.axis(0).h;
    let h0 = hermite_function(0, &grid).unwrap();
    for (p, kink, tol) in [(1u32, h * h * 2f64.sqrt() / 6.0, 2e-8), (2, 0.0, 1e-13), (3, 0.0, 1e-8), (4, 0.0, 1e-13)] {
        let exact = 2f64.sqrt() * tfloc_core::numeric::gamma_half(p + 1) / (2.0 * PI).powf((p + 1) as f64 / 2.0);
        let t = tau_p(&h0, p as f64).unwrap().powi(p as i32);
        assert!((t - (exact - kink)).abs() < tol, "p = {p}: {t} vs {exact}");
    }
}

#[test]
fn sobolev_quantity_of_a_gaussian() {
    // For ĝ = 2^{1/4} e^{−πξ²}: ∫ξ²|ĝ|² = 1/(4π) (d = 1).
    let grid = GridSpec::default_1d();
    let g = gaussian(&grid, 0.0, 1.0);
    assert!((sobolev_i(&g, 1).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-13);
    assert!((sobolev_i_derivative(&g, 1).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-10);
}

#[test]
fn k_epsilon_of_an_indicator() {
    // |χ_[0,1]|² is flat: K(ε) = 1 − ε² up to one cell.
    let grid = GridSpec::default_1d();
    let f = SampledFunction::from_real_fn(&grid, Domain::Time, |x| if x[0] >= 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 });
    let (k, mask) = k_epsilon(&f, 1.0 / 6.0).unwrap();
    assert!((k - 35.0 / 36.0).abs() <= grid.cell_volume(Domain::Time));
    assert!(concentration_on_set(&f, &mask).unwrap() >= 35.0 / 36.0 - 1e-12);
}

#[test]
fn dyadic_scan_of_hermite_basis() {
    let hs = hermite_system(7, &GridSpec::default_1d()).unwrap();
    let sys = OrthonormalSystem::new(hs, GRAM_TOLERANCE).unwrap();
    let scan = dyadic_bin_scan(&sys, 2.0, None).unwrap();
    // τ₂(h_k)τ₂(ĥ_k) = (2k+1)/(4π), largest at k = 7.
    assert!((scan.sup_product - 15.0 / (4.0 * PI)).abs() < 1e-12);
    assert_eq!(scan.bins.iter().map(|b| b.count).sum::<usize>(), 8);
    assert_eq!(scan.shift_bound, 0.0);
}

#[test]
fn weighted_norms_of_a_product_gaussian() {
    // The separable weight factorizes the grid sum exactly: ∫|x₁||x₂||φ₀₀|² is
    // the square of the one-dimensional sum on the same axis.
    let grid = GridSpec::default_2d();
    let g = hermite_tensor(&HermiteIndex(vec![0, 0]), &grid).unwrap();
    let w = weighted_l2(&g, &WeightSpec::SeparablePower { alpha: vec![1.0, 1.0] }).unwrap();
    let a = grid.axis(0);
    let line = GridSpec::line(a.n, a.h, a.x0).unwrap();
    let t1 = tau_p(&hermite_function(0, &line).unwrap(), 1.0).unwrap();
    assert!((w * w - t1 * t1).abs() < 1e-14);
    // Against the continuum value e₁² with e₁ = 2^{1/2}/(2π): each factor is low
    // by the kink defect δ, so the product is off by about 2e₁δ.
    let (e1, delta) = (2f64.sqrt() / (2.0 * PI), a.h * a.h * 2f64.sqrt() / 6.0);
    assert!((w * w - e1 * e1).abs() < 2.5 * e1 * delta);
    // The band integral is exact for the interpolant, so no kink defect there.
    let band = separable_frequency_moment(&g, &[1.0, 1.0]).unwrap();
    assert!((band - 0.5 / (PI * PI)).abs() < 1e-10);
}

#[test]
fn growth_audit_rejects_out_of_range_orders() {
    assert!(tau_growth_audit(2.0, 2, 13).is_err());
    assert!(tau_growth_audit(2.0, 3, 4).is_err());
    assert!(tau_growth_audit(0.0, 1, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaussian_moments_match_closed_forms(c in -3.0f64..3.0, a in 0.5f64..2.0) {
        let grid = GridSpec::default_1d();
        let g = gaussian(&grid, c, a);
        prop_assert!((mean_vector(&g).unwrap()[0] - c).abs() < 1e-12);
        let delta = a / (4.0 * PI).sqrt();
        prop_assert!((dispersion(&g).unwrap() - delta).abs() < 1e-12);
        let gh = fourier_transform(&g).unwrap();
        // The uncertainty product is attained: ΔΔ̂ = 1/(4π).
        prop_assert!((dispersion(&g).unwrap() * dispersion(&gh).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-12);
        prop_assert!(mean_vector(&gh).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn uncertainty_holds_for_hermite_mixtures(w in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let grid = GridSpec::default_1d();
        let hs = hermite_system(3, &grid).unwrap();
        let mut f = SampledFunction::zeros(&grid, Domain::Time);
        for (h, c) in hs.iter().zip(&w) {
            f = f.axpy(Complex64::new(*c, 0.0), h).unwrap();
        }
        prop_assume!(f.norm() > 0.1);
        let f = f.normalized().unwrap();
        let fh = fourier_transform(&f).unwrap();
        prop_assert!(dispersion(&f).unwrap() * dispersion(&fh).unwrap() >= 1.0 / (4.0 * PI) - 1e-12);
    }

    #[test]
    fn i_p_dominates_tau_p(p in 0.5f64..4.0, c in -2.0f64..2.0) {
        let g = gaussian(&GridSpec::default_1d(), c, 1.0);
        prop_assert!(i_p(&g, p).unwrap() >= tau_p(&g, p).unwrap().powf(p));
    }
}
