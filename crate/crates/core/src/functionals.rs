//! Moment functionals of sampled functions: means, dispersions, radial
//! moments τ_p, weighted norms, the frequency-side quantity I(g),
//! concentration on sets, rearrangement measures and dyadic binning.
//!
//! All functionals integrate against |f|² with the grid quadrature and use
//! the coordinates of the function's own domain, so passing f̂ gives the
//! frequency-side quantity.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fourier_transform, inverse_fourier_transform, Domain, Mask, OrthonormalSystem, SampledFunction};
use crate::numeric::pairwise_sum_by;
use crate::Complex64;

/// Tolerance on | ‖f‖₂ − 1 | accepted by functionals that need unit input.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-8;

/// Weights w(x) for [`weighted_l2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightSpec {
    /// |x − center|^p
    RadialPower { p: f64, center: Vec<f64> },
    /// ∏ |x_m|^{α_m}
    SeparablePower { alpha: Vec<f64> },
    /// (|x| + 1)^p
    RadialPlusOne { p: f64 },
}

impl WeightSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            WeightSpec::RadialPower { p, center } => *p > 0.0 && center.len() == dim,
            WeightSpec::SeparablePower { alpha } => alpha.len() == dim && alpha.iter().all(|a| *a > 0.0),
            WeightSpec::RadialPlusOne { p } => *p > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("weight {self:?} invalid for dimension {dim}")))
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            WeightSpec::RadialPower { p, center } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2.powf(p / 2.0)
            }
            WeightSpec::SeparablePower { alpha } => {
                x.iter().zip(alpha).map(|(a, e)| a.abs().powf(*e)).product()
            }
            WeightSpec::RadialPlusOne { p } => {
                let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                (r + 1.0).powf(*p)
            }
        }
    }
}

pub fn require_unit(f: &SampledFunction) -> Result<()> {
    let norm = f.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::Unnormalized { norm });
    }
    Ok(())
}

/// ∫ w(x) |f(x)|² dx in the function's own domain.
pub fn moment<W>(f: &SampledFunction, w: W) -> f64
where
    W: Fn(&[f64]) -> f64 + Sync,
{
    let grid = f.grid();
    let dim = grid.dim();
    let domain = f.domain();
    let s = f.samples();
    pairwise_sum_by(s.len(), |idx| {
        let p = grid.point(idx, domain);
        w(&p[..dim]) * s[idx].norm_sqr()
    }) * grid.cell_volume(domain)
}

/// μ(f) = ∫ x |f|², componentwise.
pub fn mean_vector(f: &SampledFunction) -> Result<Vec<f64>> {
    require_unit(f)?;
    Ok((0..f.grid().dim()).map(|m| moment(f, |x| x[m])).collect())
}

/// Δ(f) = (∫ |x − μ(f)|² |f|²)^{1/2}; the radial central moment when d = 2.
pub fn dispersion(f: &SampledFunction) -> Result<f64> {
    let mu = mean_vector(f)?;
    let v = moment(f, |x| x.iter().zip(&mu).map(|(a, c)| (a - c) * (a - c)).sum());
    Ok(v.max(0.0).sqrt())
}

/// ‖x f‖₂² = ∫ |x|² |f|², without a normalization requirement.
pub fn second_moment(f: &SampledFunction) -> f64 {
    moment(f, |x| x.iter().map(|a| a * a).sum())
}

/// τ_p(f) = (∫ |x|^p |f|²)^{1/p}.
pub fn tau_p(f: &SampledFunction, p: f64) -> Result<f64> {
    let zero = vec![0.0; f.grid().dim()];
    tau_p_shifted(f, p, &zero)
}

/// τ_p(f, a) = (∫ |x − a|^p |f|²)^{1/p}.
pub fn tau_p_shifted(f: &SampledFunction, p: f64, a: &[f64]) -> Result<f64> {
    require_unit(f)?;
    if !(p > 0.0) || a.len() != f.grid().dim() {
        return Err(Error::InvalidArgument(format!("tau_p needs p > 0 and a shift of length {}", f.grid().dim())));
    }
    let v = moment(f, |x| {
        let r2: f64 = x.iter().zip(a).map(|(u, c)| (u - c) * (u - c)).sum();
        r2.powf(p / 2.0)
    });
    Ok(v.powf(1.0 / p))
}

/// (∫ w |f|²)^{1/2}.
pub fn weighted_l2(f: &SampledFunction, w: &WeightSpec) -> Result<f64> {
    w.validate(f.grid().dim())?;
    Ok(moment(f, |x| w.eval(x)).sqrt())
}

/// I_p(f) = ∫ (|x| + 1)^p |f|².
pub fn i_p(f: &SampledFunction, p: f64) -> Result<f64> {
    let v = weighted_l2(f, &WeightSpec::RadialPlusOne { p })?;
    Ok(v * v)
}

fn require_time(f: &SampledFunction) -> Result<()> {
    if f.domain() != Domain::Time {
        return Err(Error::DomainTag { expected: "time".into(), found: f.domain().to_string() });
    }
    Ok(())
}

/// I(g) = Σ_m ∫ |ξ_m|^{2d} |ĝ(ξ)|² dξ, evaluated on the frequency side.
pub fn sobolev_i(g: &SampledFunction, d: usize) -> Result<f64> {
    require_time(g)?;
    let gh = fourier_transform(g)?;
    sobolev_i_spectrum(&gh, d)
}

/// [`sobolev_i`] for an already transformed function.
pub fn sobolev_i_spectrum(gh: &SampledFunction, d: usize) -> Result<f64> {
    if gh.domain() != Domain::Frequency {
        return Err(Error::DomainTag { expected: "frequency".into(), found: gh.domain().to_string() });
    }
    let e = 2 * d as i32;
    let dim = gh.grid().dim();
    Ok(moment(gh, |x| (0..dim).map(|m| x[m].abs().powi(e)).sum()))
}

/// (2π)^{−2d} Σ_m ‖∂_m^d g‖₂², with the derivatives taken spectrally and
/// their norms measured on the time side.
pub fn sobolev_i_derivative(g: &SampledFunction, d: usize) -> Result<f64> {
    require_time(g)?;
    let gh = fourier_transform(g)?;
    let grid = gh.grid().clone();
    let mut total = 0.0;
    for m in 0..grid.dim() {
        let mut deriv = gh.clone();
        let s = deriv.samples_mut();
        for (idx, z) in s.iter_mut().enumerate() {
            let xi = grid.point(idx, Domain::Frequency)[m];
            let factor = Complex64::new(0.0, 2.0 * std::f64::consts::PI * xi).powi(d as i32);
            *z *= factor;
        }
        let dg = inverse_fourier_transform(&deriv)?;
        total += dg.norm_sq();
    }
    Ok(total * (2.0 * std::f64::consts::PI).powi(-2 * d as i32))
}

/// ∫_0^1 τ^α cos(πLτ) dτ.
fn cosine_moment(alpha: f64, lag: i64) -> f64 {
    if lag == 0 {
        return 1.0 / (alpha + 1.0);
    }
    let k = std::f64::consts::PI * lag as f64;
    let (sk, ck) = (k.sin(), k.cos());
    if alpha.fract() == 0.0 && alpha <= 6.0 {
        // Integration by parts: C_a = sin k/k − (a/k) S_{a−1}, S_a = −cos k/k + (a/k) C_{a−1}.
        let (mut c, mut s) = (sk / k, (1.0 - ck) / k);
        for a in 1..=alpha as i64 {
            let af = a as f64;
            let c_next = sk / k - af / k * s;
            let s_next = -ck / k + af / k * c;
            c = c_next;
            s = s_next;
        }
        return c;
    }
    // τ = t² smooths the endpoint; 8-point Gauss–Legendre on uniform panels.
    const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let panels = 4 * (lag.unsigned_abs() as usize + 4);
    let width = 1.0 / panels as f64;
    let g = |t: f64| 2.0 * t.powf(2.0 * alpha + 1.0) * (k * t * t).cos();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for i in 0..4 {
            let dx = 0.5 * width * X[i];
            total += W[i] * (g(mid - dx) + g(mid + dx));
        }
    }
    total * 0.5 * width
}

fn fft_axis(data: &mut [Complex64], shape: [usize; 2], axis: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let n = shape[axis];
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if axis == 1 {
        data.par_chunks_mut(n).for_each(|row| fft.process(row));
    } else {
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..shape[1] {
            for r in 0..n {
                col[r] = data[r * shape[1] + c];
            }
            fft.process(&mut col);
            for r in 0..n {
                data[r * shape[1] + c] = col[r];
            }
        }
    }
}

/// ∫ ∏ |ξ_m|^{α_m} |f̂(ξ)|² dξ for a time-domain f, integrated exactly over
/// the Nyquist band for the trigonometric interpolant of the samples. Unlike
/// a Riemann sum over the DFT lattice this is not spoiled by the kink of
/// |ξ|^α at the origin.
pub fn separable_frequency_moment(f: &SampledFunction, alpha: &[f64]) -> Result<f64> {
    require_time(f)?;
    let grid = f.grid();
    let dim = grid.dim();
    if alpha.len() != dim || alpha.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidArgument(format!("need {dim} non-negative exponents")));
    }
    let n: Vec<usize> = grid.shape();
    let shape = if dim == 1 { [1, 2 * n[0]] } else { [2 * n[0], 2 * n[1]] };
    let mut buf = vec![Complex64::new(0.0, 0.0); shape[0] * shape[1]];
    let s = f.samples();
    if dim == 1 {
        buf[..n[0]].copy_from_slice(s);
    } else {
        for r in 0..n[0] {
            buf[r * shape[1]..r * shape[1] + n[1]].copy_from_slice(&s[r * n[1]..(r + 1) * n[1]]);
        }
    }
    let axes: Vec<usize> = if dim == 1 { vec![1] } else { vec![0, 1] };
    for &a in &axes {
        fft_axis(&mut buf, shape, a, false);
    }
    buf.iter_mut().for_each(|z| *z = Complex64::new(z.norm_sqr(), 0.0));
    for &a in &axes {
        fft_axis(&mut buf, shape, a, true);
    }
    let scale = 1.0 / (shape[0] * shape[1]) as f64;
    // K_m(L) = 2 B^{α+1} c_α(L) with B = 1/(2h).
    let kernels: Vec<Vec<f64>> = (0..dim)
        .map(|m| {
            let a = grid.axis(m);
            let b = 0.5 / a.h;
            let len = 2 * a.n;
            (0..len)
                .map(|k| {
                    let lag = if k < a.n { k as i64 } else { k as i64 - len as i64 };
                    2.0 * b.powf(alpha[m] + 1.0) * cosine_moment(alpha[m], lag)
                })
                .collect()
        })
        .collect();
    let h2: f64 = grid.axes().iter().map(|a| a.h * a.h).product();
    let total = if dim == 1 {
        pairwise_sum_by(shape[1], |k| buf[k].re * kernels[0][k])
    } else {
        pairwise_sum_by(shape[0] * shape[1], |idx| {
            let (r, c) = (idx / shape[1], idx % shape[1]);
            buf[idx].re * kernels[0][r] * kernels[1][c]
        })
    };
    Ok(total * scale * h2)
}

/// ∫_mask |f|².
pub fn concentration_on_set(f: &SampledFunction, mask: &Mask) -> Result<f64> {
    require_unit(f)?;
    Ok(mask.apply(f)?.norm_sq())
}

/// Smallest measure of a union of grid cells carrying all but ε² of the mass
/// of ω, selected greedily by decreasing |ω|² (ties by lower index first).
pub fn k_epsilon(omega: &SampledFunction, eps: f64) -> Result<(f64, Mask)> {
    require_unit(omega)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let grid = omega.grid();
    let cell = grid.cell_volume(omega.domain());
    let s = omega.samples();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| {
        s[b].norm_sqr().partial_cmp(&s[a].norm_sqr()).expect("finite samples").then(a.cmp(&b))
    });
    // tail[m] = mass of the cells not among the first m selected.
    let mut tail = vec![0.0; order.len() + 1];
    for m in (0..order.len()).rev() {
        tail[m] = tail[m + 1] + s[order[m]].norm_sqr() * cell;
    }
    let target = eps * eps;
    let count = (0..=order.len()).find(|&m| tail[m] <= target).unwrap_or(order.len());
    let mut bits = vec![false; s.len()];
    for &i in &order[..count] {
        bits[i] = true;
    }
    let mask = Mask::new(grid.clone(), omega.domain(), bits)?;
    Ok((count as f64 * cell, mask))
}

/// One dyadic class of the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicBin {
    pub k: i64,
    pub count: usize,
    /// Upper end D·2^{−k+1} of the class interval.
    pub bin_bound: f64,
}

/// Members binned by τ_p(b_n, q_n) ∈ (D2^{−k}, D2^{−k+1}], with D² the
/// largest product τ_p(b_n, q_n)·τ_p(b̂_n, r_n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicScanReport {
    pub bins: Vec<DyadicBin>,
    pub sup_product: f64,
    pub scale_d: f64,
    /// max over |q_n|, |r_n|.
    pub shift_bound: f64,
    pub time_moments: Vec<f64>,
    pub freq_moments: Vec<f64>,
    pub description: String,
}

/// Per-member shift pair (q_n, r_n).
pub type ShiftPair = (Vec<f64>, Vec<f64>);

pub fn dyadic_bin_scan(system: &OrthonormalSystem, p: f64, shifts: Option<&[ShiftPair]>) -> Result<DyadicScanReport> {
    let dim = system.grid().dim();
    if let Some(sh) = shifts {
        if sh.len() != system.len() {
            return Err(Error::InvalidArgument("one shift pair per member required".into()));
        }
    }
    let zero = vec![0.0; dim];
    let pairs: Vec<(f64, f64)> = system
        .members()
        .par_iter()
        .enumerate()
        .map(|(n, b)| {
            let (q, r) = match shifts {
                Some(sh) => (sh[n].0.as_slice(), sh[n].1.as_slice()),
                None => (zero.as_slice(), zero.as_slice()),
            };
            let t = tau_p_shifted(b, p, q)?;
            let bh = fourier_transform(b)?;
            let th = tau_p_shifted(&bh, p, r)?;
            Ok((t, th))
        })
        .collect::<Result<_>>()?;
    let sup_product = pairs.iter().map(|(a, b)| a * b).fold(0.0, f64::max);
    let scale_d = sup_product.sqrt();
    let shift_bound = shifts
        .map(|sh| {
            sh.iter()
                .flat_map(|(q, r)| [norm(q), norm(r)])
                .fold(0.0, f64::max)
        })
        .unwrap_or(0.0);

    let mut counts = std::collections::BTreeMap::new();
    for (t, _) in &pairs {
        let k = if *t > 0.0 && scale_d > 0.0 {
            (1.0 - (t / scale_d).log2()).floor() as i64
        } else {
            i64::MAX
        };
        *counts.entry(k).or_insert(0usize) += 1;
    }
    let bins = counts
        .into_iter()
        .map(|(k, count)| DyadicBin {
            k,
            count,
            bin_bound: if k == i64::MAX { 0.0 } else { scale_d * 2f64.powi((1 - k) as i32) },
        })
        .collect();
    Ok(DyadicScanReport {
        bins,
        sup_product,
        scale_d,
        shift_bound,
        time_moments: pairs.iter().map(|p| p.0).collect(),
        freq_moments: pairs.iter().map(|p| p.1).collect(),
        description: format!("tau_{p}(b_n, q_n) in (D 2^-k, D 2^(1-k)], D^2 = sup_n tau_{p}(b_n, q_n) tau_{p}(b^_n, r_n)"),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn unit_box(grid: &GridSpec, lo: f64, hi: f64) -> SampledFunction {
        let h = 1.0 / (hi - lo).sqrt();
        SampledFunction::from_real_fn(grid, Domain::Time, |x| if x[0] >= lo && x[0] < hi { h } else { 0.0 })
    }

    #[test]
    fn box_moments_are_exact_sums() {
        let grid = GridSpec::default_1d();
        let f = unit_box(&grid, 0.0, 1.0);
        // Left-endpoint sums of x and x² over 64 cells of [0, 1).
        let n = 64.0;
        let mean = (n - 1.0) / (2.0 * n);
        assert!((mean_vector(&f).unwrap()[0] - mean).abs() < 1e-15);
        let second = (n - 1.0) * (2.0 * n - 1.0) / (6.0 * n * n);
        assert!((tau_p(&f, 2.0).unwrap() - second.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn band_moments_of_a_gaussian() {
        let grid = GridSpec::line(512, 1.0 / 16.0, -16.0).unwrap();
        let g = SampledFunction::from_real_fn(&grid, Domain::Time, |x| {
            2f64.powf(0.25) * (-std::f64::consts::PI * x[0] * x[0]).exp()
        });
        let pi = std::f64::consts::PI;
        let m0 = separable_frequency_moment(&g, &[0.0]).unwrap();
        assert!((m0 - g.norm_sq()).abs() < 1e-13);
        let m1 = separable_frequency_moment(&g, &[1.0]).unwrap();
        assert!((m1 - 2f64.sqrt() / (2.0 * pi)).abs() < 1e-12, "{m1}");
        let m2 = separable_frequency_moment(&g, &[2.0]).unwrap();
        assert!((m2 - 1.0 / (4.0 * pi)).abs() < 1e-12, "{m2}");
        // Γ(3/4) √2 / (2π)^{3/4}, through the quadrature path.
        let gamma_3_4 = 1.225_416_702_465_177_6;
        let m_half = separable_frequency_moment(&g, &[0.5]).unwrap();
        let exact = gamma_3_4 * 2f64.sqrt() / (2.0 * pi).powf(0.75);
        assert!((m_half - exact).abs() < 1e-9, "{m_half} vs {exact}");
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let grid = GridSpec::default_1d();
        let f = unit_box(&grid, 0.0, 1.0).scaled(Complex64::new(2.0, 0.0));
        assert!(matches!(mean_vector(&f), Err(Error::Unnormalized { .. })));
        assert!(matches!(tau_p(&f, 1.0), Err(Error::Unnormalized { .. })));
    }

    #[test]
    fn k_epsilon_trivial_cases() {
        let grid = GridSpec::default_1d();
        let f = unit_box(&grid, 0.0, 1.0);
        let (k, mask) = k_epsilon(&f, 1.5).unwrap();
        assert_eq!(k, 0.0);
        assert_eq!(mask.count(), 0);
        assert!(k_epsilon(&f, 0.0).is_err());
    }

    #[test]
    fn radial_weight_matches_tau() {
        let grid = GridSpec::default_1d();
        let f = unit_box(&grid, -0.5, 1.5);
        let w = weighted_l2(&f, &WeightSpec::RadialPower { p: 3.0, center: vec![0.0] }).unwrap();
        let t = tau_p(&f, 3.0).unwrap();
        assert!((w * w - t.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn weight_dimension_is_checked() {
        let grid = GridSpec::default_1d();
        let f = unit_box(&grid, 0.0, 1.0);
        assert!(weighted_l2(&f, &WeightSpec::SeparablePower { alpha: vec![1.0, 1.0] }).is_err());
    }
}
