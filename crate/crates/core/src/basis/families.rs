//! Explicit families: Ψ-blocks, the dyadic sequence, dilation-translation
//! covariance, the homogeneous-weight family and the smooth probes used as a
//! finite stand-in for a dense sequence.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::{dispersion, mean_vector, separable_frequency_moment, weighted_l2, WeightSpec};
use crate::grid::{
    affine_scale, affine_scale_analytic, fourier_transform, gram_deviation, inverse_fourier_transform, Analytic,
    Domain, GridSpec, Normalization, OrthonormalSystem, SampledFunction,
};
use crate::report::{AuditReport, Scalar, Table};
use crate::Complex64;

use super::bump::{block_size, psi_block, AtomKind, Bump};

/// exp(−1/(1 − y²)) on |y| < 1.
pub fn standard_bump(y: f64) -> f64 {
    if y.abs() < 1.0 {
        (-1.0 / (1.0 - y * y)).exp()
    } else {
        0.0
    }
}

/// ∫_{−1}^{1} standard_bump(y)^k dy by the trapezoid rule, which converges
/// faster than any power for this integrand.
pub fn bump_power_integral(k: i32) -> f64 {
    let n = 1 << 16;
    let h = 2.0 / n as f64;
    (1..n).map(|i| standard_bump(-1.0 + i as f64 * h).powi(k)).sum::<f64>() * h
}

/// The Ψ-block of scale `s` as an orthonormal system.
pub fn psi_family(bump: &Arc<Bump>, s: u32, grid: &GridSpec) -> Result<OrthonormalSystem> {
    let members = psi_block(bump, s, grid, AtomKind::Plain)?;
    debug_assert_eq!(members.len(), block_size(s, grid.dim()));
    OrthonormalSystem::new(members, crate::GRAM_TOLERANCE)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// ‖∂_m^q f‖₂² by spectral differentiation along axis m.
pub fn spectral_derivative(f: &SampledFunction, m: usize, q: u32) -> Result<SampledFunction> {
    let mut fh = fourier_transform(f)?;
    let grid = fh.grid().clone();
    for (idx, z) in fh.samples_mut().iter_mut().enumerate() {
        let xi = grid.point(idx, Domain::Frequency)[m];
        *z *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * xi).powi(q as i32);
    }
    inverse_fourier_transform(&fh)
}

/// Upper constant A(Ψ, q) with ‖∂_m^q Σ α_j Ψ_{j,s}‖² ≤ A Σ |α_j|² for every
/// s ≥ 0, from sup norms of the derivatives of Ψ measured on `grid`.
pub fn derivative_constant(bump: &Arc<Bump>, q: u32, grid: &GridSpec) -> Result<f64> {
    let psi = affine_scale_analytic(bump.as_ref(), grid, &vec![1.0; grid.dim()], &vec![0.0; grid.dim()], Normalization::L2)?;
    let mut total = 0.0;
    for m in 0..grid.dim() {
        let mut axis_total = 0.0;
        for r in 0..=q {
            let d = spectral_derivative(&psi, m, r)?;
            let sup = d.samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
            axis_total += binomial(q, r) * (2.0 * std::f64::consts::PI).powi((q - r) as i32) * sup;
        }
        total = f64::max(total, axis_total);
    }
    Ok((2f64.powi(grid.dim() as i32) * total * 1.05).powi(2))
}

/// Ratio ‖∂_m^q R‖² / Σ|α|² (maximized over axes) for R = Σ α_j Ψ_{j,s}.
pub fn derivative_ratio(bump: &Arc<Bump>, coeffs: &[Complex64], s: u32, q: u32, grid: &GridSpec) -> Result<f64> {
    let block = psi_block(bump, s, grid, AtomKind::Plain)?;
    if coeffs.len() > block.len() {
        return Err(Error::InvalidArgument(format!("{} coefficients for a block of {}", coeffs.len(), block.len())));
    }
    let weight: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if weight == 0.0 {
        return Ok(0.0);
    }
    let mut r = SampledFunction::zeros(grid, Domain::Time);
    for (c, psi) in coeffs.iter().zip(&block) {
        r = r.axpy(*c, psi)?;
    }
    let mut worst = 0.0f64;
    for m in 0..grid.dim() {
        worst = worst.max(spectral_derivative(&r, m, q)?.norm_sq());
    }
    Ok(worst / weight)
}

/// One coefficient vector: the ratio against the uniform constant.
pub fn derivative_bound_check(
    bump: &Arc<Bump>,
    coeffs: &[Complex64],
    s: u32,
    q: u32,
    grid: &GridSpec,
) -> Result<AuditReport> {
    let ratio = derivative_ratio(bump, coeffs, s, q, grid)?;
    let a = derivative_constant(bump, q, grid)?;
    let mut report = AuditReport::new("derivative_bound_check", &format!("s={s} q={q} coeffs={coeffs:?} grid={grid:?}"));
    report.scalar("ratio", Scalar::le(ratio, a));
    report.constant("a_bound", a);
    Ok(report)
}

/// Random unit coefficient vectors over several scales; reports per-scale
/// mean and maximum ratios and the uniform maximum.
pub fn derivative_bound_audit(
    bump: &Arc<Bump>,
    scales: &[u32],
    draws: usize,
    q: u32,
    seed: u64,
    grid: &GridSpec,
) -> Result<AuditReport> {
    let a = derivative_constant(bump, q, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AuditReport::new(
        "derivative_bound_audit",
        &format!("scales={scales:?} draws={draws} q={q} seed={seed} grid={grid:?}"),
    );
    let mut table = Table::new("ratios", &["s", "draw", "ratio"]);
    let mut means = Vec::new();
    let mut worst = 0.0f64;
    for &s in scales {
        let j_s = block_size(s, grid.dim());
        let block = psi_block(bump, s, grid, AtomKind::Plain)?;
        let mut sum = 0.0;
        for k in 0..draws {
            let mut c: Vec<Complex64> =
                (0..j_s).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            c.iter_mut().for_each(|z| *z /= norm);
            let mut r = SampledFunction::zeros(grid, Domain::Time);
            for (ci, psi) in c.iter().zip(&block) {
                r = r.axpy(*ci, psi)?;
            }
            let mut ratio = 0.0f64;
            for m in 0..grid.dim() {
                ratio = ratio.max(spectral_derivative(&r, m, q)?.norm_sq());
            }
            table.push(vec![s as f64, k as f64, ratio]);
            sum += ratio;
            worst = worst.max(ratio);
        }
        means.push(sum / draws as f64);
    }
    report.table(table);
    let mut mean_table = Table::new("mean_ratio", &["s", "mean_ratio"]);
    for (&s, &m) in scales.iter().zip(&means) {
        mean_table.push(vec![s as f64, m]);
    }
    report.table(mean_table);
    let rise = means.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    report.scalar("ratio_max", Scalar::le(worst, a));
    report.scalar("mean_ratio_rise", Scalar::le(if means.len() < 2 { 0.0 } else { rise }, 0.0));
    report.constant("a_bound", a);
    report.constant("a_emp", worst);
    Ok(report)
}

/// Randomized smooth bumps near the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFamily {
    pub count: usize,
    pub seed: u64,
    /// Centers are drawn uniformly from [−c, c]^d.
    pub center_box: f64,
    /// Radii are drawn uniformly from this range.
    pub radius: (f64, f64),
}

impl Default for ProbeFamily {
    fn default() -> Self {
        ProbeFamily { count: 2, seed: 7, center_box: 0.25, radius: (1.0, 1.5) }
    }
}

/// A radial bump exp(−1/(1 − |x − c|²/r²)) with a random linear phase tilt
/// of its amplitude, normalized on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub center: Vec<f64>,
    pub radius: f64,
    pub tilt: Vec<f64>,
}

impl Analytic for Probe {
    fn eval(&self, x: &[f64]) -> Complex64 {
        let mut r2 = 0.0;
        let mut lin = 1.0;
        for m in 0..self.center.len() {
            let u = (x[m] - self.center[m]) / self.radius;
            r2 += u * u;
            lin += self.tilt[m] * u;
        }
        if r2 >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new((-1.0 / (1.0 - r2)).exp() * lin, 0.0)
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.center.iter().map(|&c| (c - self.radius, c + self.radius)).collect())
    }
}

impl ProbeFamily {
    pub fn probes(&self, dim: usize) -> Vec<Probe> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let center = (0..dim).map(|_| rng.random_range(-self.center_box..=self.center_box)).collect();
                let radius = rng.random_range(self.radius.0..=self.radius.1);
                let tilt = (0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect();
                Probe { center, radius, tilt }
            })
            .collect()
    }

    /// The probes sampled and normalized on `grid`.
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<SampledFunction>> {
        let ones = vec![1.0; grid.dim()];
        let zeros = vec![0.0; grid.dim()];
        self.probes(grid.dim())
            .iter()
            .map(|p| affine_scale_analytic(p, grid, &ones, &zeros, Normalization::L2)?.normalized())
            .collect()
    }
}

/// Even mother c(b(2x − 3) + b(−2x − 3)) supported in [−2, −1] ∪ [1, 2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusBump {
    c: f64,
}

impl AnnulusBump {
    pub fn new() -> Self {
        AnnulusBump { c: bump_power_integral(2).powf(-0.5) }
    }
}

impl Default for AnnulusBump {
    fn default() -> Self {
        Self::new()
    }
}

impl Analytic for AnnulusBump {
    fn eval(&self, x: &[f64]) -> Complex64 {
        let v = standard_bump(2.0 * x[0] - 3.0) + standard_bump(-2.0 * x[0] - 3.0);
        Complex64::new(self.c * v, 0.0)
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(-2.0, 2.0)])
    }
}

/// φ_n(x) = 2^{n/2} φ(2^n x) for n in `range`, on a 1-d grid.
pub fn dyadic_example<A: Analytic + ?Sized>(
    phi: &A,
    range: std::ops::RangeInclusive<i32>,
    grid: &GridSpec,
) -> Result<OrthonormalSystem> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the dyadic example is one-dimensional".into()));
    }
    let base = SampledFunction::from_fn(grid, Domain::Time, phi);
    for (idx, z) in base.samples().iter().enumerate() {
        let x = grid.point(idx, Domain::Time)[0];
        if z.im != 0.0 {
            return Err(Error::InvalidArgument("mother function must be real".into()));
        }
        if z.re != 0.0 && !(1.0..=2.0).contains(&x.abs()) {
            return Err(Error::InvalidArgument(format!("mother function is nonzero at x = {x}")));
        }
        let mirror = phi.eval(&[-x]);
        if (mirror.re - z.re).abs() > 1e-14 * z.re.abs().max(1.0) {
            return Err(Error::InvalidArgument("mother function must be even".into()));
        }
    }
    let members = range
        .map(|n| {
            let scale = 2f64.powi(-n);
            affine_scale_analytic(phi, grid, &[scale], &[0.0], Normalization::L2)
        })
        .collect::<Result<Vec<_>>>()?;
    OrthonormalSystem::new(members, crate::GRAM_TOLERANCE)
}

/// μ(φ_n), μ(φ̂_n) and Δ(φ_n)Δ(φ̂_n) for every member.
pub fn dyadic_moments(system: &OrthonormalSystem) -> Result<Vec<[f64; 3]>> {
    system
        .members()
        .iter()
        .map(|f| {
            let fh = fourier_transform(f)?;
            Ok([mean_vector(f)?[0], mean_vector(&fh)?[0], dispersion(f)? * dispersion(&fh)?])
        })
        .collect()
}

/// ψ_{m,n}(t) = 2^{m/2} ψ(2^m t − n) against the four covariance laws.
pub fn covariance_laws_check(psi: &SampledFunction, m: i32, n: i32) -> Result<AuditReport> {
    if psi.grid().dim() != 1 {
        return Err(Error::InvalidArgument("covariance laws are checked in one dimension".into()));
    }
    let scale = 2f64.powi(-m);
    let dilated = affine_scale(psi, &[scale], &[n as f64 * scale], Normalization::L2)?;
    let stats = |f: &SampledFunction| -> Result<[f64; 4]> {
        let fh = fourier_transform(f)?;
        Ok([mean_vector(f)?[0], dispersion(f)?, mean_vector(&fh)?[0], dispersion(&fh)?])
    };
    let [mu, delta, mu_h, delta_h] = stats(psi)?;
    let [mu2, delta2, mu_h2, delta_h2] = stats(&dilated)?;
    let f = 2f64.powi(m);

    let mut report = AuditReport::new("covariance_laws_check", &format!("m={m} n={n} grid={:?}", psi.grid()));
    // Means are compared on the scale of the corresponding dispersion.
    report.scalar("mean_law", Scalar::le((mu2 - (mu + n as f64) / f).abs() / delta2, 1e-8));
    report.scalar("dispersion_law", Scalar::le((delta2 - delta / f).abs() / delta2, 1e-8));
    report.scalar("freq_dispersion_law", Scalar::le((delta_h2 - delta_h * f).abs() / delta_h2, 1e-8));
    report.scalar("freq_mean_law", Scalar::le((mu_h2 - mu_h * f).abs() / delta_h2, 1e-8));
    report.scalar(
        "product_invariance",
        Scalar::le((delta2 * delta_h2 - delta * delta_h).abs() / (delta * delta_h), 1e-8),
    );
    if psi.samples().iter().all(|z| z.im == 0.0) {
        report.scalar("real_freq_mean", Scalar::le(mu_h2.abs() / delta_h2, 1e-8));
    }
    report.constant("dispersion_product", delta * delta_h);
    Ok(report)
}

/// Product bump b(y₁) b(y₂) with unit L² norm, supported in [−1, 1]².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBump {
    c: f64,
}

impl ProductBump {
    pub fn new() -> Self {
        ProductBump { c: 1.0 / bump_power_integral(2) }
    }
}

impl Default for ProductBump {
    fn default() -> Self {
        Self::new()
    }
}

impl Analytic for ProductBump {
    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.c * standard_bump(x[0]) * standard_bump(x[1]), 0.0)
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(-1.0, 1.0); 2])
    }
}

/// φ_j(x) = 2^{(j/2)(α₁/α₂ − 1)} φ(2^{−j}x₁ − 3, 2^{jα₁/α₂}x₂), j = 0..=jMax,
/// with the weighted-moment audit against v(x) = |x₁|^{α₁}|x₂|^{α₂}.
pub fn homogeneous_family<A: Analytic + ?Sized>(
    alpha: [f64; 2],
    phi: &A,
    j_max: u32,
    grid: &GridSpec,
) -> Result<(OrthonormalSystem, AuditReport)> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("the homogeneous family needs d = 2".into()));
    }
    if !(alpha[0] > 0.0 && alpha[1] > 0.0) {
        return Err(Error::InvalidArgument("weights must be positive".into()));
    }
    match phi.support() {
        Some(sup) if sup.iter().all(|&(lo, hi)| lo >= -1.0 && hi <= 1.0) => {}
        _ => return Err(Error::InvalidArgument("φ must be supported in [−1, 1]²".into())),
    }
    let ratio = alpha[0] / alpha[1];
    let weight = WeightSpec::SeparablePower { alpha: alpha.to_vec() };
    let mut members = Vec::new();
    let mut table = Table::new("members", &["j", "norm", "time_weighted", "freq_weighted", "outside_e_j"]);
    let mut time_max = 0.0f64;
    let mut freq = Vec::new();
    let mut outside_max = 0.0f64;
    for j in 0..=j_max {
        let jf = j as f64;
        let scale = [2f64.powf(jf), 2f64.powf(-jf * ratio)];
        let shift = [3.0 * 2f64.powf(jf), 0.0];
        let f = affine_scale_analytic(phi, grid, &scale, &shift, Normalization::L2)?;
        let x2_max = 2f64.powf(-jf * ratio);
        let (lo1, hi1) = (2f64.powf(jf + 1.0), 2f64.powf(jf + 2.0));
        let mut outside = 0.0;
        for (idx, z) in f.samples().iter().enumerate() {
            let p = grid.point(idx, Domain::Time);
            if p[0] < lo1 || p[0] > hi1 || p[1].abs() > x2_max {
                outside += z.norm_sqr();
            }
        }
        outside *= grid.cell_volume(Domain::Time);
        let tw = weighted_l2(&f, &weight)?.powi(2);
        let fw = separable_frequency_moment(&f, &alpha)?;
        table.push(vec![jf, f.norm(), tw, fw, outside]);
        time_max = time_max.max(tw);
        outside_max = outside_max.max(outside);
        freq.push(fw);
        members.push(f);
    }
    let bound = 2f64.powf(2.0 * alpha[0]);
    let gram = gram_deviation(&members)?;
    let off_diag = {
        let g = crate::gram_matrix(&members)?;
        let n = members.len();
        let mut w = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    w = w.max(g[(a, b)].norm());
                }
            }
        }
        w
    };
    let f0 = freq[0];
    let spread = freq.iter().map(|v| (v / f0 - 1.0).abs()).fold(0.0, f64::max);

    let mut report = AuditReport::new(
        "homogeneous_family",
        &format!("alpha={alpha:?} j_max={j_max} grid={grid:?}"),
    );
    report.table(table);
    report.scalar("weighted_bound_max", Scalar::le(time_max, bound + 1e-6));
    report.scalar("freq_weighted_spread", Scalar::le(spread, 0.02));
    report.scalar("gram_off_diagonal", Scalar::le(off_diag, 1e-10));
    report.scalar("gram_deviation", Scalar::le(gram, crate::GRAM_TOLERANCE));
    report.scalar("mass_outside_e_j", Scalar::le(outside_max, 1e-10));
    report.constant("freq_weighted_c", f0);
    let system = OrthonormalSystem::new(members, crate::GRAM_TOLERANCE)?;
    Ok((system, report))
}
