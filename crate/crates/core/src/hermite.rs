//! Hermite functions h_k on ℝ, their tensor products on ℝ², the sharp
//! mean-dispersion sum and the τ_p growth audit.
//!
//! h_0(t) = 2^{1/4} e^{−πt²} and
//! h_{k+1} = (2√π t h_k − √k h_{k−1}) / √(k+1),
//! which is the normalized form of t h_k = (√(k+1) h_{k+1} + √k h_{k−1}) / (2√π).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{mean_vector, moment};
use crate::grid::{fourier_transform, Domain, GridSpec, SampledFunction};
use crate::numeric::linear_fit;
use crate::report::{AuditReport, Scalar, Table};
use crate::Complex64;

/// Largest supported order.
pub const MAX_ORDER: usize = 64;

/// Accepted |‖h_k‖² − 1| before an order is declared truncated by the grid.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

/// Multi-index I = (i_1, ..., i_d).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HermiteIndex(pub Vec<usize>);

impl HermiteIndex {
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// All indices of dimension `d` with |I| = `order`, lexicographic.
    pub fn of_order(d: usize, order: usize) -> Vec<HermiteIndex> {
        match d {
            1 => vec![HermiteIndex(vec![order])],
            2 => (0..=order).rev().map(|i| HermiteIndex(vec![i, order - i])).collect(),
            _ => Vec::new(),
        }
    }
}

/// Values h_0..h_kmax at the points `xs`; entry `[k][i]` is h_k(xs[i]).
pub fn hermite_values(kmax: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let c0 = 2f64.powf(0.25);
    let two_sqrt_pi = 2.0 * PI.sqrt();
    let mut table = Vec::with_capacity(kmax + 1);
    table.push(xs.iter().map(|x| c0 * (-PI * x * x).exp()).collect::<Vec<_>>());
    for k in 0..kmax {
        let sk = (k as f64).sqrt();
        let inv = 1.0 / ((k + 1) as f64).sqrt();
        let next: Vec<f64> = (0..xs.len())
            .map(|i| {
                let prev = if k == 0 { 0.0 } else { table[k - 1][i] };
                (two_sqrt_pi * xs[i] * table[k][i] - sk * prev) * inv
            })
            .collect();
        table.push(next);
    }
    table
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::Truncation {
            overflow_mass: f64::NAN,
            context: format!("Hermite order {k} exceeds the supported maximum {MAX_ORDER}"),
        });
    }
    Ok(())
}

fn check_sampled_norm(f: &SampledFunction, label: &str) -> Result<()> {
    let defect = (f.norm_sq() - 1.0).abs();
    if !(defect <= TRUNCATION_TOLERANCE) {
        return Err(Error::Truncation {
            overflow_mass: defect,
            context: format!("{label} is not resolved by the grid"),
        });
    }
    Ok(())
}

fn require_line(grid: &GridSpec) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("Hermite functions h_k need a one-dimensional grid".into()));
    }
    Ok(())
}

/// h_k sampled on a one-dimensional grid.
pub fn hermite_function(k: usize, grid: &GridSpec) -> Result<SampledFunction> {
    Ok(hermite_system(k, grid)?.pop().expect("nonempty"))
}

/// h_0..h_kmax sampled on a one-dimensional grid from one recurrence table.
pub fn hermite_system(kmax: usize, grid: &GridSpec) -> Result<Vec<SampledFunction>> {
    require_line(grid)?;
    check_order(kmax)?;
    let xs = grid.axis(0).coords(Domain::Time);
    let table = hermite_values(kmax, &xs);
    table
        .into_par_iter()
        .enumerate()
        .map(|(k, row)| {
            let samples = row.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            let f = SampledFunction::new(grid.clone(), Domain::Time, samples)?;
            check_sampled_norm(&f, &format!("h_{k}"))?;
            Ok(f)
        })
        .collect()
}

/// φ_I(x) = ∏ h_{i_m}(x_m).
pub fn hermite_tensor(index: &HermiteIndex, grid: &GridSpec) -> Result<SampledFunction> {
    if index.0.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "index of length {} on a {}-dimensional grid",
            index.0.len(),
            grid.dim()
        )));
    }
    for &i in &index.0 {
        check_order(i)?;
    }
    let factors: Vec<Vec<f64>> = grid
        .axes()
        .iter()
        .zip(&index.0)
        .map(|(a, &i)| hermite_values(i, &a.coords(Domain::Time)).pop().expect("nonempty"))
        .collect();
    let samples = (0..grid.len())
        .map(|idx| {
            let m = grid.unravel(idx);
            let v: f64 = factors.iter().enumerate().map(|(a, f)| f[m[a]]).product();
            Complex64::new(v, 0.0)
        })
        .collect();
    let f = SampledFunction::new(grid.clone(), Domain::Time, samples)?;
    check_sampled_norm(&f, &format!("phi_{:?}", index.0))?;
    Ok(f)
}

/// Numerical mean-dispersion sum with its target (n+1)²/(2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDispersion {
    pub value: f64,
    pub target: f64,
}

impl MeanDispersion {
    pub fn relative_error(&self) -> f64 {
        (self.value - self.target).abs() / self.target
    }
}

/// Σ_k (μ(e_k)² + Δ²(e_k) + μ(ê_k)² + Δ²(ê_k)) for unit members e_k; each
/// summand equals ‖x e_k‖² + ‖ξ ê_k‖².
pub fn mean_dispersion_sum_of(members: &[SampledFunction]) -> Result<f64> {
    let terms: Vec<f64> = members
        .par_iter()
        .map(|e| {
            let eh = fourier_transform(e)?;
            let mut s = 0.0;
            for f in [e, &eh] {
                let mu = mean_vector(f)?;
                let mu2: f64 = mu.iter().map(|v| v * v).sum();
                let var = moment(f, |x| x.iter().zip(&mu).map(|(a, c)| (a - c) * (a - c)).sum());
                s += mu2 + var;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Mean-dispersion sum of h_0..h_n on the default one-dimensional grid.
pub fn mean_dispersion_sum(n: usize) -> Result<MeanDispersion> {
    if n > 32 {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds 32")));
    }
    let hs = hermite_system(n, &GridSpec::default_1d())?;
    let value = mean_dispersion_sum_of(&hs)?;
    Ok(MeanDispersion { value, target: ((n + 1) * (n + 1)) as f64 / (2.0 * PI) })
}

/// Growth of Σ_{|I|≤K} (τ_p^p(φ_I) + τ_p^p(φ̂_I)) against the member count N,
/// with a log-log slope fit and the partial sums of Σ (τ_p + τ̂_p)^{−2d}.
pub fn tau_growth_audit(p: f64, d: usize, max_order: usize) -> Result<AuditReport> {
    let limit = match d {
        1 => 64,
        2 => 12,
        _ => return Err(Error::InvalidArgument(format!("dimension {d} not supported"))),
    };
    if max_order < 2 || max_order > limit || !(p > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need p > 0 and 2 <= maxOrder <= {limit}, got p = {p}, maxOrder = {max_order}"
        )));
    }
    let grid = GridSpec::default_for_dim(d)?;
    let indices: Vec<HermiteIndex> = (0..=max_order).flat_map(|k| HermiteIndex::of_order(d, k)).collect();
    let moments: Vec<(usize, f64, f64)> = indices
        .par_iter()
        .map(|idx| {
            let f = hermite_tensor(idx, &grid)?;
            let fh = fourier_transform(&f)?;
            let radial = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().powf(p / 2.0);
            Ok((idx.order(), moment(&f, radial), moment(&fh, radial)))
        })
        .collect::<Result<_>>()?;

    let mut growth = Table::new("growth", &["K", "N", "sum_tau_p_p"]);
    let mut partial = Table::new("partial_sums", &["K", "partial_sum"]);
    let (mut count, mut sum, mut psum) = (0usize, 0.0, 0.0);
    let mut c_trend = 0.0f64;
    let (mut log_n, mut log_s) = (Vec::new(), Vec::new());
    for k in 0..=max_order {
        for &(order, t, th) in moments.iter().filter(|m| m.0 == k) {
            count += 1;
            sum += t + th;
            psum += (t.powf(1.0 / p) + th.powf(1.0 / p)).powf(-2.0 * d as f64);
            if order > 0 {
                c_trend = c_trend.max(t / (order as f64).powf(p / 2.0));
            }
        }
        if k >= 1 {
            growth.push(vec![k as f64, count as f64, sum]);
            log_n.push((count as f64).ln());
            log_s.push(sum.ln());
        }
        partial.push(vec![k as f64, psum]);
    }
    let (slope, intercept) = linear_fit(&log_n, &log_s);
    let target = 1.0 + p / (2.0 * d as f64);
    let psums = partial.column("partial_sum").expect("column exists");
    let min_increment = psums.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);

    let mut report = AuditReport::new(
        "tau_growth",
        &format!("tau_growth p={p:e} d={d} maxOrder={max_order} grid={:?}", grid),
    );
    report
        .scalar("slope_deviation", Scalar::le((slope - target).abs(), 0.15))
        .scalar("min_partial_sum_increment", Scalar::gt(min_increment, 0.0))
        .constant("slope", slope)
        .constant("slope_target", target)
        .constant("fit_constant", intercept.exp())
        .constant("tau_p_trend_constant", c_trend)
        .table(growth)
        .table(partial);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_product;

    #[test]
    fn first_values_match_closed_forms() {
        let xs = [-1.3, 0.0, 0.4, 2.2];
        let t = hermite_values(2, &xs);
        let c0 = 2f64.powf(0.25);
        for (i, &x) in xs.iter().enumerate() {
            let g = c0 * (-PI * x * x).exp();
            assert!((t[0][i] - g).abs() < 1e-15);
            assert!((t[1][i] - 2.0 * PI.sqrt() * x * g).abs() < 1e-14);
            // h_2 = (4π x² − 1) g / √2
            assert!((t[2][i] - (4.0 * PI * x * x - 1.0) * g / 2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn orders_beyond_limit_are_truncation() {
        let e = hermite_function(65, &GridSpec::default_1d()).unwrap_err();
        assert!(matches!(e, Error::Truncation { .. }));
    }

    #[test]
    fn coarse_box_is_detected() {
        let grid = GridSpec::line(64, 1.0 / 16.0, -2.0).unwrap();
        assert!(matches!(hermite_function(20, &grid), Err(Error::Truncation { .. })));
    }

    #[test]
    fn tensor_pair_is_orthogonal() {
        let grid = GridSpec::default_2d();
        let a = hermite_tensor(&HermiteIndex(vec![1, 0]), &grid).unwrap();
        let b = hermite_tensor(&HermiteIndex(vec![0, 1]), &grid).unwrap();
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-12);
    }

    #[test]
    fn index_enumeration() {
        assert_eq!(HermiteIndex::of_order(2, 2).len(), 3);
        assert_eq!(HermiteIndex::of_order(2, 2)[0], HermiteIndex(vec![2, 0]));
    }
}
