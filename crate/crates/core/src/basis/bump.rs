//! The smooth bump Ψ and its modulated dilates Ψ_{j,s}.
//!
//! φ = χ * ω is evaluated as an exact finite sum of mollifier translates
//! over an η-lattice in the cube: φ(z) = η^d Σ_y ω(z − y). Because the
//! lattice has exactly 1/η points per unit side, φ̂ vanishes at every
//! nonzero integer vector that is not a multiple of 1/η, which is what makes
//! the modulated dilates orthonormal on dyadic grids.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{affine_scale_analytic, Analytic, Domain, GridSpec, Normalization, SampledFunction};
use crate::numeric::{pairwise_sum_by, turn};
use crate::Complex64;

/// Geometry of the bump; the defaults are the only values the lattice
/// construction needs to be exact for, but any dyadic choice works.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub cube_lo: f64,
    pub cube_hi: f64,
    pub mollifier_radius: f64,
    pub final_scale: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec { cube_lo: 2.5, cube_hi: 3.5, mollifier_radius: 0.5, final_scale: 2.0 }
    }
}

impl BumpSpec {
    /// Per-axis open support of Ψ.
    pub fn support(&self) -> (f64, f64) {
        let s = self.final_scale;
        (s * (self.cube_lo - self.mollifier_radius), s * (self.cube_hi + self.mollifier_radius))
    }
}

/// Lattice spacing of the convolution sum for each dimension.
fn default_eta(dim: usize) -> f64 {
    if dim == 1 {
        2f64.powi(-12)
    } else {
        2f64.powi(-7)
    }
}

/// Unnormalized profile exp(−1/(1 − r²)) on r < 1.
fn profile(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// One row of mollifier samples with running sums from both ends, so that
/// clipped ranges are summed without cancellation.
#[derive(Debug, Clone)]
struct Row {
    half: i64,
    left: Vec<f64>,
    right: Vec<f64>,
    vals: Vec<f64>,
}

impl Row {
    fn new(vals: Vec<f64>) -> Self {
        let half = (vals.len() as i64 - 1) / 2;
        let mut left = vals.clone();
        for i in 1..left.len() {
            left[i] += left[i - 1];
        }
        let mut right = vals.clone();
        for i in (0..right.len().saturating_sub(1)).rev() {
            right[i] += right[i + 1];
        }
        Row { half, left, right, vals }
    }

    /// Σ over offsets a..=b.
    fn range_sum(&self, a: i64, b: i64) -> f64 {
        let (a, b) = (a.max(-self.half), b.min(self.half));
        if a > b {
            return 0.0;
        }
        let (ia, ib) = ((a + self.half) as usize, (b + self.half) as usize);
        if ia == 0 {
            self.left[ib]
        } else if ib == self.vals.len() - 1 {
            self.right[ia]
        } else {
            self.vals[ia..=ib].iter().sum()
        }
    }
}

/// Ψ(x) = S^{−d/2} ψ(x/S), ψ = √φ, tabulated on the η-lattice.
#[derive(Debug, Clone)]
pub struct Bump {
    spec: BumpSpec,
    dim: usize,
    eta: f64,
    base: f64,
    n: usize,
    table: Vec<f64>,
    norm_const: f64,
}

impl Bump {
    pub fn new(spec: BumpSpec, dim: usize) -> Result<Self> {
        Self::with_eta(spec, dim, default_eta(dim))
    }

    pub fn with_eta(spec: BumpSpec, dim: usize, eta: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(format!("bump dimension {dim} not in 1..=2")));
        }
        let r = spec.mollifier_radius;
        let side = spec.cube_hi - spec.cube_lo;
        let on_lattice = |v: f64| (v / eta - (v / eta).round()).abs() < 1e-9;
        if !(r > 0.0 && side > 0.0 && spec.final_scale > 0.0 && eta > 0.0)
            || !on_lattice(r)
            || !on_lattice(side)
            || !on_lattice(spec.cube_lo - r)
        {
            return Err(Error::InvalidArgument("bump geometry must sit on the η-lattice".into()));
        }
        let k = (r / eta).ceil() as i64 - 1;
        let rows: Vec<Row> = if dim == 1 {
            vec![Row::new((-k..=k).map(|o| profile((o as f64 * eta / r).powi(2))).collect())]
        } else {
            (-k..=k)
                .map(|o2| {
                    let y2 = (o2 as f64 * eta / r).powi(2);
                    let mut half = 0i64;
                    while half < k && ((half + 1) as f64 * eta / r).powi(2) + y2 < 1.0 {
                        half += 1;
                    }
                    Row::new((-half..=half).map(|o1| profile((o1 as f64 * eta / r).powi(2) + y2)).collect())
                })
                .collect()
        };
        let total: f64 = rows.iter().map(|row| row.left.last().copied().unwrap_or(0.0)).sum();
        let z = total * eta.powi(dim as i32);
        let norm_const = eta.powi(dim as i32) / z;

        let base = spec.cube_lo - r;
        let n = ((side + 2.0 * r) / eta).round() as usize + 1;
        let j0 = (r / eta).round() as i64;
        let m_cube = (side / eta).round() as i64;
        // Offsets o = m − j0 − i for lattice index i ∈ [0, M).
        let span = |m: i64| (m - j0 - m_cube + 1, m - j0);
        let table: Vec<f64> = if dim == 1 {
            (0..n as i64)
                .map(|m| {
                    let (a, b) = span(m);
                    rows[0].range_sum(a, b) * norm_const
                })
                .collect()
        } else {
            let mut t = vec![0.0; n * n];
            for m0 in 0..n as i64 {
                let (a0, b0) = span(m0);
                for m1 in 0..n as i64 {
                    let (a1, b1) = span(m1);
                    let (lo, hi) = (a1.max(-k), b1.min(k));
                    let mut acc = 0.0;
                    for o2 in lo..=hi {
                        acc += rows[(o2 + k) as usize].range_sum(a0, b0);
                    }
                    t[m0 as usize * n + m1 as usize] = acc * norm_const;
                }
            }
            t
        };
        Ok(Bump { spec, dim, eta, base, n, table, norm_const })
    }

    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Per-axis open support of Ψ.
    pub fn support(&self) -> (f64, f64) {
        self.spec.support()
    }

    /// φ = χ * ω at a point; table lookup on the lattice, direct sum off it.
    pub fn phi(&self, z: &[f64]) -> f64 {
        let hi = self.base + (self.n - 1) as f64 * self.eta;
        if z.iter().any(|&v| v <= self.base || v >= hi) {
            return 0.0;
        }
        let mut idx = [0usize; 2];
        let mut on_lattice = true;
        for (m, &v) in z.iter().enumerate() {
            let t = (v - self.base) / self.eta;
            let r = t.round();
            if (t - r).abs() > 1e-9 {
                on_lattice = false;
                break;
            }
            idx[m] = r as usize;
        }
        if on_lattice {
            return if self.dim == 1 { self.table[idx[0]] } else { self.table[idx[0] * self.n + idx[1]] };
        }
        self.phi_direct(z)
    }

    fn phi_direct(&self, z: &[f64]) -> f64 {
        let r = self.spec.mollifier_radius;
        let m_cube = ((self.spec.cube_hi - self.spec.cube_lo) / self.eta).round() as i64;
        let range = |v: f64| {
            let lo = (((v - r - self.spec.cube_lo) / self.eta).floor() as i64).max(0);
            let hi = (((v + r - self.spec.cube_lo) / self.eta).ceil() as i64).min(m_cube - 1);
            (lo, hi)
        };
        let y = |i: i64| self.spec.cube_lo + i as f64 * self.eta;
        let (a0, b0) = range(z[0]);
        let mut acc = 0.0;
        if self.dim == 1 {
            for i in a0..=b0 {
                acc += profile(((z[0] - y(i)) / r).powi(2));
            }
        } else {
            let (a1, b1) = range(z[1]);
            for i in a0..=b0 {
                let d0 = ((z[0] - y(i)) / r).powi(2);
                for k in a1..=b1 {
                    acc += profile(d0 + ((z[1] - y(k)) / r).powi(2));
                }
            }
        }
        acc * self.norm_const
    }

    /// Ψ(x).
    pub fn psi(&self, x: &[f64]) -> f64 {
        let s = self.spec.final_scale;
        let mut z = [0.0; 2];
        for (m, &v) in x.iter().enumerate() {
            z[m] = v / s;
        }
        self.phi(&z[..self.dim]).max(0.0).sqrt() * s.powf(-(self.dim as f64) / 2.0)
    }
}

impl Analytic for Bump {
    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.psi(x), 0.0)
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![self.spec.support(); self.dim])
    }
}

/// Which mother function the dilates are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    #[default]
    Plain,
    /// Ψ^(e)(x) = (Ψ(x) + Ψ(−x))/√2.
    Even,
}

/// Ψ_{j,s}(x) = 2^{−ds/2} e^{2πi j·2^{−s}x} Ψ(2^{−s}x), or its even variant.
#[derive(Debug, Clone)]
pub struct PsiAtom {
    pub bump: Arc<Bump>,
    pub j: Vec<i64>,
    pub s: u32,
    pub kind: AtomKind,
}

impl PsiAtom {
    /// Modulation frequency 2^{−s} j.
    pub fn frequency(&self) -> Vec<f64> {
        self.j.iter().map(|&v| v as f64 * 2f64.powi(-(self.s as i32))).collect()
    }
}

impl Analytic for PsiAtom {
    fn eval(&self, x: &[f64]) -> Complex64 {
        let d = self.bump.dim;
        let scale = 2f64.powi(-(self.s as i32));
        let mut y = [0.0; 2];
        let mut phase = 0.0;
        for m in 0..d {
            y[m] = x[m] * scale;
            // j·2^{−s}x reduced exactly enough by `turn`.
            phase += self.j[m] as f64 * y[m];
        }
        let amp = match self.kind {
            AtomKind::Plain => self.bump.psi(&y[..d]),
            AtomKind::Even => {
                let neg = [-y[0], -y[1]];
                (self.bump.psi(&y[..d]) + self.bump.psi(&neg[..d])) * std::f64::consts::FRAC_1_SQRT_2
            }
        };
        if amp == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (c, s) = turn(phase);
        Complex64::new(c, s) * (amp * scale.powf(d as f64 / 2.0))
    }

    fn support(&self) -> Option<Vec<(f64, f64)>> {
        let (lo, hi) = self.bump.support();
        let f = 2f64.powi(self.s as i32);
        let range = match self.kind {
            AtomKind::Plain => (lo * f, hi * f),
            AtomKind::Even => (-hi * f, hi * f),
        };
        Some(vec![range; self.bump.dim])
    }
}

/// J_s = (2^{s+1} + 1)^d.
pub fn block_size(s: u32, dim: usize) -> usize {
    ((1usize << (s + 1)) + 1).pow(dim as u32)
}

/// All j with |j_m| ≤ 2^s, in lexicographic order.
pub fn enumeration(s: u32, dim: usize) -> Vec<Vec<i64>> {
    let r = 1i64 << s;
    if dim == 1 {
        (-r..=r).map(|a| vec![a]).collect()
    } else {
        (-r..=r).flat_map(|a| (-r..=r).map(move |b| vec![a, b])).collect()
    }
}

/// Samples the whole block Ψ_{j,s}, j in enumeration order. Fails with
/// `Truncation` if the dilated support leaves the grid box.
pub fn psi_block(bump: &Arc<Bump>, s: u32, grid: &GridSpec, kind: AtomKind) -> Result<Vec<SampledFunction>> {
    if grid.dim() != bump.dim {
        return Err(Error::GridMismatch(format!("{}-d bump on a {}-d grid", bump.dim, grid.dim())));
    }
    let ones = vec![1.0; grid.dim()];
    let zeros = vec![0.0; grid.dim()];
    enumeration(s, grid.dim())
        .into_iter()
        .map(|j| {
            let atom = PsiAtom { bump: Arc::clone(bump), j, s, kind };
            affine_scale_analytic(&atom, grid, &ones, &zeros, Normalization::L2)
        })
        .collect()
}

/// ⟨Ψ, e^{2πi b·x} Ψ⟩ by grid quadrature.
pub fn autocorrelation(psi: &SampledFunction, b: &[f64]) -> Complex64 {
    let grid = psi.grid();
    let dim = grid.dim();
    let s = psi.samples();
    pairwise_sum_by(s.len(), |idx| {
        let p = grid.point(idx, Domain::Time);
        let t: f64 = (0..dim).map(|m| b[m] * p[m]).sum();
        let (c, sn) = turn(-t);
        Complex64::new(c, sn) * s[idx].norm_sqr()
    }) * grid.cell_volume(Domain::Time)
}

/// Half-integer frequencies b ≠ 0 with |b_m| ≤ 4.
pub fn half_integer_frequencies(dim: usize) -> Vec<Vec<f64>> {
    let vals: Vec<f64> = (-8..=8).map(|k| k as f64 / 2.0).collect();
    let all: Vec<Vec<f64>> = if dim == 1 {
        vals.iter().map(|&a| vec![a]).collect()
    } else {
        vals.iter().flat_map(|&a| vals.iter().map(move |&b| vec![a, b])).collect()
    };
    all.into_iter().filter(|b| b.iter().any(|&v| v != 0.0)).collect()
}

/// Tolerance of the half-integer autocorrelation check.
pub const AUTOCORRELATION_TOLERANCE: f64 = 1e-6;

/// Samples Ψ on `grid` and checks unit norm, support and the vanishing
/// half-integer autocorrelations.
pub fn build_bump(spec: BumpSpec, grid: &GridSpec) -> Result<SampledFunction> {
    let bump = Bump::new(spec, grid.dim())?;
    let (lo, hi) = bump.support();
    for a in grid.axes() {
        let (glo, ghi) = a.span(Domain::Time);
        if glo > lo - 1.0 || ghi < hi + 1.0 {
            return Err(Error::Truncation {
                overflow_mass: f64::NAN,
                context: format!("grid box must contain [{lo}, {hi}] with margin"),
            });
        }
    }
    let psi = SampledFunction::from_fn(grid, Domain::Time, &bump);
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Resolution(format!("‖Ψ‖ = {norm} on this grid")));
    }
    let worst = half_integer_frequencies(grid.dim())
        .iter()
        .map(|b| autocorrelation(&psi, b).norm())
        .fold(0.0, f64::max);
    if worst > AUTOCORRELATION_TOLERANCE {
        return Err(Error::Resolution(format!("half-integer autocorrelation {worst:.3e}")));
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_table_matches_direct_sum() {
        let bump = Bump::new(BumpSpec::default(), 1).unwrap();
        for &z in &[2.1, 2.5, 2.93, 3.0, 3.7, 3.99] {
            let zq = 2.0 + ((z - 2.0) / bump.eta()).round() * bump.eta();
            let a = bump.phi(&[zq]);
            let b = bump.phi_direct(&[zq]);
            assert!((a - b).abs() <= 1e-14 * b.max(1e-300), "{z}: {a} vs {b}");
        }
        // Plateau: the whole mollifier lies inside the cube.
        assert!((bump.phi(&[3.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_table_matches_direct_sum() {
        let bump = Bump::new(BumpSpec::default(), 2).unwrap();
        let e = bump.eta();
        for &(a, b) in &[(2.25, 3.0), (2.5, 2.5), (3.0, 3.0), (3.75, 2.125)] {
            let z = [a, b];
            let t = bump.phi(&z);
            let d = bump.phi_direct(&z);
            assert!((t - d).abs() <= 1e-13 * d.max(1e-300), "{a},{b}: {t} vs {d}");
        }
        let off = [2.5 + e / 3.0, 3.0];
        assert!(bump.phi(&off) > 0.0);
    }

    #[test]
    fn block_sizes_and_order() {
        assert_eq!(block_size(1, 1), 5);
        assert_eq!(block_size(2, 2), 81);
        let e = enumeration(1, 2);
        assert_eq!(e.len(), 25);
        assert_eq!(e[0], vec![-2, -2]);
        assert_eq!(e[1], vec![-2, -1]);
        assert_eq!(e[24], vec![2, 2]);
    }

    #[test]
    fn bump_on_a_fine_line() {
        let grid = GridSpec::line(2048, 1.0 / 64.0, -4.0).unwrap();
        let psi = build_bump(BumpSpec::default(), &grid).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let c = autocorrelation(&psi, &[0.5]);
        assert!(c.norm() < 1e-12, "{c}");
    }
}
