//! Uniform tensor grids on ℝᵈ (d ∈ {1, 2}), sampled functions, quadrature
//! inner products and the unitary discrete Fourier transform.
//!
//! The transform follows f̂(ξ) = ∫ f(x) e^{−2πi ξ·x} dx. A grid axis with `n`
//! samples, spacing `h` and origin `x0` induces the frequency axis
//! ξ_k = (k − n/2)/(n h), k = 0..n, so frequencies cover [−1/(2h), 1/(2h)).
//! Samples are stored row-major with axis 0 slowest.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum_by, turn};

const MIN_AXIS_LEN: usize = 16;

/// One grid axis: `n` samples at `x0 + i h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub n: usize,
    pub h: f64,
    pub x0: f64,
}

impl Axis {
    pub fn new(n: usize, h: f64, x0: f64) -> Self {
        Axis { n, h, x0 }
    }

    /// Axis with `n` samples covering `[lo, hi)`.
    pub fn spanning(n: usize, lo: f64, hi: f64) -> Self {
        Axis { n, h: (hi - lo) / n as f64, x0: lo }
    }

    pub fn freq_spacing(&self) -> f64 {
        1.0 / (self.n as f64 * self.h)
    }

    pub fn time_coord(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn freq_coord(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.freq_spacing()
    }

    pub fn coord(&self, i: usize, domain: Domain) -> f64 {
        match domain {
            Domain::Time => self.time_coord(i),
            Domain::Frequency => self.freq_coord(i),
        }
    }

    pub fn coords(&self, domain: Domain) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i, domain)).collect()
    }

    /// Half-open coordinate box `[lo, hi)` covered by the samples.
    pub fn span(&self, domain: Domain) -> (f64, f64) {
        match domain {
            Domain::Time => (self.x0, self.x0 + self.n as f64 * self.h),
            Domain::Frequency => {
                let half = 0.5 / self.h;
                (-half, half)
            }
        }
    }

    pub fn spacing(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Time => self.h,
            Domain::Frequency => self.freq_spacing(),
        }
    }
}

/// Which side of the Fourier transform a set of samples lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Time,
    Frequency,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Time => write!(f, "time"),
            Domain::Frequency => write!(f, "frequency"),
        }
    }
}

/// A uniform tensor grid in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl TryFrom<Vec<Axis>> for GridSpec {
    type Error = Error;
    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        GridSpec::new(axes)
    }
}

impl From<GridSpec> for Vec<Axis> {
    fn from(g: GridSpec) -> Self {
        g.axes
    }
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        for (m, a) in axes.iter().enumerate() {
            if a.n < MIN_AXIS_LEN || !a.n.is_power_of_two() {
                return Err(Error::InvalidArgument(format!(
                    "axis {m}: sample count {} must be a power of two >= {MIN_AXIS_LEN}",
                    a.n
                )));
            }
            if !(a.h > 0.0 && a.h.is_finite()) || !a.x0.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "axis {m}: spacing {} / origin {} invalid",
                    a.h, a.x0
                )));
            }
        }
        Ok(GridSpec { axes })
    }

    pub fn line(n: usize, h: f64, x0: f64) -> Result<Self> {
        GridSpec::new(vec![Axis::new(n, h, x0)])
    }

    /// Square grid with identical axes.
    pub fn square(n: usize, h: f64, x0: f64) -> Result<Self> {
        GridSpec::new(vec![Axis::new(n, h, x0); 2])
    }

    /// `N = 2048` samples on `[−16, 16)`.
    pub fn default_1d() -> Self {
        GridSpec::line(2048, 1.0 / 64.0, -16.0).expect("valid default grid")
    }

    /// `256 × 256` samples on `[−16, 16)²`.
    pub fn default_2d() -> Self {
        GridSpec::square(256, 1.0 / 8.0, -16.0).expect("valid default grid")
    }

    pub fn default_for_dim(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::default_1d()),
            2 => Ok(Self::default_2d()),
            _ => Err(Error::InvalidArgument(format!("dimension {d} not supported"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, m: usize) -> &Axis {
        &self.axes[m]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one sample in the given domain.
    pub fn cell_volume(&self, domain: Domain) -> f64 {
        self.axes.iter().map(|a| a.spacing(domain)).product()
    }

    /// Multi-index of a flat sample index.
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        if self.axes.len() == 1 {
            [idx, 0]
        } else {
            let n1 = self.axes[1].n;
            [idx / n1, idx % n1]
        }
    }

    /// Coordinates of sample `idx`; only the first `dim()` entries are used.
    #[inline]
    pub fn point(&self, idx: usize, domain: Domain) -> [f64; 2] {
        let m = self.unravel(idx);
        let mut p = [0.0; 2];
        for (a, axis) in self.axes.iter().enumerate() {
            p[a] = axis.coord(m[a], domain);
        }
        p
    }

    /// Whether `x` lies in the half-open time-domain box of the grid.
    pub fn box_contains(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).all(|(a, &v)| {
            let (lo, hi) = a.span(Domain::Time);
            v >= lo && v < hi
        })
    }

    /// Integer lattice offsets of `freq` in units of the frequency spacing,
    /// or `None` when some component is off the frequency lattice.
    pub fn frequency_lattice_offset(&self, freq: &[f64]) -> Option<Vec<i64>> {
        self.axes
            .iter()
            .zip(freq)
            .map(|(a, &v)| {
                let q = v / a.freq_spacing();
                let r = q.round();
                ((q - r).abs() <= 1e-9 * r.abs().max(1.0)).then_some(r as i64)
            })
            .collect()
    }
}

/// A function that can be evaluated exactly at any point of ℝᵈ.
pub trait Analytic: Sync {
    fn eval(&self, x: &[f64]) -> Complex64;

    /// Closed box containing the support, when known.
    fn support(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

impl<F> Analytic for F
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn eval(&self, x: &[f64]) -> Complex64 {
        self(x)
    }
}

/// Complex samples of a function on a grid, tagged time or frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: GridSpec,
    domain: Domain,
    samples: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: GridSpec, domain: Domain, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(SampledFunction { grid, domain, samples })
    }

    pub(crate) fn from_parts(grid: GridSpec, domain: Domain, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        SampledFunction { grid, domain, samples }
    }

    pub fn zeros(grid: &GridSpec, domain: Domain) -> Self {
        let n = grid.len();
        SampledFunction::from_parts(grid.clone(), domain, vec![Complex64::new(0.0, 0.0); n])
    }

    /// Samples `f` at every grid point of the given domain.
    pub fn from_fn<A: Analytic + ?Sized>(grid: &GridSpec, domain: Domain, f: &A) -> Self {
        let samples: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let p = grid.point(idx, domain);
                f.eval(&p[..grid.dim()])
            })
            .collect();
        SampledFunction::from_parts(grid.clone(), domain, samples)
    }

    pub fn from_real_fn<F>(grid: &GridSpec, domain: Domain, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self::from_fn(grid, domain, &|x: &[f64]| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn norm_sq(&self) -> f64 {
        let s = &self.samples;
        pairwise_sum_by(s.len(), |i| s[i].norm_sqr()) * self.grid.cell_volume(self.domain)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let samples = self.samples.iter().map(|z| z * c).collect();
        SampledFunction::from_parts(self.grid.clone(), self.domain, samples)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Unnormalized { norm: 0.0 });
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: Complex64, other: &SampledFunction) -> Result<Self> {
        check_compatible(self, other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(SampledFunction::from_parts(self.grid.clone(), self.domain, samples))
    }

    pub fn max_abs_diff(&self, other: &SampledFunction) -> Result<f64> {
        check_compatible(self, other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// L² distance by the quadrature rule.
    pub fn l2_distance(&self, other: &SampledFunction) -> Result<f64> {
        check_compatible(self, other)?;
        let (a, b) = (&self.samples, &other.samples);
        let s = pairwise_sum_by(a.len(), |i| (a[i] - b[i]).norm_sqr());
        Ok((s * self.grid.cell_volume(self.domain)).sqrt())
    }

    /// Whether any sample is nonzero.
    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

fn check_compatible(f: &SampledFunction, g: &SampledFunction) -> Result<()> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch("functions live on different grids".into()));
    }
    if f.domain != g.domain {
        return Err(Error::DomainTag {
            expected: f.domain.to_string(),
            found: g.domain.to_string(),
        });
    }
    Ok(())
}

fn require_domain(f: &SampledFunction, expected: Domain) -> Result<()> {
    if f.domain != expected {
        return Err(Error::DomainTag {
            expected: expected.to_string(),
            found: f.domain.to_string(),
        });
    }
    Ok(())
}

/// ⟨f, g⟩ = Σ f_k conj(g_k) · cell volume, summed pairwise.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    check_compatible(f, g)?;
    let (a, b) = (&f.samples, &g.samples);
    let s = pairwise_sum_by(a.len(), |i| a[i] * b[i].conj());
    Ok(s * f.grid.cell_volume(f.domain))
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn fft_rows(data: &mut [Complex64], row_len: usize, inverse: bool) {
    let fft = plan(row_len, inverse);
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(row_len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Unnormalized multidimensional DFT in place.
fn fft_nd(data: &mut Vec<Complex64>, shape: &[usize], inverse: bool) {
    match shape {
        [n] => fft_rows(data, *n, inverse),
        [n0, n1] => {
            fft_rows(data, *n1, inverse);
            let mut t = transpose(data, *n0, *n1);
            fft_rows(&mut t, *n0, inverse);
            *data = transpose(&t, *n1, *n0);
        }
        _ => unreachable!("grid dimension is validated"),
    }
}

fn apply_checkerboard(data: &mut [Complex64], grid: &GridSpec) {
    data.par_iter_mut().enumerate().for_each(|(idx, z)| {
        let m = grid.unravel(idx);
        if (m[0] + m[1]) % 2 == 1 {
            *z = -*z;
        }
    });
}

/// Per-axis factor `weight · e^{sign·2πi ξ_k x0}`.
fn phase_table(axis: &Axis, sign: f64, weight: f64) -> Vec<Complex64> {
    (0..axis.n)
        .map(|k| {
            let t = (k as f64 - (axis.n / 2) as f64) * axis.x0 / (axis.n as f64 * axis.h);
            let (c, s) = turn(t);
            Complex64::new(c, sign * s) * weight
        })
        .collect()
}

fn apply_axis_tables(data: &mut [Complex64], grid: &GridSpec, tables: &[Vec<Complex64>]) {
    data.par_iter_mut().enumerate().for_each(|(idx, z)| {
        let m = grid.unravel(idx);
        let mut c = tables[0][m[0]];
        if tables.len() > 1 {
            c *= tables[1][m[1]];
        }
        *z *= c;
    });
}

/// f̂(ξ) = ∫ f(x) e^{−2πi ξ·x} dx on the induced frequency grid.
pub fn fourier_transform(f: &SampledFunction) -> Result<SampledFunction> {
    require_domain(f, Domain::Time)?;
    let grid = &f.grid;
    let mut data = f.samples.clone();
    apply_checkerboard(&mut data, grid);
    fft_nd(&mut data, &grid.shape(), false);
    let tables: Vec<_> = grid.axes.iter().map(|a| phase_table(a, -1.0, a.h)).collect();
    apply_axis_tables(&mut data, grid, &tables);
    Ok(SampledFunction::from_parts(grid.clone(), Domain::Frequency, data))
}

/// Inverse of [`fourier_transform`]: f(x) = ∫ F(ξ) e^{2πi ξ·x} dξ.
pub fn inverse_fourier_transform(big_f: &SampledFunction) -> Result<SampledFunction> {
    require_domain(big_f, Domain::Frequency)?;
    let grid = &big_f.grid;
    let mut data = big_f.samples.clone();
    let tables: Vec<_> = grid
        .axes
        .iter()
        .map(|a| phase_table(a, 1.0, a.freq_spacing()))
        .collect();
    apply_axis_tables(&mut data, grid, &tables);
    fft_nd(&mut data, &grid.shape(), true);
    apply_checkerboard(&mut data, grid);
    Ok(SampledFunction::from_parts(grid.clone(), Domain::Time, data))
}

/// Normalization applied by [`affine_scale`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Multiply by ∏ scale_m^{−1/2}, which preserves the L² norm.
    #[default]
    L2,
}

fn affine_args(dim: usize, scale: &[f64], shift: &[f64]) -> Result<f64> {
    if scale.len() != dim || shift.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "scale/shift must have {dim} components"
        )));
    }
    if scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) || shift.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scale must be positive and finite".into()));
    }
    Ok(scale.iter().map(|s| s.powf(-0.5)).product())
}

const OVERFLOW_TOLERANCE: f64 = 1e-10;

/// `x ↦ c · f((x − shift)/scale)` for samples `f`, resampled by band-limited
/// (trigonometric) interpolation on the same grid.
pub fn affine_scale(
    f: &SampledFunction,
    scale: &[f64],
    shift: &[f64],
    normalization: Normalization,
) -> Result<SampledFunction> {
    require_domain(f, Domain::Time)?;
    let grid = &f.grid;
    let Normalization::L2 = normalization;
    let c = affine_args(grid.dim(), scale, shift)?;

    let total = f.norm_sq();
    let cell = grid.cell_volume(Domain::Time);
    let s = &f.samples;
    let overflow = pairwise_sum_by(s.len(), |idx| {
        let p = grid.point(idx, Domain::Time);
        let image: Vec<f64> = (0..grid.dim()).map(|m| scale[m] * p[m] + shift[m]).collect();
        if grid.box_contains(&image) {
            0.0
        } else {
            s[idx].norm_sqr()
        }
    }) * cell;
    if overflow > OVERFLOW_TOLERANCE * total.max(f64::MIN_POSITIVE) {
        return Err(Error::Truncation {
            overflow_mass: overflow,
            context: "affine image leaves the grid box".into(),
        });
    }

    let spectrum = fourier_transform(f)?;
    let data = spectrum.samples;
    let out: Vec<Complex64> = match grid.dim() {
        1 => {
            // Rows are built on demand: a dense N×N table does not fit at large N.
            let a = &grid.axes[0];
            let n = a.n;
            (0..n)
                .into_par_iter()
                .map_init(
                    || vec![Complex64::new(0.0, 0.0); n],
                    |row, i| {
                        evaluation_row(a, (a.time_coord(i) - shift[0]) / scale[0], row);
                        pairwise_sum_by(n, |k| row[k] * data[k]) * c
                    },
                )
                .collect()
        }
        _ => {
            let eval: Vec<Vec<Complex64>> = grid
                .axes
                .iter()
                .enumerate()
                .map(|(m, a)| {
                    let mut e = vec![Complex64::new(0.0, 0.0); a.n * a.n];
                    for (i, row) in e.chunks_mut(a.n).enumerate() {
                        evaluation_row(a, (a.time_coord(i) - shift[m]) / scale[m], row);
                    }
                    e
                })
                .collect();
            let (n0, n1) = (grid.axes[0].n, grid.axes[1].n);
            let mut partial = vec![Complex64::new(0.0, 0.0); n0 * n1];
            partial.par_chunks_mut(n1).enumerate().for_each(|(k0, out_row)| {
                let src = &data[k0 * n1..(k0 + 1) * n1];
                for (i1, o) in out_row.iter_mut().enumerate() {
                    let row = &eval[1][i1 * n1..(i1 + 1) * n1];
                    *o = pairwise_sum_by(n1, |k1| row[k1] * src[k1]);
                }
            });
            let mut out = vec![Complex64::new(0.0, 0.0); n0 * n1];
            out.par_chunks_mut(n1).enumerate().for_each(|(i0, out_row)| {
                let row = &eval[0][i0 * n0..(i0 + 1) * n0];
                for (i1, o) in out_row.iter_mut().enumerate() {
                    *o = pairwise_sum_by(n0, |k0| row[k0] * partial[k0 * n1 + i1]) * c;
                }
            });
            out
        }
    };
    Ok(SampledFunction::from_parts(grid.clone(), Domain::Time, out))
}

/// Fills `row[k] = dξ e^{2πi ξ_k y}`, or zeros when `y` leaves the axis span
/// (the interpolant would otherwise repeat periodically). Phases advance by a
/// fixed rotation and are re-anchored exactly every 32 terms.
fn evaluation_row(a: &Axis, y: f64, row: &mut [Complex64]) {
    let (lo, hi) = a.span(Domain::Time);
    if y < lo || y >= hi {
        row.fill(Complex64::new(0.0, 0.0));
        return;
    }
    let d_xi = a.freq_spacing();
    let (cs, sn) = turn(d_xi * y);
    let step = Complex64::new(cs, sn);
    for (b, chunk) in row.chunks_mut(32).enumerate() {
        let (cs, sn) = turn(a.freq_coord(b * 32) * y);
        let mut w = Complex64::new(cs, sn) * d_xi;
        for v in chunk.iter_mut() {
            *v = w;
            w *= step;
        }
    }
}

/// `x ↦ c · g((x − shift)/scale)` for an analytically known `g`, sampled by
/// exact re-evaluation.
pub fn affine_scale_analytic<A: Analytic + ?Sized>(
    g: &A,
    grid: &GridSpec,
    scale: &[f64],
    shift: &[f64],
    normalization: Normalization,
) -> Result<SampledFunction> {
    let Normalization::L2 = normalization;
    let c = affine_args(grid.dim(), scale, shift)?;
    let dim = grid.dim();
    let map = |x: &[f64]| -> [f64; 2] {
        let mut y = [0.0; 2];
        for m in 0..dim {
            y[m] = (x[m] - shift[m]) / scale[m];
        }
        y
    };
    if let Some(support) = g.support() {
        let image: Vec<(f64, f64)> = support
            .iter()
            .enumerate()
            .map(|(m, &(lo, hi))| (scale[m] * lo + shift[m], scale[m] * hi + shift[m]))
            .collect();
        let inside = grid.axes.iter().zip(&image).all(|(a, &(lo, hi))| {
            let (glo, ghi) = a.span(Domain::Time);
            lo >= glo && hi <= ghi
        });
        if !inside {
            let overflow = lattice_overflow(grid, &image, |x| (g.eval(&map(x)[..dim]) * c).norm_sqr());
            if overflow > OVERFLOW_TOLERANCE {
                return Err(Error::Truncation {
                    overflow_mass: overflow,
                    context: "scaled support leaves the grid box".into(),
                });
            }
        }
    }
    let f = |x: &[f64]| g.eval(&map(x)[..dim]) * c;
    Ok(SampledFunction::from_fn(grid, Domain::Time, &f))
}

/// Riemann sum of `density` over lattice points of the grid's lattice that
/// fall inside `region` but outside the grid box.
fn lattice_overflow<F: Fn(&[f64]) -> f64>(grid: &GridSpec, region: &[(f64, f64)], density: F) -> f64 {
    const MAX_POINTS: i64 = 1 << 24;
    let ranges: Vec<(i64, i64)> = grid
        .axes
        .iter()
        .zip(region)
        .map(|(a, &(lo, hi))| {
            (
                ((lo - a.x0) / a.h).floor() as i64,
                ((hi - a.x0) / a.h).ceil() as i64,
            )
        })
        .collect();
    let count: i64 = ranges.iter().map(|(lo, hi)| (hi - lo + 1).max(0)).product();
    if count > MAX_POINTS {
        return f64::INFINITY;
    }
    let cell = grid.cell_volume(Domain::Time);
    let outside = |m: usize, i: i64| i < 0 || i >= grid.axes[m].n as i64;
    let mut total = 0.0;
    let (r0, r1) = (ranges[0], ranges.get(1).copied().unwrap_or((0, 0)));
    for i0 in r0.0..=r0.1 {
        for i1 in r1.0..=r1.1 {
            let out = outside(0, i0) || (grid.dim() == 2 && outside(1, i1));
            if !out {
                continue;
            }
            let mut x = [grid.axes[0].x0 + i0 as f64 * grid.axes[0].h, 0.0];
            if grid.dim() == 2 {
                x[1] = grid.axes[1].x0 + i1 as f64 * grid.axes[1].h;
            }
            total += density(&x[..grid.dim()]);
        }
    }
    total * cell
}

/// Multiplies a time-domain function by e^{2πi v·x}.
pub fn modulate(f: &SampledFunction, freq: &[f64]) -> Result<SampledFunction> {
    require_domain(f, Domain::Time)?;
    let grid = &f.grid;
    if freq.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "frequency must have {} components",
            grid.dim()
        )));
    }
    let tables: Vec<Vec<Complex64>> = grid
        .axes
        .iter()
        .zip(freq)
        .map(|(a, &v)| {
            (0..a.n)
                .map(|i| {
                    let (c, s) = turn(v * a.time_coord(i));
                    Complex64::new(c, s)
                })
                .collect()
        })
        .collect();
    let mut data = f.samples.clone();
    apply_axis_tables(&mut data, grid, &tables);
    Ok(SampledFunction::from_parts(grid.clone(), Domain::Time, data))
}

/// A boolean selection of grid samples in one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: GridSpec,
    domain: Domain,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(grid: GridSpec, domain: Domain, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "mask of {} entries for a grid of {} points",
                bits.len(),
                grid.len()
            )));
        }
        Ok(Mask { grid, domain, bits })
    }

    pub fn from_predicate<P>(grid: &GridSpec, domain: Domain, pred: P) -> Self
    where
        P: Fn(&[f64]) -> bool + Sync,
    {
        let bits = (0..grid.len())
            .into_par_iter()
            .map(|idx| pred(&grid.point(idx, domain)[..grid.dim()]))
            .collect();
        Mask { grid: grid.clone(), domain, bits }
    }

    pub fn full(grid: &GridSpec, domain: Domain) -> Self {
        Mask { grid: grid.clone(), domain, bits: vec![true; grid.len()] }
    }

    pub fn empty(grid: &GridSpec, domain: Domain) -> Self {
        Mask { grid: grid.clone(), domain, bits: vec![false; grid.len()] }
    }

    /// Nonzero samples of `f`.
    pub fn support_of(f: &SampledFunction) -> Self {
        let bits = f.samples.iter().map(|z| z.re != 0.0 || z.im != 0.0).collect();
        Mask { grid: f.grid.clone(), domain: f.domain, bits }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Cell count times cell volume.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume(self.domain)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
    }

    pub fn union_with(&mut self, other: &Mask) -> Result<()> {
        self.check(other)?;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
        Ok(())
    }

    pub fn intersects(&self, other: &Mask) -> Result<bool> {
        self.check(other)?;
        Ok(self.bits.iter().zip(&other.bits).any(|(a, b)| *a && *b))
    }

    pub fn complement(&self) -> Mask {
        Mask {
            grid: self.grid.clone(),
            domain: self.domain,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Zeroes the samples of `f` outside the mask.
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch("mask and function grids differ".into()));
        }
        require_domain(f, self.domain)?;
        let zero = Complex64::new(0.0, 0.0);
        let samples = f
            .samples
            .iter()
            .zip(&self.bits)
            .map(|(z, b)| if *b { *z } else { zero })
            .collect();
        Ok(SampledFunction::from_parts(f.grid.clone(), f.domain, samples))
    }

    fn check(&self, other: &Mask) -> Result<()> {
        if self.grid != other.grid || self.domain != other.domain {
            return Err(Error::GridMismatch("masks live on different grids".into()));
        }
        Ok(())
    }
}

/// Time-domain functions on a shared grid whose Gram matrix is close to I.
#[derive(Debug, Clone)]
pub struct OrthonormalSystem {
    grid: GridSpec,
    members: Vec<SampledFunction>,
    gram_tolerance: f64,
    gram_deviation: f64,
}

/// Default off-diagonal and diagonal tolerance on `Gram − I`.
pub const GRAM_TOLERANCE: f64 = 1e-8;

impl OrthonormalSystem {
    pub fn new(members: Vec<SampledFunction>, gram_tolerance: f64) -> Result<Self> {
        let grid = match members.first() {
            Some(m) => m.grid.clone(),
            None => return Err(Error::InvalidArgument("empty system".into())),
        };
        for m in &members {
            if m.grid != grid {
                return Err(Error::GridMismatch("system members on different grids".into()));
            }
            require_domain(m, Domain::Time)?;
        }
        let gram_deviation = gram_deviation(&members)?;
        if !(gram_deviation <= gram_tolerance) {
            return Err(Error::NotOrthonormal { deviation: gram_deviation, tolerance: gram_tolerance });
        }
        Ok(OrthonormalSystem { grid, members, gram_tolerance, gram_deviation })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn members(&self) -> &[SampledFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn gram_tolerance(&self) -> f64 {
        self.gram_tolerance
    }

    /// max |Gram − I| measured at construction.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    pub fn into_members(self) -> Vec<SampledFunction> {
        self.members
    }

    /// Sub-system of the members in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        OrthonormalSystem::new(self.members[range].to_vec(), self.gram_tolerance)
    }
}

/// Gram matrix G_ij = ⟨f_i, f_j⟩.
pub fn gram_matrix(members: &[SampledFunction]) -> Result<DMatrix<Complex64>> {
    let n = members.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<Complex64> = pairs
        .par_iter()
        .map(|&(i, j)| inner_product(&members[i], &members[j]))
        .collect::<Result<_>>()?;
    let mut g = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (&(i, j), v) in pairs.iter().zip(values) {
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    Ok(g)
}

/// max |Gram − I| over all entries.
pub fn gram_deviation(members: &[SampledFunction]) -> Result<f64> {
    let g = gram_matrix(members)?;
    let n = members.len();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).norm());
        }
    }
    Ok(dev)
}
