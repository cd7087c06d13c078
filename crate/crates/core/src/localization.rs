//! Time limiting P_T, band limiting P_W, the operator Q = P_T P_W P_T, the
//! localization audit for orthonormal systems, counting bounds, and the
//! solver for functions vanishing on a ball while their transform vanishes
//! on another ball.
//!
//! Set masks use the cell-center rule: a sample belongs to a box when
//! `lo ≤ x < hi` componentwise and to a ball when `|x − c| < r`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{concentration_on_set, k_epsilon, require_unit};
use crate::grid::{
    fourier_transform, inverse_fourier_transform, Domain, GridSpec, Mask, OrthonormalSystem,
    SampledFunction,
};
use crate::numeric::{gamma_half, pairwise_sum_by, turn};
use crate::Complex64;

/// Largest grid for which Q is stored densely.
pub const DENSE_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Mask(Mask),
}

/// A measurable subset of ℝᵈ given by a box, a ball or an explicit mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurableSet {
    shape: Shape,
}

impl MeasurableSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("box corners must be finite and of equal length".into()));
        }
        Ok(MeasurableSet { shape: Shape::Box { lo, hi } })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        MeasurableSet { shape: Shape::Box { lo: vec![lo], hi: vec![hi] } }
    }

    /// `[−r, r)ᵈ`.
    pub fn centered_cube(dim: usize, r: f64) -> Self {
        MeasurableSet { shape: Shape::Box { lo: vec![-r; dim], hi: vec![r; dim] } }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius >= 0.0) || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("ball needs a finite center and radius >= 0".into()));
        }
        Ok(MeasurableSet { shape: Shape::Ball { center, radius } })
    }

    pub fn from_mask(mask: Mask) -> Self {
        MeasurableSet { shape: Shape::Mask(mask) }
    }

    pub fn empty(dim: usize) -> Self {
        MeasurableSet { shape: Shape::Box { lo: vec![0.0; dim], hi: vec![0.0; dim] } }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Box { lo, .. } => lo.len(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Mask(m) => m.grid().dim(),
        }
    }

    /// Analytic measure for boxes and balls; cell count times cell volume
    /// for masks.
    pub fn exact_measure(&self) -> f64 {
        match &self.shape {
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a).max(0.0)).product(),
            Shape::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            Shape::Mask(m) => m.measure(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= *a && *v < *b),
            Shape::Ball { center, radius } => {
                x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>() < radius * radius
            }
            Shape::Mask(_) => panic!("mask sets are evaluated through mask_on"),
        }
    }

    /// Samples of the grid (in `domain`) that belong to the set.
    pub fn mask_on(&self, grid: &GridSpec, domain: Domain) -> Result<Mask> {
        if self.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "{}-dimensional set on a {}-dimensional grid",
                self.dim(),
                grid.dim()
            )));
        }
        match &self.shape {
            Shape::Mask(m) => {
                if m.grid() != grid || m.domain() != domain {
                    return Err(Error::GridMismatch("mask belongs to another grid or domain".into()));
                }
                Ok(m.clone())
            }
            _ => Ok(Mask::from_predicate(grid, domain, |x| self.contains(x))),
        }
    }
}

/// Volume of the unit ball, π^{d/2}/Γ(d/2 + 1); exact integers/π-powers for
/// d = 1, 2.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => PI.powf(d as f64 / 2.0) / gamma_half(d as u32 + 2),
    }
}

/// P_T f = f χ_T.
pub fn project_time(f: &SampledFunction, t: &MeasurableSet) -> Result<SampledFunction> {
    let mask = t.mask_on(f.grid(), Domain::Time)?;
    mask.apply(f)
}

/// P_W f = F⁻¹(χ_W f̂).
pub fn project_freq(f: &SampledFunction, w: &MeasurableSet) -> Result<SampledFunction> {
    let fh = fourier_transform(f)?;
    let mask = w.mask_on(f.grid(), Domain::Frequency)?;
    inverse_fourier_transform(&mask.apply(&fh)?)
}

/// Rows/columns of Q over the samples of T; Q vanishes elsewhere.
#[derive(Debug, Clone)]
pub struct QBlock {
    pub indices: Vec<usize>,
    pub matrix: DMatrix<Complex64>,
}

/// A grid with a time set T and a frequency set W, and optionally the dense
/// matrix of Q = P_T P_W P_T in the orthonormal sample basis.
#[derive(Debug, Clone)]
pub struct LocalizationSetup {
    grid: GridSpec,
    t: MeasurableSet,
    w: MeasurableSet,
    t_mask: Mask,
    w_mask: Mask,
    q: Option<QBlock>,
}

impl LocalizationSetup {
    pub fn new(grid: GridSpec, t: MeasurableSet, w: MeasurableSet) -> Result<Self> {
        let t_mask = t.mask_on(&grid, Domain::Time)?;
        let w_mask = w.mask_on(&grid, Domain::Frequency)?;
        Ok(LocalizationSetup { grid, t, w, t_mask, w_mask, q: None })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t(&self) -> &MeasurableSet {
        &self.t
    }

    pub fn w(&self) -> &MeasurableSet {
        &self.w
    }

    pub fn t_mask(&self) -> &Mask {
        &self.t_mask
    }

    pub fn w_mask(&self) -> &Mask {
        &self.w_mask
    }

    pub fn q(&self) -> Option<&QBlock> {
        self.q.as_ref()
    }

    /// |T|·|W| from the analytic measures.
    pub fn analytic_product(&self) -> f64 {
        self.t.exact_measure() * self.w.exact_measure()
    }

    /// Measure of the T mask times measure of the W mask.
    pub fn mask_product(&self) -> f64 {
        self.t_mask.measure() * self.w_mask.measure()
    }

    fn check_budget(&self) -> Result<()> {
        if self.grid.len() > DENSE_BUDGET {
            return Err(Error::Budget { size: self.grid.len(), limit: DENSE_BUDGET });
        }
        Ok(())
    }

    /// P_W e_n for the unit sample vector e_n = δ_n / √cell.
    fn band_limited_column(&self, n: usize) -> Result<SampledFunction> {
        let cell = self.grid.cell_volume(Domain::Time);
        let mut e = SampledFunction::zeros(&self.grid, Domain::Time);
        e.samples_mut()[n] = Complex64::new(1.0 / cell.sqrt(), 0.0);
        let eh = fourier_transform(&e)?;
        inverse_fourier_transform(&self.w_mask.apply(&eh)?)
    }
}

/// Builds the T×T block of Q column by column through the FFT.
pub fn materialize_q(mut setup: LocalizationSetup) -> Result<LocalizationSetup> {
    setup.check_budget()?;
    let indices = setup.t_mask.indices();
    let root_cell = setup.grid.cell_volume(Domain::Time).sqrt();
    let columns: Vec<Vec<Complex64>> = indices
        .par_iter()
        .map(|&n| {
            let col = setup.band_limited_column(n)?;
            let s = col.samples();
            Ok(indices.iter().map(|&m| s[m] * root_cell).collect())
        })
        .collect::<Result<_>>()?;
    let k = indices.len();
    let matrix = DMatrix::from_fn(k, k, |i, j| columns[j][i]);
    setup.q = Some(QBlock { indices, matrix });
    Ok(setup)
}

/// Closed-form kernel q_mn = (1/N) Σ_{k ∈ W} e^{2πi ξ_k (x_m − x_n)} over
/// the T samples of a one-dimensional grid.
pub fn kernel_matrix(setup: &LocalizationSetup) -> Result<DMatrix<Complex64>> {
    if setup.grid.dim() != 1 {
        return Err(Error::Unsupported("closed-form kernel is one-dimensional".into()));
    }
    setup.check_budget()?;
    let axis = setup.grid.axis(0);
    let ts = setup.t_mask.indices();
    let ws = setup.w_mask.indices();
    let n = axis.n as f64;
    Ok(DMatrix::from_fn(ts.len(), ts.len(), |i, j| {
        let dx = (ts[i] as f64 - ts[j] as f64) * axis.h;
        pairwise_sum_by(ws.len(), |k| {
            let (c, s) = turn(axis.freq_coord(ws[k]) * dx);
            Complex64::new(c, s)
        }) / n
    }))
}

/// tr(Q): the stored diagonal when materialized, otherwise the diagonal
/// formula Σ_{n ∈ T} q_nn = #T·#W / N.
pub fn trace_q(setup: &LocalizationSetup) -> f64 {
    match &setup.q {
        Some(q) => pairwise_sum_by(q.indices.len(), |i| q.matrix[(i, i)].re),
        None => setup.t_mask.count() as f64 * setup.w_mask.count() as f64 / setup.grid.len() as f64,
    }
}

/// ‖P_W P_T‖_HS = (Σ_{n ∈ T} ‖P_W e_n‖²)^{1/2}, one FFT per column.
pub fn hs_norm_pwpt(setup: &LocalizationSetup) -> Result<f64> {
    setup.check_budget()?;
    let norms: Vec<f64> = setup
        .t_mask
        .indices()
        .par_iter()
        .map(|&n| Ok(setup.band_limited_column(n)?.norm_sq()))
        .collect::<Result<_>>()?;
    Ok(norms.iter().sum::<f64>().sqrt())
}

/// Eigenvalues of the materialized Q block, in decreasing order.
pub fn q_eigenvalues(setup: &LocalizationSetup) -> Result<Vec<f64>> {
    let q = setup
        .q
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("Q is not materialized".into()))?;
    if q.indices.is_empty() {
        return Ok(Vec::new());
    }
    let herm = (&q.matrix + q.matrix.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(ev)
}

/// max |Q − Qᴴ|.
pub fn q_asymmetry(setup: &LocalizationSetup) -> Option<f64> {
    let q = setup.q.as_ref()?;
    let d = &q.matrix - q.matrix.adjoint();
    Some(d.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// ⟨Qφ, φ⟩ = ‖P_W P_T φ‖², computed on the frequency side.
pub fn rayleigh_quotient(setup: &LocalizationSetup, phi: &SampledFunction) -> Result<f64> {
    let pt = setup.t_mask.apply(phi)?;
    let spec = fourier_transform(&pt)?;
    Ok(setup.w_mask.apply(&spec)?.norm_sq())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberConcentration {
    /// (1 − ∫_T |φ|²)^{1/2}
    pub a: f64,
    /// (1 − ∫_W |φ̂|²)^{1/2}
    pub b: f64,
    pub rayleigh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationAudit {
    pub per_member: Vec<MemberConcentration>,
    /// Σ (1 − 3a/2 − 3b/2)
    pub lhs_sum: f64,
    /// Σ (1 − 2a − b)
    pub time_sided_sum: f64,
    /// Σ (1 − a − 2b)
    pub freq_sided_sum: f64,
    /// |T|·|W| from analytic measures.
    pub bound: f64,
    /// Product of the mask measures, which equals the discrete tr(Q).
    pub mask_bound: f64,
    pub rayleigh_sum: f64,
    /// min over members of ⟨Qφ,φ⟩ − max(1 − 2a − b, 1 − a − 2b).
    pub rayleigh_margin: f64,
    pub pass: bool,
    pub majorization_pass: bool,
}

/// Slack on lhs ≤ |T||W|.
pub const LOCALIZATION_SLACK: f64 = 1e-8;
/// Slack on Σ⟨Qφ,φ⟩ ≤ tr(Q).
pub const MAJORIZATION_SLACK: f64 = 1e-6;

fn clamp_defect(concentration: f64) -> f64 {
    (1.0 - concentration).max(0.0).sqrt()
}

pub fn localization_audit(
    system: &OrthonormalSystem,
    t: &MeasurableSet,
    w: &MeasurableSet,
) -> Result<ConcentrationAudit> {
    let tol = system.gram_tolerance().max(crate::grid::GRAM_TOLERANCE);
    if !(system.gram_deviation() <= tol) {
        return Err(Error::NotOrthonormal { deviation: system.gram_deviation(), tolerance: tol });
    }
    let setup = LocalizationSetup::new(system.grid().clone(), t.clone(), w.clone())?;
    let per_member: Vec<MemberConcentration> = system
        .members()
        .par_iter()
        .map(|phi| {
            let phih = fourier_transform(phi)?;
            let a = clamp_defect(concentration_on_set(phi, &setup.t_mask)?);
            let b = clamp_defect(concentration_on_set(&phih, &setup.w_mask)?);
            let rayleigh = rayleigh_quotient(&setup, phi)?;
            Ok(MemberConcentration { a, b, rayleigh })
        })
        .collect::<Result<_>>()?;
    let sum = |f: &dyn Fn(&MemberConcentration) -> f64| per_member.iter().map(f).sum::<f64>();
    let lhs_sum = sum(&|m| 1.0 - 1.5 * m.a - 1.5 * m.b);
    let time_sided_sum = sum(&|m| 1.0 - 2.0 * m.a - m.b);
    let freq_sided_sum = sum(&|m| 1.0 - m.a - 2.0 * m.b);
    let rayleigh_sum = sum(&|m| m.rayleigh);
    let rayleigh_margin = per_member
        .iter()
        .map(|m| m.rayleigh - (1.0 - 2.0 * m.a - m.b).max(1.0 - m.a - 2.0 * m.b))
        .fold(f64::INFINITY, f64::min);
    let bound = setup.analytic_product();
    let mask_bound = setup.mask_product();
    let trace = trace_q(&setup);
    Ok(ConcentrationAudit {
        pass: lhs_sum <= bound + LOCALIZATION_SLACK,
        majorization_pass: rayleigh_sum <= trace + MAJORIZATION_SLACK,
        per_member,
        lhs_sum,
        time_sided_sum,
        freq_sided_sum,
        bound,
        mask_bound,
        rayleigh_sum,
        rayleigh_margin,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    Ok(())
}

/// Largest number of orthonormal vectors ε-concentrated on B(0, r₀) in time
/// and on B(0, ρ₀) in frequency: πᵈ r₀ᵈ ρ₀ᵈ / ((1 − 3ε) Γ(d/2 + 1)²).
pub fn concentration_count_bound(r0: f64, rho0: f64, eps: f64, d: usize) -> Result<f64> {
    check_eps(eps)?;
    if d == 0 || !(r0 >= 0.0) || !(rho0 >= 0.0) {
        return Err(Error::InvalidArgument("radii must be nonnegative and d >= 1".into()));
    }
    let v = unit_ball_volume(d);
    Ok(v * v * (r0 * rho0).powi(d as i32) / (1.0 - 3.0 * eps))
}

/// (1 − 3ε)^{−1} K_φ(ε) K_ψ(ε) for unit envelopes φ (time) and ψ (frequency).
pub fn umbrella_bound(phi: &SampledFunction, psi: &SampledFunction, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let (kp, _) = k_epsilon(phi, eps)?;
    let (kq, _) = k_epsilon(psi, eps)?;
    Ok(kp * kq / (1.0 - 3.0 * eps))
}

/// Count bound for systems with τ_p(φ_n) ≤ J and τ_p(φ̂_n) ≤ K: by Chebyshev
/// every member is ¼-concentrated on balls of radii 16^{1/p} J and
/// 16^{1/p} K, which feeds [`concentration_count_bound`].
pub fn jk_count_bound(j: f64, k: f64, p: f64, d: usize) -> Result<f64> {
    if !(j > 0.0 && k > 0.0 && p > 0.0) {
        return Err(Error::InvalidArgument("J, K and p must be positive".into()));
    }
    let eps: f64 = 0.25;
    let factor = (eps * eps).powf(-1.0 / p);
    concentration_count_bound(factor * j, factor * k, eps, d)
}

/// Smallest radius r (up to sample resolution) such that the open ball
/// B(0, r) carries all but ε² of the mass of `f` in its own domain.
pub fn concentration_radius(f: &SampledFunction, eps: f64) -> Result<f64> {
    require_unit(f)?;
    let grid = f.grid();
    let dim = grid.dim();
    let cell = grid.cell_volume(f.domain());
    let mut pts: Vec<(f64, f64)> = f
        .samples()
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let p = grid.point(idx, f.domain());
            (p[..dim].iter().map(|v| v * v).sum::<f64>().sqrt(), z.norm_sqr() * cell)
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite radii"));
    let mut tail = vec![0.0; pts.len() + 1];
    for m in (0..pts.len()).rev() {
        tail[m] = tail[m + 1] + pts[m].1;
    }
    let m = (0..=pts.len()).find(|&m| tail[m] <= eps * eps).unwrap_or(pts.len());
    Ok(if m == 0 { 0.0 } else { pts[m - 1].0 * (1.0 + 1e-12) + f64::MIN_POSITIVE })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountAudit {
    pub count: usize,
    pub r0: f64,
    pub rho0: f64,
    pub eps: f64,
    pub bound: f64,
    /// Largest mass of a member outside its balls; must be ≤ ε².
    pub worst_tail: f64,
    pub pass: bool,
}

/// Measures the radii at which every member is ε-concentrated and checks the
/// member count against [`concentration_count_bound`] at those radii.
pub fn concentration_count_audit(system: &OrthonormalSystem, eps: f64) -> Result<CountAudit> {
    check_eps(eps)?;
    let dim = system.grid().dim();
    let radii: Vec<(f64, f64, SampledFunction)> = system
        .members()
        .par_iter()
        .map(|f| {
            let fh = fourier_transform(f)?;
            Ok((concentration_radius(f, eps)?, concentration_radius(&fh, eps)?, fh))
        })
        .collect::<Result<_>>()?;
    let r0 = radii.iter().map(|r| r.0).fold(0.0, f64::max);
    let rho0 = radii.iter().map(|r| r.1).fold(0.0, f64::max);
    let origin = vec![0.0; dim];
    let t_ball = MeasurableSet::ball(origin.clone(), r0)?;
    let w_ball = MeasurableSet::ball(origin, rho0)?;
    let t_mask = t_ball.mask_on(system.grid(), Domain::Time)?;
    let w_mask = w_ball.mask_on(system.grid(), Domain::Frequency)?;
    let mut worst_tail = 0.0f64;
    for (f, (_, _, fh)) in system.members().iter().zip(&radii) {
        worst_tail = worst_tail.max(1.0 - concentration_on_set(f, &t_mask)?);
        worst_tail = worst_tail.max(1.0 - concentration_on_set(fh, &w_mask)?);
    }
    let bound = concentration_count_bound(r0, rho0, eps, dim)?;
    let count = system.len();
    Ok(CountAudit {
        count,
        r0,
        rho0,
        eps,
        bound,
        worst_tail,
        pass: (count as f64) <= bound && worst_tail <= eps * eps + 1e-12,
    })
}

/// A unit-norm function vanishing on the closed ball |x| ≤ b whose transform
/// has minimal mass on |ξ| ≤ c.
#[derive(Debug, Clone)]
pub struct Annihilation {
    pub function: SampledFunction,
    /// ‖χ_{|ξ|≤c} f̂‖₂ measured through the FFT.
    pub residual: f64,
    /// The same quantity from the dense solve.
    pub solver_residual: f64,
    pub free_samples: usize,
    pub constrained_frequencies: usize,
}

/// Entry budget for the dense constraint matrix.
pub const ANNIHILATION_BUDGET: usize = 1 << 24;
const EIGEN_LIMIT: usize = 1024;

pub fn annihilating_function(b: f64, c: f64, grid: &GridSpec) -> Result<Annihilation> {
    if !(b >= 0.0 && c >= 0.0) {
        return Err(Error::InvalidArgument("radii must be nonnegative".into()));
    }
    for a in grid.axes() {
        let (lo, hi) = a.span(Domain::Time);
        if -b < lo || b >= hi {
            return Err(Error::InfeasibleGeometry(format!("ball of radius {b} does not fit the time box")));
        }
        let (flo, fhi) = a.span(Domain::Frequency);
        if -c < flo || c >= fhi {
            return Err(Error::InfeasibleGeometry(format!("ball of radius {c} does not fit the frequency box")));
        }
    }
    let dim = grid.dim();
    let free = Mask::from_predicate(grid, Domain::Time, |x| x.iter().map(|v| v * v).sum::<f64>() > b * b).indices();
    let band = Mask::from_predicate(grid, Domain::Frequency, |x| x.iter().map(|v| v * v).sum::<f64>() <= c * c);
    let rows = band.indices();
    if free.is_empty() {
        return Err(Error::InfeasibleGeometry("the ball covers the whole grid".into()));
    }
    if free.len().saturating_mul(rows.len()) > ANNIHILATION_BUDGET {
        return Err(Error::Budget { size: free.len() * rows.len(), limit: ANNIHILATION_BUDGET });
    }
    // A maps orthonormal sample coefficients on the free set to unitary-DFT
    // coefficients on the band: A_kn = N^{−1/2} e^{−2πi ξ_k·x_n}.
    let scale = 1.0 / (grid.len() as f64).sqrt();
    let a = DMatrix::from_fn(rows.len(), free.len(), |i, j| {
        let xi = grid.point(rows[i], Domain::Frequency);
        let x = grid.point(free[j], Domain::Time);
        let t: f64 = (0..dim).map(|m| xi[m] * x[m]).sum();
        let (cs, sn) = turn(t);
        Complex64::new(cs, -sn) * scale
    });

    let coeffs: DVector<Complex64> = if free.len() > rows.len() {
        // null(A) is nontrivial: project a high-frequency start onto it.
        let q = a.adjoint().qr().q();
        let mut u = DVector::from_fn(free.len(), |j, _| {
            let m = grid.unravel(free[j]);
            Complex64::new(if (m[0] + m[1]) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        });
        for _ in 0..2 {
            let proj = &q * (q.adjoint() * &u);
            u -= proj;
        }
        let n = u.norm();
        if n == 0.0 {
            return Err(Error::InfeasibleGeometry("projection of the start vector vanished".into()));
        }
        u / Complex64::new(n, 0.0)
    } else {
        smallest_right_singular_vector(&a)?
    };
    let solver_residual = (&a * &coeffs).norm();

    let root_cell = grid.cell_volume(Domain::Time).sqrt();
    let mut f = SampledFunction::zeros(grid, Domain::Time);
    {
        let s = f.samples_mut();
        for (j, &n) in free.iter().enumerate() {
            s[n] = coeffs[j] / root_cell;
        }
    }
    let fh = fourier_transform(&f)?;
    let residual = band.apply(&fh)?.norm();
    Ok(Annihilation {
        function: f,
        residual,
        solver_residual,
        free_samples: free.len(),
        constrained_frequencies: rows.len(),
    })
}

fn smallest_right_singular_vector(a: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let gram = a.adjoint() * a;
    let n = gram.nrows();
    if n <= EIGEN_LIMIT {
        let eig = gram.symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.partial_cmp(y.1).expect("finite eigenvalues"))
            .expect("nonempty");
        return Ok(eig.eigenvectors.column(imin).into_owned());
    }
    // Inverse iteration with shift 0, regularized at the rounding level.
    let shift = Complex64::new(1e-14 * gram.norm(), 0.0);
    let shifted = &gram + DMatrix::from_diagonal_element(n, n, shift);
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |j, _| Complex64::new(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    v /= Complex64::new(v.norm(), 0.0);
    for _ in 0..50 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::InfeasibleGeometry("singular system in inverse iteration".into()))?;
        let next = &w / Complex64::new(w.norm(), 0.0);
        let change = (&next - &v).norm().min((&next + &v).norm());
        v = next;
        if change < 1e-13 {
            break;
        }
    }
    Ok(v)
}
