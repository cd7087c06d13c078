//! Completion of an orthonormal sequence by blocks of modulated bumps.
//!
//! Each step takes a residual f orthogonal to everything emitted so far,
//! picks a dyadic scale s whose Ψ-block is supported away from f and the
//! earlier members, and emits
//! β_l = θ J^{−1/2} f + Σ_{n<l} σ_n Ψ_n + γ_l Ψ_l, l = 1..J,
//! with γ, σ chosen so that the β's are orthonormal.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{dispersion, i_p, mean_vector, require_unit, sobolev_i, tau_p, tau_p_shifted};
use crate::grid::{fourier_transform, gram_deviation, inner_product, GridSpec, Mask, OrthonormalSystem, SampledFunction};
use crate::report::{AuditReport, Scalar, Table};
use crate::Complex64;

use super::bump::{block_size, enumeration, psi_block, AtomKind, Bump, BumpSpec};

/// Residuals with a norm at or below this are treated as zero.
pub const ZERO_RESIDUAL: f64 = 1e-10;

/// Lower bound of the completeness certificate.
pub const CERTIFICATE_FLOOR: f64 = 1.0 / 16.0;

/// Slack on the certificate floor.
pub const CERTIFICATE_SLACK: f64 = 1e-6;

/// Scale admission rule checked by [`bourgain_step`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Admission {
    /// 2^{ds} > max{I_p(f), 2^{sp} I_p(f̂)}.
    Fixed { p: f64 },
    /// 2^{ds} > I_d(f).
    Adaptive,
    Unchecked,
}

impl Admission {
    /// Whether `s` is admissible for `f`; returns the two sides.
    pub fn evaluate(&self, f: &SampledFunction, s: u32) -> Result<(bool, f64, f64)> {
        let d = f.grid().dim() as f64;
        let lhs = 2f64.powf(d * s as f64);
        match *self {
            Admission::Fixed { p } => {
                let time = i_p(f, p)?;
                let freq = i_p(&fourier_transform(f)?, p)? * 2f64.powf(s as f64 * p);
                let rhs = time.max(freq);
                Ok((lhs > rhs, lhs, rhs))
            }
            Admission::Adaptive => {
                let rhs = i_p(f, d)?;
                Ok((lhs > rhs, lhs, rhs))
            }
            Admission::Unchecked => Ok((true, lhs, f64::NAN)),
        }
    }
}

/// Measurements of one emitted member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub probe: usize,
    pub block: usize,
    pub s: u32,
    pub j: Vec<i64>,
    /// τ_p(β).
    pub tau_time: f64,
    /// τ_p(β̂, 2^{−s} j).
    pub tau_freq: f64,
    pub mean_time: f64,
    pub mean_freq: f64,
    /// Δ(β) Δ(β̂).
    pub dispersion_product: f64,
}

impl MemberRecord {
    pub fn product(&self) -> f64 {
        self.tau_time * self.tau_freq
    }
}

/// Measurements of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub probe: usize,
    pub block: usize,
    pub s: u32,
    pub theta: f64,
    pub j_s: usize,
    pub f_norm_sq: f64,
    /// max_l |γ_l² + θ²‖f‖²/J + Σ_{n<l} σ_n² − 1|.
    pub gamma_identity: f64,
    /// max_l |σ_l γ_l + θ²‖f‖²/J + Σ_{n<l} σ_n²|.
    pub sigma_identity: f64,
    /// min_l |γ_l| − (1 − 2θ²/J).
    pub gamma_margin: f64,
    /// θ/J − max_l |σ_l|.
    pub sigma_margin: f64,
    pub admission_lhs: f64,
    pub admission_rhs: f64,
}

/// Everything a completion run carries from step to step. Moved, never
/// shared.
#[derive(Debug, Clone)]
pub struct CompletionState {
    grid: GridSpec,
    bump: Arc<Bump>,
    kind: AtomKind,
    admission: Admission,
    p: f64,
    emitted: Vec<SampledFunction>,
    members: Vec<MemberRecord>,
    steps: Vec<StepRecord>,
    occupied: Mask,
    /// Residual g_t and bookkeeping of the last step.
    pub residual: Option<SampledFunction>,
    pub scale: Option<u32>,
    pub theta: f64,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    pub j_s: usize,
    pub enumeration: Vec<Vec<i64>>,
    pub sobolev: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Vec<f64>,
    pub cursor: usize,
    last_block: Vec<SampledFunction>,
}

impl CompletionState {
    pub fn new(grid: &GridSpec, bump: Arc<Bump>, kind: AtomKind, admission: Admission, p: f64) -> Result<Self> {
        if bump.dim() != grid.dim() {
            return Err(Error::GridMismatch("bump and grid dimensions differ".into()));
        }
        Ok(CompletionState {
            grid: grid.clone(),
            bump,
            kind,
            admission,
            p,
            emitted: Vec::new(),
            members: Vec::new(),
            steps: Vec::new(),
            occupied: Mask::empty(grid, crate::Domain::Time),
            residual: None,
            scale: None,
            theta: 0.0,
            gamma: Vec::new(),
            sigma: Vec::new(),
            j_s: 0,
            enumeration: Vec::new(),
            sobolev: None,
            lambda: None,
            kappa: Vec::new(),
            cursor: 0,
            last_block: Vec::new(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn emitted(&self) -> &[SampledFunction] {
        &self.emitted
    }

    pub fn members(&self) -> &[MemberRecord] {
        &self.members
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// The Ψ-block used by the last step.
    pub fn last_block(&self) -> &[SampledFunction] {
        &self.last_block
    }

    /// Union of the supports of everything emitted and every residual fed in.
    pub fn occupied(&self) -> &Mask {
        &self.occupied
    }

    /// f − P f onto the emitted members, with one reorthogonalization pass.
    pub fn residual_of(&self, f: &SampledFunction) -> Result<SampledFunction> {
        let mut r = f.clone();
        for _ in 0..2 {
            for b in &self.emitted {
                let c = inner_product(&r, b)?;
                r = r.axpy(-c, b)?;
            }
        }
        Ok(r)
    }

    /// ‖P f‖² = Σ |⟨f, b⟩|² over the emitted members.
    pub fn projection_norm_sq(&self, f: &SampledFunction) -> Result<f64> {
        projection_norm_sq(&self.emitted, f)
    }

    pub fn into_system(self) -> Result<OrthonormalSystem> {
        OrthonormalSystem::new(self.emitted, crate::GRAM_TOLERANCE)
    }
}

pub(crate) fn projection_norm_sq(members: &[SampledFunction], f: &SampledFunction) -> Result<f64> {
    let mut total = 0.0;
    for b in members {
        total += inner_product(f, b)?.norm_sqr();
    }
    Ok(total)
}

/// γ and σ for a block of size J with c = θ²‖f‖²/J:
/// γ_l = (1 − c − S_l)^{1/2}, σ_l = −(c + S_l)/γ_l, S_l = Σ_{n<l} σ_n².
pub fn block_coefficients(theta: f64, f_norm_sq: f64, j_s: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = theta * theta * f_norm_sq / j_s as f64;
    let mut gamma = Vec::with_capacity(j_s);
    let mut sigma = Vec::with_capacity(j_s.saturating_sub(1));
    let mut s_acc = 0.0;
    for l in 0..j_s {
        let g2 = 1.0 - c - s_acc;
        if !(g2 > 0.0) {
            return Err(Error::InvalidArgument(format!("θ = {theta} too large for ‖f‖² = {f_norm_sq}")));
        }
        let g = g2.sqrt();
        gamma.push(g);
        if l + 1 < j_s {
            let sg = -(c + s_acc) / g;
            sigma.push(sg);
            s_acc += sg * sg;
        }
    }
    Ok((gamma, sigma))
}

/// One block of the completion. `f` must be the current residual, already
/// orthogonal to everything in `state`.
pub fn bourgain_step(mut state: CompletionState, f: &SampledFunction, s: u32, theta: f64) -> Result<CompletionState> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::InvalidArgument(format!("θ = {theta} outside (0, 1/2)")));
    }
    if f.grid() != &state.grid {
        return Err(Error::GridMismatch("residual lives on a different grid".into()));
    }
    if let Some(prev) = state.scale {
        if s <= prev {
            return Err(Error::AdmissionRuleViolated(format!("scale {s} does not exceed the previous scale {prev}")));
        }
    }
    let (ok, lhs, rhs) = state.admission.evaluate(f, s)?;
    if !ok {
        return Err(Error::AdmissionRuleViolated(format!("2^(ds) = {lhs} does not exceed {rhs:.6} at s = {s}")));
    }

    let block = psi_block(&state.bump, s, &state.grid, state.kind)?;
    let mut block_mask = Mask::empty(&state.grid, crate::Domain::Time);
    for psi in &block {
        block_mask.union_with(&Mask::support_of(psi))?;
    }
    let mut taken = state.occupied.clone();
    taken.union_with(&Mask::support_of(f))?;
    if block_mask.intersects(&taken)? {
        return Err(Error::SupportCollision(format!(
            "the scale-{s} block overlaps the residual or earlier members"
        )));
    }

    let j_s = block.len();
    let f_norm_sq = f.norm_sq();
    let (gamma, sigma) = block_coefficients(theta, f_norm_sq, j_s)?;
    let c = theta * theta * f_norm_sq / j_s as f64;

    let mut gamma_identity = 0.0f64;
    let mut sigma_identity = 0.0f64;
    let mut s_acc = 0.0;
    for l in 0..j_s {
        gamma_identity = gamma_identity.max((gamma[l] * gamma[l] + c + s_acc - 1.0).abs());
        if l < sigma.len() {
            sigma_identity = sigma_identity.max((sigma[l] * gamma[l] + c + s_acc).abs());
            s_acc += sigma[l] * sigma[l];
        }
    }
    let jf = j_s as f64;
    let gamma_margin = gamma.iter().cloned().fold(f64::INFINITY, f64::min) - (1.0 - 2.0 * theta * theta / jf);
    let sigma_margin = theta / jf - sigma.iter().map(|v| v.abs()).fold(0.0, f64::max);

    // β_l = a f + R_l + γ_l Ψ_l with R_{l+1} = R_l + σ_l Ψ_l.
    let a = theta / jf.sqrt();
    let base = f.scaled(Complex64::new(a, 0.0));
    let mut running = base.clone();
    let mut betas = Vec::with_capacity(j_s);
    for l in 0..j_s {
        betas.push(running.axpy(Complex64::new(gamma[l], 0.0), &block[l])?);
        if l < sigma.len() {
            running = running.axpy(Complex64::new(sigma[l], 0.0), &block[l])?;
        }
    }

    let block_index = state.steps.len();
    let en = enumeration(s, state.grid.dim());
    let p = state.p;
    let records: Vec<MemberRecord> = betas
        .iter()
        .zip(&en)
        .map(|(b, j)| member_record(b, j, s, p, state.cursor, block_index))
        .collect::<Result<_>>()?;

    state.steps.push(StepRecord {
        probe: state.cursor,
        block: block_index,
        s,
        theta,
        j_s,
        f_norm_sq,
        gamma_identity,
        sigma_identity,
        gamma_margin,
        sigma_margin,
        admission_lhs: lhs,
        admission_rhs: rhs,
    });
    state.members.extend(records);
    state.emitted.extend(betas);
    state.occupied = taken;
    state.occupied.union_with(&block_mask)?;
    state.scale = Some(s);
    state.theta = theta;
    state.gamma = gamma;
    state.sigma = sigma;
    state.j_s = j_s;
    state.enumeration = en;
    state.residual = Some(f.clone());
    state.last_block = block;
    Ok(state)
}

fn member_record(b: &SampledFunction, j: &[i64], s: u32, p: f64, probe: usize, block: usize) -> Result<MemberRecord> {
    let bh = fourier_transform(b)?;
    let shift: Vec<f64> = j.iter().map(|&v| v as f64 * 2f64.powi(-(s as i32))).collect();
    let norm = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(MemberRecord {
        probe,
        block,
        s,
        j: j.to_vec(),
        tau_time: tau_p(b, p)?,
        tau_freq: tau_p_shifted(&bh, p, &shift)?,
        mean_time: norm(mean_vector(b)?),
        mean_freq: norm(mean_vector(&bh)?),
        dispersion_product: dispersion(b)? * dispersion(&bh)?,
    })
}

/// Knobs of a completion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    pub bump: BumpSpec,
    /// Fixed θ of Case I.
    pub theta: f64,
    /// Smallest scale tried.
    pub s_min: u32,
    /// Largest scale tried before the run gives up.
    pub s_max: u32,
    /// Case II: blocks per dense element before the certificate may stop the loop.
    pub min_steps: usize,
    /// Case II: hard cap on blocks per dense element.
    pub max_steps: usize,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig { bump: BumpSpec::default(), theta: 0.25, s_min: 0, s_max: 8, min_steps: 1, max_steps: 8 }
    }
}

/// Projection certificate for one dense element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub probe: usize,
    pub blocks: usize,
    /// Σ |⟨f_k, b⟩|² over all members emitted after processing f_k.
    pub direct: f64,
    /// ‖f_k − f‖² + θ²‖f‖⁴ for Case I, 1 − ‖g_{T+1}‖² for Case II.
    pub closed_form: f64,
    pub skipped: bool,
}

/// One inner step of the adaptive loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveStep {
    pub probe: usize,
    pub t: usize,
    pub s: u32,
    pub theta: f64,
    pub lambda: f64,
    pub g_norm_sq: f64,
    pub sobolev: f64,
    pub sobolev_next: f64,
    /// ‖g_{t+1}^{proj} − g_{t+1}^{closed}‖₂.
    pub path_gap: f64,
    /// max_n |κ_n| / (2θ J^{−1/2} ‖g‖²).
    pub kappa_ratio: f64,
}

impl AdaptiveStep {
    /// (I(g_{t+1}) − λ² I(g_t)) / (θ² ‖g_t‖⁴).
    pub fn growth_constant(&self) -> f64 {
        (self.sobolev_next - self.lambda * self.lambda * self.sobolev)
            / (self.theta * self.theta * self.g_norm_sq * self.g_norm_sq)
    }
}

fn require_dense(dense: &[SampledFunction], d: usize) -> Result<GridSpec> {
    let first = dense.first().ok_or_else(|| Error::InvalidArgument("empty dense sequence".into()))?;
    let grid = first.grid().clone();
    if grid.dim() != d {
        return Err(Error::GridMismatch(format!("dense sequence is {}-d, expected {d}-d", grid.dim())));
    }
    for f in dense {
        if f.grid() != &grid {
            return Err(Error::GridMismatch("dense elements on different grids".into()));
        }
        require_unit(f)?;
    }
    Ok(grid)
}

fn smallest_admissible(state: &CompletionState, f: &SampledFunction, config: &CompletionConfig) -> Result<u32> {
    let lo = state.scale.map_or(config.s_min, |s| (s + 1).max(config.s_min));
    let mut last = (f64::NAN, f64::NAN);
    for s in lo..=config.s_max {
        let (ok, lhs, rhs) = state.admission.evaluate(f, s)?;
        if ok {
            return Ok(s);
        }
        last = (lhs, rhs);
    }
    Err(Error::AdmissionRuleViolated(format!(
        "no scale in {lo}..={} is admissible (last: {} vs {:.6})",
        config.s_max, last.0, last.1
    )))
}

/// Case I (p < d): fixed θ, one block per dense element.
pub fn complete_basis_case_i(
    dense: &[SampledFunction],
    p: f64,
    d: usize,
    budget: usize,
    config: &CompletionConfig,
) -> Result<(OrthonormalSystem, AuditReport)> {
    if !(p > 0.0 && p < d as f64) {
        return Err(Error::InvalidArgument(format!("Case I needs 0 < p < d, got p = {p}, d = {d}")));
    }
    let grid = require_dense(dense, d)?;
    let bump = Arc::new(Bump::new(config.bump, d)?);
    let mut state = CompletionState::new(&grid, bump, AtomKind::Plain, Admission::Fixed { p }, p)?;
    let theta = config.theta;
    let mut certificates = Vec::new();
    let mut budget_exhausted = false;

    for (k, fk) in dense.iter().enumerate() {
        state.cursor = k;
        let f = state.residual_of(fk)?;
        if f.norm() <= ZERO_RESIDUAL {
            let direct = state.projection_norm_sq(fk)?;
            certificates.push(Certificate { probe: k, blocks: 0, direct, closed_form: 1.0 - f.norm_sq(), skipped: true });
            continue;
        }
        let s = smallest_admissible(&state, &f, config)?;
        if state.emitted().len() + block_size(s, d) > budget {
            budget_exhausted = true;
            break;
        }
        state = bourgain_step(state, &f, s, theta)?;
        let direct = state.projection_norm_sq(fk)?;
        let fn2 = f.norm_sq();
        let closed = fk.l2_distance(&f)?.powi(2) + theta * theta * fn2 * fn2;
        certificates.push(Certificate { probe: k, blocks: 1, direct, closed_form: closed, skipped: false });
    }

    let inputs = format!("caseI p={p} d={d} budget={budget} config={config:?} grid={grid:?} dense={}", dense.len());
    let mut report = AuditReport::new("complete_basis_case_i", &inputs);
    report.scalar("budget_exhausted", Scalar::info(if budget_exhausted { 1.0 } else { 0.0 }));
    let closed_gap = certificates
        .iter()
        .filter(|c| !c.skipped)
        .map(|c| (c.direct - c.closed_form).abs())
        .fold(0.0, f64::max);
    report.scalar("certificate_closed_form_gap", Scalar::le(closed_gap, 1e-10));
    finish_report(&mut report, &state, &certificates)?;
    let system = state.into_system()?;
    Ok((system, report))
}

fn adaptive_theta(sobolev: f64) -> f64 {
    (4.0 + sobolev).powf(-0.5)
}

/// Case II (p = d): θ_t = (4 + I(g_t))^{−1/2}, several blocks per dense
/// element until the certificate reaches 1/16.
pub fn complete_basis_case_ii(
    dense: &[SampledFunction],
    d: usize,
    budget: usize,
    config: &CompletionConfig,
) -> Result<(OrthonormalSystem, AuditReport)> {
    let (state, report) = run_adaptive(dense, d, budget, config, AtomKind::Plain, "complete_basis_case_ii")?;
    Ok((state.into_system()?, report))
}

fn run_adaptive(
    dense: &[SampledFunction],
    d: usize,
    budget: usize,
    config: &CompletionConfig,
    kind: AtomKind,
    name: &str,
) -> Result<(CompletionState, AuditReport)> {
    let grid = require_dense(dense, d)?;
    let bump = Arc::new(Bump::new(config.bump, d)?);
    let mut state = CompletionState::new(&grid, bump, kind, Admission::Adaptive, d as f64)?;
    let mut certificates = Vec::new();
    let mut inner = Vec::new();
    let mut budget_exhausted = false;
    let mut capped = 0usize;

    'dense: for (k, fk) in dense.iter().enumerate() {
        state.cursor = k;
        let mut g = state.residual_of(fk)?;
        if g.norm() <= ZERO_RESIDUAL {
            let direct = state.projection_norm_sq(fk)?;
            certificates.push(Certificate { probe: k, blocks: 0, direct, closed_form: 1.0 - g.norm_sq(), skipped: true });
            continue;
        }
        let mut sob = sobolev_i(&g, d)?;
        let mut t = 0usize;
        loop {
            t += 1;
            let theta = adaptive_theta(sob);
            let s = smallest_admissible(&state, &g, config)?;
            if state.emitted().len() + block_size(s, d) > budget {
                budget_exhausted = true;
                let direct = state.projection_norm_sq(fk)?;
                certificates.push(Certificate { probe: k, blocks: t - 1, direct, closed_form: 1.0 - g.norm_sq(), skipped: false });
                break 'dense;
            }
            let g_norm_sq = g.norm_sq();
            state = bourgain_step(state, &g, s, theta)?;
            let first = state.emitted().len() - state.j_s;
            let betas = &state.emitted()[first..];

            let mut g_proj = g.clone();
            for b in betas {
                let c = inner_product(&g, b)?;
                g_proj = g_proj.axpy(-c, b)?;
            }
            let lambda = 1.0 - theta * theta * g_norm_sq;
            let jf = state.j_s as f64;
            let kappa: Vec<f64> = (0..state.j_s)
                .map(|n| {
                    let sig = state.sigma.get(n).copied().unwrap_or(0.0);
                    -(theta / jf.sqrt()) * g_norm_sq * (state.gamma[n] + (state.j_s - n - 1) as f64 * sig)
                })
                .collect();
            let mut g_closed = g.scaled(Complex64::new(lambda, 0.0));
            for (kn, psi) in kappa.iter().zip(state.last_block()) {
                g_closed = g_closed.axpy(Complex64::new(*kn, 0.0), psi)?;
            }
            let path_gap = g_proj.l2_distance(&g_closed)?;
            let kappa_ratio = kappa.iter().map(|v| v.abs()).fold(0.0, f64::max) / (2.0 * theta / jf.sqrt() * g_norm_sq);
            let sob_next = sobolev_i(&g_proj, d)?;
            inner.push(AdaptiveStep {
                probe: k,
                t,
                s,
                theta,
                lambda,
                g_norm_sq,
                sobolev: sob,
                sobolev_next: sob_next,
                path_gap,
                kappa_ratio,
            });
            state.sobolev = Some(sob);
            state.lambda = Some(lambda);
            state.kappa = kappa;
            g = g_proj;
            sob = sob_next;

            let direct = state.projection_norm_sq(fk)?;
            let done = (t >= config.min_steps && direct >= CERTIFICATE_FLOOR) || g.norm() < 0.5;
            if done || t >= config.max_steps {
                if !done {
                    capped += 1;
                }
                certificates.push(Certificate { probe: k, blocks: t, direct, closed_form: 1.0 - g.norm_sq(), skipped: false });
                break;
            }
        }
        state.residual = Some(g);
    }

    let inputs = format!("{name} d={d} budget={budget} config={config:?} grid={grid:?} dense={}", dense.len());
    let mut report = AuditReport::new(name, &inputs);
    report.scalar("budget_exhausted", Scalar::info(if budget_exhausted { 1.0 } else { 0.0 }));
    report.scalar("capped_dense_elements", Scalar::le(capped as f64, 0.0));
    adaptive_section(&mut report, &inner);
    let closed_gap = certificates
        .iter()
        .filter(|c| !c.skipped)
        .map(|c| (c.direct - c.closed_form).abs())
        .fold(0.0, f64::max);
    report.scalar("certificate_closed_form_gap", Scalar::le(closed_gap, 1e-10));
    finish_report(&mut report, &state, &certificates)?;
    Ok((state, report))
}

fn adaptive_section(report: &mut AuditReport, inner: &[AdaptiveStep]) {
    let mut table = Table::new(
        "inner_steps",
        &["probe", "t", "s", "theta", "lambda", "g_norm_sq", "sobolev", "sobolev_next", "path_gap", "kappa_ratio"],
    );
    for st in inner {
        table.push(vec![
            st.probe as f64,
            st.t as f64,
            st.s as f64,
            st.theta,
            st.lambda,
            st.g_norm_sq,
            st.sobolev,
            st.sobolev_next,
            st.path_gap,
            st.kappa_ratio,
        ]);
    }
    report.table(table);
    let gap = inner.iter().map(|s| s.path_gap).fold(0.0, f64::max);
    report.scalar("path_gap_max", Scalar::le(gap, 1e-10));
    let theta_max = inner.iter().map(|s| s.theta).fold(0.0, f64::max);
    let theta_min = inner.iter().map(|s| s.theta).fold(f64::INFINITY, f64::min);
    report.scalar("theta_max", Scalar::lt(theta_max, 0.5));
    report.scalar("theta_min", Scalar::gt(theta_min, 0.0));
    let lambda_max = inner.iter().map(|s| s.lambda).fold(f64::NEG_INFINITY, f64::max);
    report.scalar("lambda_max", Scalar::lt(lambda_max, 1.0));
    report.scalar("kappa_ratio_max", Scalar::lt(inner.iter().map(|s| s.kappa_ratio).fold(0.0, f64::max), 1.0));

    let b_emp = inner.iter().map(AdaptiveStep::growth_constant).fold(0.0, f64::max);
    report.constant("b_emp", b_emp);
    // I(g_t) − I(g_1) − B_emp over every probe and step.
    let mut excess = f64::NEG_INFINITY;
    let mut first: Option<(usize, f64)> = None;
    for st in inner {
        let i1 = match first {
            Some((p, v)) if p == st.probe => v,
            _ => {
                first = Some((st.probe, st.sobolev));
                st.sobolev
            }
        };
        excess = excess.max(st.sobolev_next - i1 - b_emp);
    }
    report.scalar("sobolev_growth_excess", Scalar::le(excess, 1e-12));
}

fn finish_report(report: &mut AuditReport, state: &CompletionState, certificates: &[Certificate]) -> Result<()> {
    let steps = state.steps();
    let members = state.members();
    let gram = gram_deviation(state.emitted())?;
    report.scalar("gram_deviation", Scalar::le(gram, crate::GRAM_TOLERANCE));
    report.scalar("members", Scalar::info(members.len() as f64));
    report.scalar("blocks", Scalar::info(steps.len() as f64));
    let fold_max = |f: &dyn Fn(&StepRecord) -> f64| steps.iter().map(f).fold(0.0, f64::max);
    let fold_min = |f: &dyn Fn(&StepRecord) -> f64| steps.iter().map(f).fold(f64::INFINITY, f64::min);
    report.scalar("gamma_identity_max", Scalar::le(fold_max(&|s| s.gamma_identity), 1e-12));
    report.scalar("sigma_identity_max", Scalar::le(fold_max(&|s| s.sigma_identity), 1e-12));
    report.scalar("gamma_bound_margin", Scalar::ge(fold_min(&|s| s.gamma_margin), 0.0));
    report.scalar("sigma_bound_margin", Scalar::ge(fold_min(&|s| s.sigma_margin), 0.0));

    let mut blocks = Table::new("blocks", &["probe", "block", "s", "theta", "j_s", "f_norm_sq", "product_sup", "admission_lhs", "admission_rhs"]);
    let mut sups = Vec::new();
    for st in steps {
        let sup = members.iter().filter(|m| m.block == st.block).map(MemberRecord::product).fold(0.0, f64::max);
        sups.push(sup);
        blocks.push(vec![
            st.probe as f64,
            st.block as f64,
            st.s as f64,
            st.theta,
            st.j_s as f64,
            st.f_norm_sq,
            sup,
            st.admission_lhs,
            st.admission_rhs,
        ]);
    }
    report.table(blocks);
    let sup = sups.iter().cloned().fold(0.0, f64::max);
    let spread = sup / sups.iter().cloned().fold(f64::INFINITY, f64::min);
    report.constant("product_sup", sup);
    report.scalar("product_sup", Scalar::info(sup));
    report.scalar("product_block_spread", Scalar::le(if sups.is_empty() { 1.0 } else { spread }, 2.0));

    let dim = state.grid().dim();
    let mut cols = vec!["probe", "block", "s"];
    cols.extend(if dim == 1 { vec!["j1"] } else { vec!["j1", "j2"] });
    cols.extend(["tau_time", "tau_freq", "product", "mean_time", "mean_freq", "dispersion_product"]);
    let mut table = Table::new("members", &cols);
    for m in members {
        let mut row = vec![m.probe as f64, m.block as f64, m.s as f64];
        row.extend(m.j.iter().map(|&v| v as f64));
        row.extend([m.tau_time, m.tau_freq, m.product(), m.mean_time, m.mean_freq, m.dispersion_product]);
        table.push(row);
    }
    report.table(table);

    let mut certs = Table::new("certificates", &["probe", "blocks", "direct", "closed_form", "skipped"]);
    for c in certificates {
        certs.push(vec![c.probe as f64, c.blocks as f64, c.direct, c.closed_form, if c.skipped { 1.0 } else { 0.0 }]);
    }
    report.table(certs);
    let worst = certificates.iter().map(|c| c.direct).fold(f64::INFINITY, f64::min);
    report.scalar("certificate_min", Scalar::ge(worst, CERTIFICATE_FLOOR - CERTIFICATE_SLACK));
    Ok(())
}

/// The adaptive completion run with the symmetrized
/// atoms Ψ^(e), whose dilates all have zero mean.
pub fn build_even_family(
    d: usize,
    dense: &[SampledFunction],
    budget: usize,
    config: &CompletionConfig,
) -> Result<(OrthonormalSystem, AuditReport)> {
    if d < 2 {
        return Err(Error::Unsupported("the symmetrized family needs d ≥ 2".into()));
    }
    let (state, mut report) = run_adaptive(dense, d, budget, config, AtomKind::Even, "build_even_family")?;

    let members = state.members();
    let c1 = members.iter().map(|m| m.mean_freq).fold(0.0, f64::max);
    let c2 = members.iter().map(|m| m.dispersion_product).fold(0.0, f64::max);
    let c3 = members.iter().map(|m| m.mean_time).fold(0.0, f64::max);
    report.constant("c1_mean_freq", c1);
    report.constant("c2_dispersion_product", c2);
    report.constant("c3_mean_time", c3);
    report.scalar("mean_freq_max", Scalar::info(c1));
    report.scalar("dispersion_product_max", Scalar::info(c2));
    report.scalar("mean_time_max", Scalar::info(c3));

    let mut per_block = Vec::new();
    for st in state.steps() {
        let v = members.iter().filter(|m| m.block == st.block).map(|m| m.dispersion_product).fold(0.0, f64::max);
        per_block.push(v);
    }
    let spread = if per_block.is_empty() {
        1.0
    } else {
        per_block.iter().cloned().fold(0.0, f64::max) / per_block.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    report.scalar("dispersion_product_block_spread", Scalar::le(spread, 2.0));

    // Atoms of every scale used: zero mean and |Ψ^(e)(x)| = |Ψ^(e)(−x)|.
    let bump = Arc::new(Bump::new(config.bump, d)?);
    let mut atom_mean = 0.0f64;
    let mut symmetry = 0.0f64;
    let grid = state.grid().clone();
    for st in state.steps() {
        for psi in psi_block(&bump, st.s, &grid, AtomKind::Even)? {
            let mu = mean_vector(&psi)?;
            atom_mean = atom_mean.max(mu.iter().map(|v| v.abs()).fold(0.0, f64::max));
            if let Some(v) = mirror_asymmetry(&psi) {
                symmetry = symmetry.max(v);
            }
        }
    }
    report.scalar("atom_mean_max", Scalar::le(atom_mean, 1e-8));
    report.scalar("atom_symmetry_max", Scalar::le(symmetry, 1e-12));
    Ok((state.into_system()?, report))
}

/// max | |f(x)| − |f(−x)| | over grid points whose mirror image is also a
/// grid point; `None` if the grid is not symmetric about the origin.
pub fn mirror_asymmetry(f: &SampledFunction) -> Option<f64> {
    let grid = f.grid();
    for a in grid.axes() {
        if a.x0 != -(a.n as f64) * a.h / 2.0 {
            return None;
        }
    }
    let shape = grid.shape();
    let s = f.samples();
    let mirror = |i: usize, n: usize| if i == 0 { None } else { Some(n - i) };
    let mut worst = 0.0f64;
    for idx in 0..s.len() {
        let p = grid.unravel(idx);
        let q0 = mirror(p[0], shape[0]);
        let q = if grid.dim() == 1 {
            q0
        } else {
            match (q0, mirror(p[1], shape[1])) {
                (Some(a), Some(b)) => Some(a * shape[1] + b),
                _ => None,
            }
        };
        if let Some(q) = q {
            worst = worst.max((s[idx].norm() - s[q].norm()).abs());
        }
    }
    Some(worst)
}

/// ‖P probe‖² onto the system for every probe; the first `dense` probes are
/// held to the 1/16 floor.
pub fn completeness_audit(system: &OrthonormalSystem, probes: &[SampledFunction], dense: usize) -> Result<AuditReport> {
    let mut report = AuditReport::new(
        "completeness_audit",
        &format!("members={} probes={} dense={dense}", system.len(), probes.len()),
    );
    let mut table = Table::new("projections", &["probe", "projection_norm_sq", "dense"]);
    let mut worst = f64::INFINITY;
    for (k, f) in probes.iter().enumerate() {
        require_unit(f)?;
        let v = projection_norm_sq(system.members(), f)?;
        table.push(vec![k as f64, v, if k < dense { 1.0 } else { 0.0 }]);
        if k < dense {
            worst = worst.min(v);
        }
    }
    report.table(table);
    if dense > 0 {
        report.scalar("dense_projection_min", Scalar::ge(worst, CERTIFICATE_FLOOR - CERTIFICATE_SLACK));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_of_a_five_block() {
        let (g, s) = block_coefficients(0.25, 1.0, 5).unwrap();
        assert!((g[0] * g[0] - 0.9875).abs() < 1e-15);
        // ⟨β₁, β₂⟩ = θ²/J + σ₁γ₁.
        assert!((0.0625 / 5.0 + s[0] * g[0]).abs() < 1e-15);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn zero_residual_gives_plain_atoms() {
        let (g, s) = block_coefficients(0.25, 0.0, 9).unwrap();
        assert!(g.iter().all(|&v| v == 1.0));
        assert!(s.iter().all(|&v| v == 0.0));
    }
}
