//! One function per subcommand. Each writes its artifacts under `out` and
//! returns whether every audit passed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use tfloc_core::basis::{
    build_even_family, complete_basis_case_i, complete_basis_case_ii, dyadic_example, dyadic_moments,
    homogeneous_family, AnnulusBump, CompletionConfig, ProbeFamily, ProductBump,
};
use tfloc_core::functionals::{dispersion, dyadic_bin_scan};
use tfloc_core::hermite::{hermite_system, hermite_tensor, mean_dispersion_sum_of, HermiteIndex};
use tfloc_core::localization::{
    annihilating_function, localization_audit, LocalizationSetup, LOCALIZATION_SLACK, MAJORIZATION_SLACK,
};
use tfloc_core::{Axis, AuditReport, GridSpec, OrthonormalSystem, Scalar, Table, GRAM_TOLERANCE};

use crate::config::{BuildConfig, BuildSection, LocalizeConfig, SystemSection};
use crate::container::Container;
use crate::output::{bar_chart, load_report, write_atomic, write_csvs, write_report, write_table_plots};
use crate::CliError;

/// Relative tolerance on the Hermite dispersion and mean-dispersion tables.
pub const HERMITE_TOLERANCE: f64 = 1e-6;
/// Lower slack on each member's Rayleigh quotient against its concentration bound.
pub const RAYLEIGH_MARGIN_SLACK: f64 = 1e-9;

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub grid: Option<GridSpec>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: AuditReport,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn emit(ctx: &Context, stem: &str, report: AuditReport, mut written: Vec<PathBuf>) -> Result<Outcome, CliError> {
    written.extend(write_report(&ctx.out, stem, &report)?);
    Ok(Outcome { report, written })
}

pub fn hermite(ctx: &Context, max_k: usize) -> Result<Outcome, CliError> {
    let grid = ctx.grid.clone().unwrap_or_else(GridSpec::default_1d);
    if grid.dim() != 1 {
        return Err(CliError::Usage("hermite needs a one-dimensional grid".into()));
    }
    let hs = hermite_system(max_k, &grid)?;

    let mut disp = Table::new("dispersion", &["k", "delta_numeric", "delta_analytic", "rel_error"]);
    let mut worst_disp = 0.0f64;
    for (k, h) in hs.iter().enumerate() {
        let numeric = dispersion(h)?;
        let analytic = ((2 * k + 1) as f64 / (4.0 * PI)).sqrt();
        let rel = (numeric - analytic).abs() / analytic;
        worst_disp = worst_disp.max(rel);
        disp.push(vec![k as f64, numeric, analytic, rel]);
    }

    let mut mean = Table::new("mean_dispersion", &["n", "value", "target", "rel_error"]);
    let mut worst_mean = 0.0f64;
    let mut running = 0.0;
    for (n, h) in hs.iter().enumerate() {
        running += mean_dispersion_sum_of(std::slice::from_ref(h))?;
        let target = ((n + 1) * (n + 1)) as f64 / (2.0 * PI);
        let rel = (running - target).abs() / target;
        worst_mean = worst_mean.max(rel);
        mean.push(vec![n as f64, running, target, rel]);
    }

    let mut report = AuditReport::new("hermite", &format!("hermite max_k={max_k} grid={grid:?}"));
    report.scalar("dispersion_rel_error_max", Scalar::le(worst_disp, HERMITE_TOLERANCE));
    report.scalar("mean_dispersion_rel_error_max", Scalar::le(worst_mean, HERMITE_TOLERANCE));
    report.table(disp).table(mean);
    let plots = write_table_plots(&ctx.out, "hermite", &report)?;
    emit(ctx, "hermite", report, plots)
}

fn builtin_hermite(max_order: usize, dim: usize, grid: &GridSpec) -> Result<OrthonormalSystem, CliError> {
    let members = match dim {
        1 => hermite_system(max_order, grid)?,
        2 => (0..=max_order)
            .flat_map(|o| HermiteIndex::of_order(2, o))
            .map(|i| hermite_tensor(&i, grid))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(CliError::Usage(format!("hermite systems exist for d = 1, 2, not {dim}"))),
    };
    Ok(OrthonormalSystem::new(members, GRAM_TOLERANCE)?)
}

pub fn localize(ctx: &Context, config: &LocalizeConfig) -> Result<Outcome, CliError> {
    let system = match &config.system {
        SystemSection::Hermite { max_order, dim } => {
            let grid = match (ctx.grid.clone(), config.grid.resolve()?) {
                (Some(g), _) | (None, Some(g)) => g,
                (None, None) => GridSpec::default_for_dim(*dim).map_err(|e| CliError::Usage(e.to_string()))?,
            };
            if grid.dim() != *dim {
                return Err(CliError::Usage(format!("grid is {}-d but the system is {dim}-d", grid.dim())));
            }
            builtin_hermite(*max_order, *dim, &grid)?
        }
        SystemSection::Container { path } => {
            if ctx.grid.is_some() || config.grid.axes.is_some() {
                return Err(CliError::Usage("a container carries its own grid".into()));
            }
            Container::load(&config.base_dir.join(path))?.system()?
        }
    };
    let dim = system.grid().dim();
    let t = config.time_set.to_set(dim)?;
    let w = config.freq_set.to_set(dim)?;

    // The digest covers the samples and sets, not where the samples came from.
    let data = Container::from_system(&system, "")?.digest();
    let inputs = format!("localize data={data} T={} W={}", config.time_set.describe(), config.freq_set.describe());
    let audit = localization_audit(&system, &t, &w)?;
    let trace = LocalizationSetup::new(system.grid().clone(), t, w)?.mask_product();

    let mut report = AuditReport::new("localization_audit", &inputs);
    report.scalar("lhs_sum", Scalar::le(audit.lhs_sum, audit.bound + LOCALIZATION_SLACK));
    report.scalar("rayleigh_sum", Scalar::le(audit.rayleigh_sum, trace + MAJORIZATION_SLACK));
    report.scalar("rayleigh_margin", Scalar::ge(audit.rayleigh_margin, -RAYLEIGH_MARGIN_SLACK));
    report.scalar("bound", Scalar::info(audit.bound));
    report.scalar("trace", Scalar::info(trace));
    report.scalar("time_sided_sum", Scalar::info(audit.time_sided_sum));
    report.scalar("freq_sided_sum", Scalar::info(audit.freq_sided_sum));
    report.scalar("members", Scalar::info(system.len() as f64));
    let mut members = Table::new("members", &["index", "a", "b", "rayleigh"]);
    for (i, m) in audit.per_member.iter().enumerate() {
        members.push(vec![i as f64, m.a, m.b, m.rayleigh]);
    }
    report.table(members);

    let quotients: Vec<f64> = audit.per_member.iter().map(|m| m.rayleigh).collect();
    let svg = bar_chart("Rayleigh quotients", "member", &quotients, Some(1.0));
    let chart = ctx.out.join("localize_rayleigh.svg");
    write_atomic(&chart, svg.as_bytes())?;
    emit(ctx, "localize", report, vec![chart])
}

/// Grid and probe defaults of each construction.
fn build_defaults(section: &BuildSection) -> Result<(GridSpec, ProbeFamily), CliError> {
    let line = |n, h, x0| GridSpec::line(n, h, x0);
    let grid = match section {
        BuildSection::CaseI { d: 1, .. } | BuildSection::CaseII { d: 1, .. } => line(4096, 1.0 / 16.0, -16.0),
        BuildSection::CaseI { .. } | BuildSection::CaseII { .. } => GridSpec::square(256, 0.25, -16.0),
        BuildSection::Even { .. } => GridSpec::square(256, 0.25, -32.0),
        BuildSection::Homogeneous { .. } => {
            GridSpec::new(vec![Axis::new(2048, 1.0 / 32.0, 0.0), Axis::new(1024, 1.0 / 512.0, -1.0)])
        }
        BuildSection::Dyadic { .. } => line(16384, 1.0 / 512.0, -16.0),
    }?;
    let probes = match section {
        BuildSection::CaseII { d: 1, .. } => ProbeFamily { radius: (0.6, 0.9), ..Default::default() },
        BuildSection::Even { .. } => ProbeFamily { count: 2, seed: 11, center_box: 1.0, radius: (0.5, 0.8) },
        _ => ProbeFamily::default(),
    };
    Ok((grid, probes))
}

pub fn build(ctx: &Context, config: &BuildConfig) -> Result<Outcome, CliError> {
    let (default_grid, default_probes) = build_defaults(&config.build)?;
    let grid = match (ctx.grid.clone(), config.grid.resolve()?) {
        (Some(g), _) | (None, Some(g)) => g,
        (None, None) => default_grid,
    };
    let probes = config.probes.apply(default_probes);
    let schedule = config.schedule.apply(CompletionConfig::default());
    let dense = || probes.sample(&grid);

    let (system, mut report) = match &config.build {
        BuildSection::CaseI { d, p, budget } => complete_basis_case_i(&dense()?, *p, *d, *budget, &schedule)?,
        BuildSection::CaseII { d, budget } => complete_basis_case_ii(&dense()?, *d, *budget, &schedule)?,
        BuildSection::Even { d, budget } => build_even_family(*d, &dense()?, *budget, &schedule)?,
        BuildSection::Homogeneous { alpha, j_max } => homogeneous_family(*alpha, &ProductBump::new(), *j_max, &grid)?,
        BuildSection::Dyadic { n_min, n_max } => {
            let system = dyadic_example(&AnnulusBump::new(), *n_min..=*n_max, &grid)?;
            let mut report = AuditReport::new("dyadic_example", &format!("n={n_min}..={n_max} grid={grid:?}"));
            report.scalar("gram_deviation", Scalar::le(system.gram_deviation(), GRAM_TOLERANCE));
            let mut table = Table::new("moments", &["n", "mean_time", "mean_freq", "dispersion_product"]);
            for (n, m) in (*n_min..=*n_max).zip(dyadic_moments(&system)?) {
                table.push(vec![n as f64, m[0], m[1], m[2]]);
            }
            report.table(table);
            (system, report)
        }
    };

    // Provenance is a pure function of the inputs, so reruns give identical bytes.
    let provenance = format!("tfloc build {:?} probes={probes:?} schedule={schedule:?}", config.build);
    let container = Container::from_system(&system, &provenance)?;
    report.inputs_digest = tfloc_core::report::digest_hex(format!("{provenance} grid={grid:?}").as_bytes());
    report.scalar("members", Scalar::info(system.len() as f64));
    let path = ctx.out.join("build.ufc");
    container.save(&path)?;
    emit(ctx, "build", report, vec![path])
}

pub fn annihilate(ctx: &Context, b: f64, c: f64, tolerance: f64) -> Result<Outcome, CliError> {
    let grid = match &ctx.grid {
        Some(g) => g.clone(),
        None => GridSpec::line(1024, 1.0 / 64.0, -8.0)?,
    };
    let a = annihilating_function(b, c, &grid)?;
    let mut report = AuditReport::new("annihilating_function", &format!("b={b} c={c} grid={grid:?}"));
    report.scalar("residual", Scalar::le(a.residual, tolerance));
    report.scalar("solver_residual", Scalar::info(a.solver_residual));
    report.scalar("norm", Scalar::info(a.function.norm()));
    report.scalar("free_samples", Scalar::info(a.free_samples as f64));
    report.scalar("constrained_frequencies", Scalar::info(a.constrained_frequencies as f64));
    let container = Container::from_functions(std::slice::from_ref(&a.function), &format!("tfloc annihilate b={b} c={c}"))?;
    let path = ctx.out.join("annihilate.ufc");
    container.save(&path)?;
    emit(ctx, "annihilate", report, vec![path])
}

pub fn scan(ctx: &Context, container: &Path, p: f64) -> Result<Outcome, CliError> {
    let c = Container::load(container)?;
    let system = c.system()?;
    let s = dyadic_bin_scan(&system, p, None)?;
    let mut report = AuditReport::new("dyadic_bin_scan", &format!("scan p={p} data={}", c.digest()));
    let binned: usize = s.bins.iter().map(|b| b.count).sum();
    report.scalar("unbinned_members", Scalar::le((system.len() - binned.min(system.len())) as f64, 0.0));
    report.scalar("sup_product", Scalar::info(s.sup_product));
    report.scalar("scale_d", Scalar::info(s.scale_d));
    report.scalar("shift_bound", Scalar::info(s.shift_bound));
    let mut bins = Table::new("bins", &["k", "count", "bin_bound"]);
    for b in &s.bins {
        bins.push(vec![b.k as f64, b.count as f64, b.bin_bound]);
    }
    let mut moments = Table::new("moments", &["member", "time", "freq"]);
    for (i, (t, f)) in s.time_moments.iter().zip(&s.freq_moments).enumerate() {
        moments.push(vec![i as f64, *t, *f]);
    }
    report.table(bins).table(moments);
    let counts: Vec<f64> = s.bins.iter().map(|b| b.count as f64).collect();
    let chart = ctx.out.join("scan_bins.svg");
    write_atomic(&chart, bar_chart("members per dyadic class", "class", &counts, None).as_bytes())?;
    emit(ctx, "scan", report, vec![chart])
}

/// Re-renders a stored JSON report. A report whose flags disagree with its
/// values is rejected as malformed.
pub fn report(ctx: &Context, json: &Path) -> Result<Outcome, CliError> {
    let report = load_report(json)?;
    if !report.is_self_consistent() {
        return Err(CliError::Input(format!("{}: pass flags disagree with the stored values", json.display())));
    }
    let stem = json.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string();
    let mut written = write_table_plots(&ctx.out, &stem, &report)?;
    written.extend(write_csvs(&ctx.out, &stem, &report)?);
    Ok(Outcome { report, written })
}
