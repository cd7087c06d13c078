//! tfloc: audits and constructions from the command line.
//!
//! Commands:
//!   hermite --max-k K            dispersion and mean-dispersion tables
//!   localize CONFIG              concentration audit of a system against T, W
//!   build CONFIG                 basis construction, written as a UFC1 container
//!   annihilate --b B --c C       function vanishing on |x| <= b, small on |xi| <= c
//!   scan CONTAINER [--p P]       dyadic classes of a stored system
//!   report REPORT.json           re-render a stored report as CSV and SVG
//!
//! Exit status: 0 all audits pass, 1 audit failure, 2 usage, 3 resource or truncation.
//! UL_THREADS caps the worker threads.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tfloc_cli::commands::{self, Context, Outcome};
use tfloc_cli::config::{parse_grid, BuildConfig, LocalizeConfig};
use tfloc_cli::{CliError, EXIT_AUDIT, EXIT_PASS};

#[derive(Parser)]
#[command(name = "tfloc", version, about = "Time-frequency localization audits")]
struct Cli {
    /// Grid override, "N,h,x0" per axis separated by ';'.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Hermite {
        #[arg(long)]
        max_k: usize,
    },
    Localize {
        config: PathBuf,
    },
    Build {
        config: PathBuf,
    },
    Annihilate {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c: f64,
        /// Bound on the residual band mass.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    Scan {
        container: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    Report {
        json: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let grid = cli.grid.as_deref().map(parse_grid).transpose()?;
    let ctx = Context { grid, out: cli.out };
    match cli.command {
        Command::Hermite { max_k } => commands::hermite(&ctx, max_k),
        Command::Localize { config } => commands::localize(&ctx, &LocalizeConfig::load(&config)?),
        Command::Build { config } => commands::build(&ctx, &BuildConfig::load(&config)?),
        Command::Annihilate { b, c, tolerance } => commands::annihilate(&ctx, b, c, tolerance),
        Command::Scan { container, p } => commands::scan(&ctx, &container, p),
        Command::Report { json } => commands::report(&ctx, &json),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("UL_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("UL_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match configure_threads().and_then(|_| run(cli)) {
        Ok(outcome) => {
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            if outcome.passed() {
                println!("{}: pass", outcome.report.audit_name);
                EXIT_PASS
            } else {
                eprintln!("{}: FAIL {}", outcome.report.audit_name, outcome.report.failures().join(", "));
                EXIT_AUDIT
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
