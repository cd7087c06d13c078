//! TOML run descriptions for `localize` and `build`, and the `--grid` syntax.
//!
//! ```toml
//! [system]
//! source = "hermite"
//! max_order = 3
//!
//! [time_set]
//! shape = "box"
//! lo = [-2.0]
//! hi = [2.0]
//!
//! [freq_set]
//! shape = "ball"
//! center = [0.0]
//! radius = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tfloc_core::basis::{CompletionConfig, ProbeFamily};
use tfloc_core::localization::MeasurableSet;
use tfloc_core::{Axis, GridSpec};

use crate::CliError;

/// A number, optionally written as a ratio such as `1/16`.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Usage(format!("not a number: {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// `"N,h,x0[;N,h,x0]"`, one group per axis.
pub fn parse_grid(spec: &str) -> Result<GridSpec, CliError> {
    let axes = spec
        .split(';')
        .map(|group| {
            let parts: Vec<&str> = group.split(',').collect();
            if parts.len() != 3 {
                return Err(CliError::Usage(format!("grid axis {group:?} must be N,h,x0")));
            }
            let n = parts[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("grid size {:?} is not an integer", parts[0])))?;
            Ok(Axis::new(n, parse_number(parts[1])?, parse_number(parts[2])?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    GridSpec::new(axes).map_err(|e| CliError::Usage(e.to_string()))
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Same syntax as `--grid`.
    pub axes: Option<String>,
}

impl GridSection {
    pub fn resolve(&self) -> Result<Option<GridSpec>, CliError> {
        self.axes.as_deref().map(parse_grid).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSection {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Empty,
}

impl SetSection {
    pub fn to_set(&self, dim: usize) -> Result<MeasurableSet, CliError> {
        let set = match self {
            SetSection::Box { lo, hi } => MeasurableSet::boxed(lo.clone(), hi.clone()),
            SetSection::Ball { center, radius } => MeasurableSet::ball(center.clone(), *radius),
            SetSection::Empty => Ok(MeasurableSet::empty(dim)),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        if set.dim() != dim {
            return Err(CliError::Usage(format!("set is {}-d but the grid is {dim}-d", set.dim())));
        }
        Ok(set)
    }

    pub fn describe(&self) -> String {
        format!("{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSection {
    /// h_0..h_max_order in one dimension, all tensors of order ≤ max_order in two.
    Hermite {
        max_order: usize,
        #[serde(default = "one")]
        dim: usize,
    },
    /// A UFC1 file; relative paths are taken from the config's directory.
    Container { path: PathBuf },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeConfig {
    #[serde(default)]
    pub grid: GridSection,
    pub system: SystemSection,
    pub time_set: SetSection,
    pub freq_set: SetSection,
    /// Where relative container paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl LocalizeConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut c: Self = read_toml(path)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuildSection {
    /// Fixed θ completion, 0 < p < d. `budget` caps the member count.
    #[serde(alias = "caseI")]
    CaseI { d: usize, p: f64, budget: usize },
    /// Adaptive completion with p = d.
    #[serde(alias = "caseII")]
    CaseII { d: usize, budget: usize },
    /// Adaptive completion with symmetrized atoms, d = 2.
    Even { d: usize, budget: usize },
    Homogeneous { alpha: [f64; 2], j_max: u32 },
    Dyadic { n_min: i32, n_max: i32 },
}

/// Overrides of the dense probe family; unset keys keep the construction's defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub center_box: Option<f64>,
    pub radius: Option<[f64; 2]>,
}

impl ProbeSection {
    pub fn apply(&self, mut fam: ProbeFamily) -> ProbeFamily {
        fam.count = self.count.unwrap_or(fam.count);
        fam.seed = self.seed.unwrap_or(fam.seed);
        fam.center_box = self.center_box.unwrap_or(fam.center_box);
        if let Some([a, b]) = self.radius {
            fam.radius = (a, b);
        }
        fam
    }
}

/// Scale schedule and θ overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub theta: Option<f64>,
    pub s_min: Option<u32>,
    pub s_max: Option<u32>,
    pub min_steps: Option<usize>,
    pub max_steps: Option<usize>,
}

impl ScheduleSection {
    pub fn apply(&self, mut c: CompletionConfig) -> CompletionConfig {
        c.theta = self.theta.unwrap_or(c.theta);
        c.s_min = self.s_min.unwrap_or(c.s_min);
        c.s_max = self.s_max.unwrap_or(c.s_max);
        c.min_steps = self.min_steps.unwrap_or(c.min_steps);
        c.max_steps = self.max_steps.unwrap_or(c.max_steps);
        c
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub build: BuildSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub probes: ProbeSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
}

impl BuildConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_toml(path)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))
    }
}
