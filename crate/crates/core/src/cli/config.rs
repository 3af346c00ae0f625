//! Run configuration: one JSON document per invocation.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::models::ModelSpec;
use crate::series::Which;
use crate::tl_solver::{MarchOptions, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Curve,
    Series,
    Table,
    Gse,
    Weight,
    Overlap,
    Density,
    Crosscheck,
    Classify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curve => "curve",
            Command::Series => "series",
            Command::Table => "table",
            Command::Gse => "gse",
            Command::Weight => "weight",
            Command::Overlap => "overlap",
            Command::Density => "density",
            Command::Crosscheck => "crosscheck",
            Command::Classify => "classify",
        }
    }

    pub fn default_format(self) -> Format {
        match self {
            Command::Curve | Command::Weight | Command::Overlap | Command::Density => Format::Csv,
            _ => Format::Json,
        }
    }

    pub fn supports_csv(self) -> bool {
        matches!(
            self,
            Command::Curve | Command::Weight | Command::Overlap | Command::Density | Command::Series
        )
    }

    pub fn needs_model(self) -> bool {
        self != Command::Table
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub command: Option<Command>,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub output: OutputSpec,
}

/// An explicit list, or `start..=stop` in steps of `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(format!("invalid range {start}..{stop} step {step}"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 10_000_000 {
                    return Err("range has too many points".into());
                }
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err("grid contains a non-finite value".into());
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("grid must be strictly increasing".into());
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_nodes")]
    pub initial_nodes: usize,
}

fn default_tolerance() -> f64 {
    crate::tl_solver::SOLVER_TOLERANCE
}

fn default_nodes() -> usize {
    crate::tl_solver::DEFAULT_NODES
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: default_tolerance(),
            initial_nodes: default_nodes(),
        }
    }
}

impl SolverParams {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            initial_nodes: self.initial_nodes,
            ..SolverOptions::default()
        }
    }

    pub fn validate(&self) -> Result<(), (String, String)> {
        if !(self.tolerance > 0.0) {
            return Err(("solver.tolerance".into(), "must be positive".into()));
        }
        if self.initial_nodes < 4 {
            return Err(("solver.initial_nodes".into(), "must be at least 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    pub s_grid: Grid,
    #[serde(default)]
    pub solver: SolverParams,
    /// Keep the points solved before a failure instead of failing the run.
    #[serde(default)]
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesParams {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    crate::series::DEFAULT_N_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableParams {
    pub n: Option<usize>,
    pub which: Option<Which>,
    #[serde(default = "default_table_n_max")]
    pub n_max: usize,
}

fn default_table_n_max() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    pub epsilon: Grid,
    #[serde(rename = "N")]
    pub n_sites: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub s: f64,
    #[serde(default = "default_density_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub solver: SolverParams,
}

fn default_density_nodes() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyParams {
    pub xi_samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "tol_series")]
    pub series: f64,
    #[serde(default = "tol_march")]
    pub march: f64,
    #[serde(default = "tol_finite")]
    pub finite: f64,
}

fn tol_series() -> f64 {
    1e-3
}

fn tol_march() -> f64 {
    1e-4
}

fn tol_finite() -> f64 {
    5e-2
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            series: tol_series(),
            march: tol_march(),
            finite: tol_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarchParams {
    #[serde(default = "march_half_width")]
    pub half_width: f64,
    #[serde(default = "march_dt")]
    pub dt: f64,
    #[serde(default = "march_ds")]
    pub ds: f64,
}

fn march_half_width() -> f64 {
    MarchOptions::default().half_width
}

fn march_dt() -> f64 {
    MarchOptions::default().dt
}

fn march_ds() -> f64 {
    MarchOptions::default().ds
}

impl Default for MarchParams {
    fn default() -> Self {
        MarchParams {
            half_width: march_half_width(),
            dt: march_dt(),
            ds: march_ds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosscheckParams {
    pub s_values: Grid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub march: MarchParams,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// System size of the finite-N route; omitted to skip it.
    #[serde(rename = "N")]
    pub n_sites: Option<u64>,
}
