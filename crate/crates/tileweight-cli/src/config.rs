//! Run configuration: defaults, TOML file, command-line overrides, in that
//! precedence order (command line wins).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Float,
    Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Constant,
    PairExponential,
}

/// Everything a run can be told. Optional fields fall back to defaults at
/// the point of use; subcommands validate what they actually need.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub edge: i64,
    pub tile_size: usize,
    pub ell_bar: Option<i64>,
    /// Box-size grid for `bounds`; falls back to ell_bar.
    pub ell_bars: Option<Vec<i64>>,
    pub family: Family,
    /// Decay length of the pair-exponential family.
    pub ell: f64,
    /// Sweep grid of decay lengths.
    pub ells: Vec<f64>,
    /// Second lattice edge for the sweep uniformity probe.
    pub edge_alt: i64,
    pub budget: u64,
    pub box_budget: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Accuracy and slack for `conditions` and the ladder spectrum.
    pub eps: f64,
    pub s: f64,
    /// `bounds`: emit the closed-form gap table instead of full rungs.
    pub closed_form: bool,
    /// (n_vertices, per_box) pairs for the closed-form table.
    pub closed_form_grid: Vec<(usize, usize)>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 1,
            edge: 8,
            tile_size: 2,
            ell_bar: None,
            ell_bars: None,
            family: Family::PairExponential,
            ell: 2.0,
            ells: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            edge_alt: 12,
            budget: tileweight::exact::DEFAULT_ENUMERATION_BUDGET,
            box_budget: 4,
            mode: Mode::Float,
            seed: 0,
            eps: 0.1,
            s: 0.1,
            closed_form: false,
            closed_form_grid: vec![(100, 10), (1000, 25), (10_000, 100)],
            out: None,
        }
    }
}

/// The TOML file: every field optional so partial files overlay defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dim: Option<usize>,
    edge: Option<i64>,
    tile_size: Option<usize>,
    ell_bar: Option<i64>,
    ell_bars: Option<Vec<i64>>,
    family: Option<Family>,
    ell: Option<f64>,
    ells: Option<Vec<f64>>,
    edge_alt: Option<i64>,
    budget: Option<u64>,
    box_budget: Option<usize>,
    mode: Option<Mode>,
    seed: Option<u64>,
    eps: Option<f64>,
    s: Option<f64>,
    closed_form: Option<bool>,
    closed_form_grid: Option<Vec<(usize, usize)>>,
    out: Option<PathBuf>,
}

/// Command-line overrides shared by the instance-shaped subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Lattice dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Lattice edge L (N = L^d vertices).
    #[arg(long)]
    pub edge: Option<i64>,
    /// Tile size n.
    #[arg(long = "tile-size")]
    pub tile_size: Option<usize>,
    /// Dissection box edge.
    #[arg(long = "ell-bar")]
    pub ell_bar: Option<i64>,
    /// Weighting family.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Pair-exponential decay length.
    #[arg(long)]
    pub ell: Option<f64>,
    /// Second lattice edge for the sweep uniformity probe.
    #[arg(long = "edge-alt")]
    pub edge_alt: Option<i64>,
    /// Accuracy target for spectra and feasibility checks.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Slack exponent for feasibility checks.
    #[arg(long)]
    pub s: Option<f64>,
}

pub fn load(
    config_path: Option<&Path>,
    over: &Overrides,
    out: Option<PathBuf>,
    budget: Option<u64>,
    mode: Option<Mode>,
    seed: Option<u64>,
) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("cannot parse {}: {e}", path.display())))?;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field { cfg.$field = v; })*
            };
        }
        take!(dim, edge, tile_size, family, ell, ells, edge_alt, budget, box_budget, mode, seed, eps, s, closed_form, closed_form_grid);
        if file.ell_bar.is_some() {
            cfg.ell_bar = file.ell_bar;
        }
        if file.ell_bars.is_some() {
            cfg.ell_bars = file.ell_bars;
        }
        if file.out.is_some() {
            cfg.out = file.out;
        }
    }
    macro_rules! take_cli {
        ($($field:ident),*) => {
            $(if let Some(v) = over.$field { cfg.$field = v; })*
        };
    }
    take_cli!(dim, edge, tile_size, family, ell, edge_alt, eps, s);
    if over.ell_bar.is_some() {
        cfg.ell_bar = over.ell_bar;
    }
    if let Some(v) = budget {
        cfg.budget = v;
    }
    if let Some(v) = mode {
        cfg.mode = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if out.is_some() {
        cfg.out = out;
    }
    Ok(cfg)
}
