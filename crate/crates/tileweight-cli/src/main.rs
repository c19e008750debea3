//! Command-line front end: exact partition runs, smoothness sweeps, bound
//! ladders, feasibility reports, and the self-check suite.
//!
//! Exit codes: 0 success, 2 configuration or infeasibility, 3 invariant
//! violation (a result that contradicts a proven inequality — always a bug).

mod checks;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{Family, Mode, Overrides, RunConfig};
use output::{cell_f64, cell_opt, sidecar_path, write_json, write_text, Csv};
use tileweight::conditions::{conditions_params, verify_conditions};
use tileweight::exact;
use tileweight::ladder::{ladder_check, verify_ordering, BoundReport, LadderBudgets};
use tileweight::lattice::{Dissection, Lattice, Norm};
use tileweight::weighting::{
    build_weighting, decay_radius, smoothness, Weighting, WeightingFamily,
};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            msg: msg.into(),
        }
    }

    fn invariant(msg: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            msg: msg.into(),
        }
    }
}

impl From<tileweight::Error> for CliError {
    fn from(e: tileweight::Error) -> CliError {
        match e {
            tileweight::Error::Domain(m) | tileweight::Error::Budget(m) => CliError::config(m),
            tileweight::Error::Invariant(m) => CliError::invariant(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tileweight",
    version,
    about = "Weighted tilings of periodic lattices: exact pressures, bound ladders, and feasibility reports"
)]
struct Cli {
    /// TOML configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (CSV for tables, JSON for conditions).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Enumeration budget in estimated tilings.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Arithmetic mode for exact runs.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Seed for randomized self-checks; echoed into reports.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact partition function and pressure of one instance.
    Exact {
        #[command(flatten)]
        over: Overrides,
    },
    /// Decay-length sweep: smoothness, decay radius, and pressure gap per point.
    Sweep {
        #[command(flatten)]
        over: Overrides,
    },
    /// Bound ladder: unrestricted, occupancy-restricted, and structured rungs.
    Bounds {
        #[command(flatten)]
        over: Overrides,
        /// Emit the closed-form gap table instead of instance rungs.
        #[arg(long)]
        closed_form: bool,
        /// Test hook: corrupt the proportion vector to force an ordering
        /// violation and the invariant exit path.
        #[arg(long, hide = true)]
        corrupt_alpha: bool,
    },
    /// Feasibility targets and inequalities for an accuracy request.
    Conditions {
        #[command(flatten)]
        over: Overrides,
    },
    /// Run the randomized and exhaustive self-check suites.
    Check {
        #[command(flatten)]
        over: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (over, closed_form, corrupt_alpha) = match &cli.cmd {
        Cmd::Exact { over } | Cmd::Sweep { over } | Cmd::Conditions { over } | Cmd::Check { over } => {
            (over.clone(), false, false)
        }
        Cmd::Bounds {
            over,
            closed_form,
            corrupt_alpha,
        } => (over.clone(), *closed_form, *corrupt_alpha),
    };
    let mut cfg = config::load(
        cli.config.as_deref(),
        &over,
        cli.out,
        cli.budget,
        cli.mode,
        cli.seed,
    )?;
    if closed_form {
        cfg.closed_form = true;
    }
    match cli.cmd {
        Cmd::Exact { .. } => cmd_exact(&cfg),
        Cmd::Sweep { .. } => cmd_sweep(&cfg),
        Cmd::Bounds { .. } => cmd_bounds(&cfg, corrupt_alpha),
        Cmd::Conditions { .. } => cmd_conditions(&cfg),
        Cmd::Check { .. } => checks::cmd_check(&cfg),
    }
}

fn family_of(cfg: &RunConfig, ell: f64) -> WeightingFamily {
    match cfg.family {
        Family::Constant => WeightingFamily::Constant,
        Family::PairExponential => WeightingFamily::PairExponential {
            ell,
            norm: Norm::Euclidean,
        },
    }
}

fn family_name(cfg: &RunConfig) -> &'static str {
    match cfg.family {
        Family::Constant => "constant",
        Family::PairExponential => "pair-exponential",
    }
}

fn build_instance(cfg: &RunConfig, edge: i64, ell: f64) -> Result<(Lattice, Weighting), CliError> {
    let lat = Lattice::new(cfg.dim, edge)?;
    let f = build_weighting(&family_of(cfg, ell), lat, cfg.tile_size)?;
    Ok((lat, f))
}

#[derive(Serialize)]
struct ExactResult {
    z: f64,
    pressure: f64,
    z0_hat: f64,
    p0_hat: f64,
    gap: f64,
    smoothness: f64,
    decay_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_rational: Option<String>,
}

#[derive(Serialize)]
struct ExactSidecar<'a> {
    schema: &'static str,
    config: &'a RunConfig,
    result: ExactResult,
}

fn cmd_exact(cfg: &RunConfig) -> Result<(), CliError> {
    let (lat, f) = build_instance(cfg, cfg.edge, cfg.ell)?;
    let result = match cfg.mode {
        Mode::Float => exact::exact_partition_with_budget(&f, cfg.budget)?,
        Mode::Rational => exact::exact_partition_rational(&f, cfg.budget)?,
    };
    let hat = exact::z0_hat(lat.n_vertices(), cfg.tile_size)?;
    let gap = (result.pressure - hat.pressure).abs();
    let sm = smoothness(&f);
    let radius = decay_radius(&f);

    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("exact.csv"));
    let mut csv = Csv::new(&[
        "dim",
        "edge",
        "tile_size",
        "family",
        "ell",
        "mode",
        "seed",
        "z",
        "pressure",
        "z0_hat",
        "p0_hat",
        "gap",
        "smoothness",
        "decay_radius",
    ]);
    csv.row(&[
        cfg.dim.to_string(),
        cfg.edge.to_string(),
        cfg.tile_size.to_string(),
        family_name(cfg).to_string(),
        cell_f64(cfg.ell),
        match cfg.mode {
            Mode::Float => "float".to_string(),
            Mode::Rational => "rational".to_string(),
        },
        cfg.seed.to_string(),
        cell_f64(result.log_z.exp()),
        cell_f64(result.pressure),
        cell_f64(hat.log_z.exp()),
        cell_f64(hat.pressure),
        cell_f64(gap),
        cell_f64(sm),
        cell_f64(radius),
    ]);
    write_text(&out, &csv.finish())?;
    write_json(
        &sidecar_path(&out),
        &ExactSidecar {
            schema: "tileweight-exact-v1",
            config: cfg,
            result: ExactResult {
                z: result.log_z.exp(),
                pressure: result.pressure,
                z0_hat: hat.log_z.exp(),
                p0_hat: hat.pressure,
                gap,
                smoothness: sm,
                decay_radius: radius,
                z_rational: result.z_rational.as_ref().map(|q| q.to_string()),
            },
        },
    )?;
    println!(
        "exact: N={} n={} pressure={} gap={}",
        lat.n_vertices(),
        cfg.tile_size,
        result.pressure,
        gap
    );
    Ok(())
}

#[derive(Serialize, Clone)]
struct SweepRow {
    ell: f64,
    smoothness: f64,
    decay_radius: f64,
    sm_times_r: f64,
    pressure: f64,
    p0_hat: f64,
    gap: f64,
}

#[derive(Serialize)]
struct Uniformity {
    edge: i64,
    edge_alt: i64,
    rows_alt: Vec<SweepRow>,
    /// Largest gap ratio between the two lattices at matched decay length.
    max_gap_ratio: f64,
}

#[derive(Serialize)]
struct SweepSidecar<'a> {
    schema: &'static str,
    config: &'a RunConfig,
    rows: Vec<SweepRow>,
    uniformity: Uniformity,
    /// Whether the gap decreased monotonically along the grid at fixed lattice.
    gap_monotone: bool,
}

fn sweep_point(cfg: &RunConfig, edge: i64, ell: f64) -> Result<SweepRow, CliError> {
    let (lat, f) = build_instance(cfg, edge, ell)?;
    let result = exact::exact_partition_with_budget(&f, cfg.budget)?;
    let hat = exact::z0_hat(lat.n_vertices(), cfg.tile_size)?;
    let sm = smoothness(&f);
    let radius = decay_radius(&f);
    Ok(SweepRow {
        ell,
        smoothness: sm,
        decay_radius: radius,
        sm_times_r: sm * radius,
        pressure: result.pressure,
        p0_hat: hat.pressure,
        gap: (result.pressure - hat.pressure).abs(),
    })
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.ells.is_empty() {
        return Err(CliError::config("sweep grid is empty"));
    }
    // parallel work queue over grid points; rows assembled in grid order
    let points: Vec<(i64, f64)> = cfg
        .ells
        .iter()
        .map(|&ell| (cfg.edge, ell))
        .chain(cfg.ells.iter().map(|&ell| (cfg.edge_alt, ell)))
        .collect();
    let results: Vec<Result<SweepRow, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|&(edge, ell)| scope.spawn(move || sweep_point(cfg, edge, ell)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(cfg.ells.len());
    let mut rows_alt = Vec::with_capacity(cfg.ells.len());
    for (i, r) in results.into_iter().enumerate() {
        let row = r?;
        if i < cfg.ells.len() {
            rows.push(row);
        } else {
            rows_alt.push(row);
        }
    }

    let mut max_gap_ratio: f64 = 1.0;
    for (a, b) in rows.iter().zip(&rows_alt) {
        if a.gap > 0.0 && b.gap > 0.0 {
            max_gap_ratio = max_gap_ratio.max((a.gap / b.gap).max(b.gap / a.gap));
        }
    }
    let gap_monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);

    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let mut csv = Csv::new(&[
        "ell",
        "smoothness",
        "decay_radius",
        "sm_times_r",
        "pressure",
        "p0_hat",
        "gap",
    ]);
    for row in &rows {
        csv.row(&[
            cell_f64(row.ell),
            cell_f64(row.smoothness),
            cell_f64(row.decay_radius),
            cell_f64(row.sm_times_r),
            cell_f64(row.pressure),
            cell_f64(row.p0_hat),
            cell_f64(row.gap),
        ]);
    }
    write_text(&out, &csv.finish())?;
    write_json(
        &sidecar_path(&out),
        &SweepSidecar {
            schema: "tileweight-sweep-v1",
            config: cfg,
            rows: rows.clone(),
            uniformity: Uniformity {
                edge: cfg.edge,
                edge_alt: cfg.edge_alt,
                rows_alt,
                max_gap_ratio,
            },
            gap_monotone,
        },
    )?;
    println!(
        "sweep: {} points, gap monotone: {}, uniformity ratio: {}",
        rows.len(),
        gap_monotone,
        max_gap_ratio
    );
    Ok(())
}

#[derive(Serialize)]
struct BoundsRow {
    edge: i64,
    tile_size: usize,
    ell_bar: i64,
    log_z_plus: f64,
    log_z_prime: Option<f64>,
    log_z_minus: Option<f64>,
    log_factors: Option<[f64; 5]>,
    alpha_feasible: Option<bool>,
    root_z_plus: f64,
    root_z_prime: Option<f64>,
    root_z_minus: Option<f64>,
    root_z0_hat: f64,
    gap_plus_hat: f64,
    gap_prime_exact: Option<f64>,
}

#[derive(Serialize)]
struct ClosedFormRow {
    n_vertices: usize,
    per_box: usize,
    root_z_plus: f64,
    root_z0_hat: f64,
    gap: f64,
}

#[derive(Serialize)]
struct BoundsSidecar<'a> {
    schema: &'static str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rows: Vec<BoundsRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    closed_form_rows: Vec<ClosedFormRow>,
}

fn bounds_row(edge: i64, tile_size: usize, ell_bar: i64, report: &BoundReport) -> BoundsRow {
    BoundsRow {
        edge,
        tile_size,
        ell_bar,
        log_z_plus: report.log_z_plus,
        log_z_prime: report.log_z_prime,
        log_z_minus: report.log_z_minus,
        log_factors: report.factors,
        alpha_feasible: report.alpha_feasible,
        root_z_plus: report.root_z_plus,
        root_z_prime: report.root_z_prime,
        root_z_minus: report.root_z_minus,
        root_z0_hat: report.root_z0_hat,
        gap_plus_hat: report.gap_plus_hat,
        gap_prime_exact: report.gap_prime_exact,
    }
}

fn cmd_bounds(cfg: &RunConfig, corrupt_alpha: bool) -> Result<(), CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("bounds.csv"));

    if cfg.closed_form {
        let mut rows = Vec::new();
        for &(n_vertices, per_box) in &cfg.closed_form_grid {
            let log_z_plus = tileweight::ladder::z_plus_closed(n_vertices, cfg.tile_size, per_box)?;
            let hat = exact::z0_hat(n_vertices, cfg.tile_size)?;
            let root_plus = (log_z_plus / n_vertices as f64).exp();
            let root_hat = hat.pressure.exp();
            rows.push(ClosedFormRow {
                n_vertices,
                per_box,
                root_z_plus: root_plus,
                root_z0_hat: root_hat,
                gap: (root_plus - root_hat).abs(),
            });
        }
        let mut csv = Csv::new(&["n_vertices", "per_box", "root_z_plus", "root_z0_hat", "gap"]);
        for r in &rows {
            csv.row(&[
                r.n_vertices.to_string(),
                r.per_box.to_string(),
                cell_f64(r.root_z_plus),
                cell_f64(r.root_z0_hat),
                cell_f64(r.gap),
            ]);
        }
        write_text(&out, &csv.finish())?;
        write_json(
            &sidecar_path(&out),
            &BoundsSidecar {
                schema: "tileweight-bounds-v1",
                config: cfg,
                rows: Vec::new(),
                closed_form_rows: rows,
            },
        )?;
        println!("bounds: closed-form table with {} rows", cfg.closed_form_grid.len());
        return Ok(());
    }

    let (_, f) = build_instance(cfg, cfg.edge, cfg.ell)?;
    let ell_bars = cfg
        .ell_bars
        .clone()
        .or_else(|| cfg.ell_bar.map(|e| vec![e]))
        .unwrap_or_else(|| vec![2]);
    let budgets = LadderBudgets {
        box_budget: cfg.box_budget,
        enumeration_budget: cfg.budget,
        exact_coarse: true,
    };
    let mut rows = Vec::new();
    for &ell_bar in &ell_bars {
        let dis = Dissection::new(*f.lattice(), ell_bar)?;
        let mut report = ladder_check(&f, &dis, cfg.eps, &budgets)?;
        if corrupt_alpha {
            // push the structured rung above the unrestricted one
            report.log_z_minus = Some(report.log_z_plus + 0.1);
            verify_ordering(&report)?;
        }
        rows.push(bounds_row(cfg.edge, cfg.tile_size, ell_bar, &report));
    }

    let mut csv = Csv::new(&[
        "edge",
        "tile_size",
        "ell_bar",
        "log_z_plus",
        "log_z_prime",
        "log_z_minus",
        "log_f1",
        "log_f2",
        "log_f3",
        "log_f4",
        "log_f5",
        "root_z_plus",
        "root_z_prime",
        "root_z_minus",
        "root_z0_hat",
        "gap_plus_hat",
        "gap_prime_exact",
    ]);
    for r in &rows {
        let fs = r.log_factors;
        csv.row(&[
            r.edge.to_string(),
            r.tile_size.to_string(),
            r.ell_bar.to_string(),
            cell_f64(r.log_z_plus),
            cell_opt(r.log_z_prime),
            cell_opt(r.log_z_minus),
            cell_opt(fs.map(|v| v[0])),
            cell_opt(fs.map(|v| v[1])),
            cell_opt(fs.map(|v| v[2])),
            cell_opt(fs.map(|v| v[3])),
            cell_opt(fs.map(|v| v[4])),
            cell_f64(r.root_z_plus),
            cell_opt(r.root_z_prime),
            cell_opt(r.root_z_minus),
            cell_f64(r.root_z0_hat),
            cell_f64(r.gap_plus_hat),
            cell_opt(r.gap_prime_exact),
        ]);
    }
    write_text(&out, &csv.finish())?;
    write_json(
        &sidecar_path(&out),
        &BoundsSidecar {
            schema: "tileweight-bounds-v1",
            config: cfg,
            rows,
            closed_form_rows: Vec::new(),
        },
    )?;
    println!("bounds: {} ladder rows", ell_bars.len());
    Ok(())
}

#[derive(Serialize)]
struct ExponentJson {
    num: i64,
    den: i64,
    s_coeff: i64,
}

#[derive(Serialize)]
struct CheckJson {
    label: &'static str,
    margin: f64,
    holds: bool,
}

#[derive(Serialize)]
struct ConditionsSidecar<'a> {
    schema: &'static str,
    config: &'a RunConfig,
    eps: f64,
    s: f64,
    dim: usize,
    tile_size: usize,
    sm_exponent: ExponentJson,
    n_bar_exponent: ExponentJson,
    m_bar_exponent: ExponentJson,
    sm_target: f64,
    n_bar_real: f64,
    n_bar: Option<u64>,
    ell_bar: Option<u64>,
    m_bar_real: f64,
    m_bar: Option<u64>,
    alpha: f64,
    checks: Vec<CheckJson>,
    all_hold: bool,
    threshold: f64,
}

fn cmd_conditions(cfg: &RunConfig) -> Result<(), CliError> {
    let p = conditions_params(cfg.eps, cfg.s, cfg.dim, cfg.tile_size)?;
    let report = verify_conditions(&p);
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("conditions.json"));
    let to_exp = |e: tileweight::conditions::ExponentForm| ExponentJson {
        num: e.num,
        den: e.den,
        s_coeff: e.s_coeff,
    };
    write_json(
        &out,
        &ConditionsSidecar {
            schema: "tileweight-conditions-v1",
            config: cfg,
            eps: p.eps,
            s: p.s,
            dim: p.d,
            tile_size: p.n,
            sm_exponent: to_exp(p.sm_exponent),
            n_bar_exponent: to_exp(p.n_bar_exponent),
            m_bar_exponent: to_exp(p.m_bar_exponent),
            sm_target: p.sm_target,
            n_bar_real: p.n_bar_real,
            n_bar: p.n_bar,
            ell_bar: p.ell_bar,
            m_bar_real: p.m_bar_real,
            m_bar: p.m_bar,
            alpha: p.alpha,
            checks: report
                .checks
                .iter()
                .map(|c| CheckJson {
                    label: c.label,
                    margin: c.margin,
                    holds: c.holds,
                })
                .collect(),
            all_hold: report.all_hold,
            threshold: report.threshold,
        },
    )?;
    for c in &report.checks {
        println!(
            "{}: {} (margin {})",
            c.label,
            if c.holds { "pass" } else { "FAIL" },
            c.margin
        );
    }
    println!(
        "all hold: {}; all-pass threshold: {}",
        report.all_hold, report.threshold
    );
    Ok(())
}
