//! The `check` subcommand: cross-verifies the library's central claims at
//! desk scale — exhaustive where cheap, seeded-random where not. Any failure
//! here contradicts a proven statement and exits with the invariant code.

use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{write_json, sidecar_path};
use crate::CliError;
use tileweight::conditions::{conditions_params, tail_mass_check, verify_conditions};
use tileweight::exact;
use tileweight::ladder::{
    choose_alpha, covering_cutoff, ladder_check, pointed_completion_sum, LadderBudgets,
    MassSpectrum,
};
use tileweight::lattice::{Dissection, Lattice, Norm};
use tileweight::numerics::{root_estimate_check, stirling_sweep};
use tileweight::weighting::{
    build_weighting, coarse_average, coarse_gap_check, decay_radius, placement_mass,
    WeightingFamily,
};

fn pair_exp(ell: f64) -> WeightingFamily {
    WeightingFamily::PairExponential {
        ell,
        norm: Norm::Euclidean,
    }
}

const DESK_INSTANCES: [(usize, i64, usize); 6] = [
    (1, 4, 2),
    (1, 6, 2),
    (1, 6, 3),
    (1, 8, 2),
    (2, 4, 2),
    (1, 8, 4),
];

fn constant_agreement() -> Result<(), String> {
    for (d, l, n) in DESK_INSTANCES {
        let lat = Lattice::new(d, l).map_err(|e| e.to_string())?;
        let f = build_weighting(&WeightingFamily::Constant, lat, n).map_err(|e| e.to_string())?;
        let z = exact::exact_partition(&f).map_err(|e| e.to_string())?;
        let hat = exact::z0_hat(lat.n_vertices(), n).map_err(|e| e.to_string())?;
        let rel = (z.log_z - hat.log_z).abs() / hat.log_z.abs().max(1.0);
        if rel > 1e-10 {
            return Err(format!("constant mismatch {rel} at d={d} L={l} n={n}"));
        }
    }
    Ok(())
}

fn placement_mass_randomized(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut tested = 0;
    for (d, l, n) in DESK_INSTANCES {
        for _ in 0..4 {
            let ell = rng.random_range(0.5..8.0);
            let lat = Lattice::new(d, l).map_err(|e| e.to_string())?;
            let f = build_weighting(&pair_exp(ell), lat, n).map_err(|e| e.to_string())?;
            let mass = placement_mass(&f).map_err(|e| e.to_string())?;
            let expected = lat.n_vertices() as f64 / n as f64;
            if ((mass - expected) / expected).abs() > 1e-9 {
                return Err(format!("placement mass {mass} vs {expected} at d={d} L={l} n={n} ell={ell}"));
            }
            tested += 1;
        }
    }
    if tested < 20 {
        return Err(format!("only {tested} randomized instances"));
    }
    Ok(())
}

fn universal_bound_dominance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xB0);
    for (d, l, n) in DESK_INSTANCES {
        let lat = Lattice::new(d, l).map_err(|e| e.to_string())?;
        let bound = exact::universal_bound(lat.n_vertices(), n).map_err(|e| e.to_string())?;
        for fam in [WeightingFamily::Constant, pair_exp(rng.random_range(0.5..8.0))] {
            let f = build_weighting(&fam, lat, n).map_err(|e| e.to_string())?;
            let z = exact::exact_partition(&f).map_err(|e| e.to_string())?;
            let root = (z.log_z / lat.n_vertices() as f64).exp();
            if root > bound * (1.0 + 1e-12) {
                return Err(format!("root {root} above bound {bound} at d={d} L={l} n={n}"));
            }
        }
    }
    let m42 = exact::universal_bound(4, 2).map_err(|e| e.to_string())?;
    if (m42 - 2f64.powf(0.25)).abs() > 1e-12 {
        return Err(format!("universal_bound(4,2) = {m42}"));
    }
    Ok(())
}

fn root_estimate_batch(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xE5);
    for trial in 0..count {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let a: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(0.0..1.5)).collect())
            .collect();
        let delta: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let est = root_estimate_check(&a, &delta).map_err(|e| e.to_string())?;
        if !est.holds {
            return Err(format!("sandwich failed on trial {trial}"));
        }
    }
    Ok(())
}

fn stirling_strict() -> Result<(), String> {
    let sweep = stirling_sweep(10_000);
    for s in &sweep {
        if !s.holds_strictly() {
            return Err(format!("sandwich not strict at r = {}", s.r));
        }
    }
    Ok(())
}

fn coarse_gap_instances() -> Result<(), String> {
    for (d, l, n) in DESK_INSTANCES {
        for ell_bar in [2i64, 4] {
            if l % ell_bar != 0 {
                continue;
            }
            let lat = Lattice::new(d, l).map_err(|e| e.to_string())?;
            let dis = Dissection::new(lat, ell_bar).map_err(|e| e.to_string())?;
            for fam in [WeightingFamily::Constant, pair_exp(2.0), pair_exp(6.0)] {
                let f = build_weighting(&fam, lat, n).map_err(|e| e.to_string())?;
                let report = coarse_gap_check(&f, &dis).map_err(|e| e.to_string())?;
                if !report.holds {
                    return Err(format!(
                        "coarse gap violated at d={d} L={l} n={n} ell_bar={ell_bar}: worst {} bound {}",
                        report.worst_ratio, report.bound
                    ));
                }
            }
        }
    }
    Ok(())
}

fn ladder_ordering() -> Result<(), String> {
    let budgets = LadderBudgets::default();
    for l in [4i64, 8] {
        for ell_bar in [2i64, 4] {
            if l % ell_bar != 0 {
                continue;
            }
            for fam in [WeightingFamily::Constant, pair_exp(2.0)] {
                let lat = Lattice::new(1, l).map_err(|e| e.to_string())?;
                let f = build_weighting(&fam, lat, 2).map_err(|e| e.to_string())?;
                let dis = Dissection::new(lat, ell_bar).map_err(|e| e.to_string())?;
                ladder_check(&f, &dis, 0.1, &budgets).map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(())
}

fn alpha_rounding_batch(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xA1);
    let n_bar = 10_000usize;
    let grid = BigRational::new(2.into(), n_bar.into());
    for trial in 0..count {
        let k = rng.random_range(2..=6);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let masses: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let spectrum = MassSpectrum::from_masses(&masses, 0.5);
        let alpha = choose_alpha(&spectrum, n_bar, 2, 0.5).map_err(|e| e.to_string())?;
        if !alpha.feasible {
            return Err(format!("trial {trial} infeasible"));
        }
        let mut sum = BigRational::zero();
        for (a, ideal) in alpha.alphas.iter().zip(&alpha.ideals) {
            if !(a / &grid).is_integer() || a.is_negative() {
                return Err(format!("trial {trial}: off-grid or negative"));
            }
            if (a - ideal).abs() >= grid {
                return Err(format!("trial {trial}: deviation at least one grid step"));
            }
            sum += a;
        }
        if sum != BigRational::one() {
            return Err(format!("trial {trial}: proportions sum to {sum}"));
        }
    }
    Ok(())
}

fn mass_completeness() -> Result<(), String> {
    for ell_bar in [2i64, 4] {
        let lat = Lattice::new(1, 8).map_err(|e| e.to_string())?;
        let f = build_weighting(&pair_exp(2.0), lat, 2).map_err(|e| e.to_string())?;
        let dis = Dissection::new(lat, ell_bar).map_err(|e| e.to_string())?;
        let fbar = coarse_average(&f, &dis).map_err(|e| e.to_string())?;
        for v in 0..lat.n_vertices() {
            let s = pointed_completion_sum(&fbar, v).map_err(|e| e.to_string())?;
            if (s - 1.0).abs() > 1e-9 {
                return Err(format!("pointed sum {s} at vertex {v}, ell_bar {ell_bar}"));
            }
        }
        let spectrum =
            MassSpectrum::build(&fbar, covering_cutoff(&dis), 0.1).map_err(|e| e.to_string())?;
        if (spectrum.total_mass() - 1.0).abs() > 1e-9 {
            return Err(format!("total mass {} at ell_bar {ell_bar}", spectrum.total_mass()));
        }
        let tail = tail_mass_check(&fbar, &spectrum, 0.1, decay_radius(&f))
            .map_err(|e| e.to_string())?;
        if !tail.deficit_within_envelope {
            return Err(format!("deficit {} above envelope {}", tail.deficit, tail.envelope));
        }
    }
    Ok(())
}

fn conditions_identities() -> Result<(), String> {
    let p = conditions_params(0.1, 0.1, 1, 2).map_err(|e| e.to_string())?;
    if p.m_bar != Some(251) {
        return Err(format!("m_bar = {:?}", p.m_bar));
    }
    let report = verify_conditions(&p);
    let analytic = 400f64.powf(-5.0);
    if (report.threshold - analytic).abs() / analytic > 1e-6 {
        return Err(format!("threshold {} vs analytic {analytic}", report.threshold));
    }
    for eps in [0.1, 0.05, 0.01] {
        let p = conditions_params(eps, 0.1, 1, 2).map_err(|e| e.to_string())?;
        let lhs = p.m_bar_real.powf(0.5) * p.n_bar_real * p.sm_target;
        let rhs = eps.powf(-0.1);
        if ((lhs - rhs) / rhs).abs() > 1e-10 {
            return Err(format!("scaling identity off at eps {eps}: {lhs} vs {rhs}"));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckOutcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct CheckSidecar<'a> {
    schema: &'static str,
    config: &'a RunConfig,
    seed: u64,
    results: Vec<CheckOutcome>,
    all_pass: bool,
}

pub fn cmd_check(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.seed;
    let started = Instant::now();
    let suites: Vec<(&'static str, Box<dyn Fn() -> Result<(), String>>)> = vec![
        ("constant-agreement", Box::new(constant_agreement)),
        (
            "placement-mass-randomized",
            Box::new(move || placement_mass_randomized(seed)),
        ),
        (
            "universal-bound-dominance",
            Box::new(move || universal_bound_dominance(seed)),
        ),
        (
            "root-estimate-batch",
            Box::new(move || root_estimate_batch(seed, 200)),
        ),
        ("stirling-strict", Box::new(stirling_strict)),
        ("coarse-gap-instances", Box::new(coarse_gap_instances)),
        ("ladder-ordering", Box::new(ladder_ordering)),
        (
            "alpha-rounding-batch",
            Box::new(move || alpha_rounding_batch(seed, 25)),
        ),
        ("mass-completeness", Box::new(mass_completeness)),
        ("conditions-identities", Box::new(conditions_identities)),
    ];
    let mut results = Vec::new();
    let mut failure: Option<String> = None;
    for (name, suite) in suites {
        match suite() {
            Ok(()) => {
                println!("PASS {name}");
                results.push(CheckOutcome {
                    name,
                    pass: true,
                    detail: String::new(),
                });
            }
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                if failure.is_none() {
                    failure = Some(format!("{name}: {detail}"));
                }
                results.push(CheckOutcome {
                    name,
                    pass: false,
                    detail,
                });
            }
        }
    }
    let all_pass = failure.is_none();
    if let Some(out) = &cfg.out {
        let json_path = if out.extension().is_some_and(|e| e == "json") {
            out.clone()
        } else {
            sidecar_path(out)
        };
        write_json(
            &json_path,
            &CheckSidecar {
                schema: "tileweight-check-v1",
                config: cfg,
                seed,
                results,
                all_pass,
            },
        )?;
    }
    println!(
        "check: {} in {:.2}s",
        if all_pass { "all suites passed" } else { "FAILURES" },
        started.elapsed().as_secs_f64()
    );
    match failure {
        None => Ok(()),
        Some(msg) => Err(CliError::invariant(msg)),
    }
}
