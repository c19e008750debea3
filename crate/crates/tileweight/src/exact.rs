//! Exact partition functions by enumeration over perfect tilings, the
//! constant-weight closed forms, and the universal upper bound.
//!
//! A tiling is a partition of the N lattice vertices into N/n blocks of size
//! n; its weight is the product of the activity over the blocks, and Z is
//! the sum of the weights. Enumeration branches on the smallest uncovered
//! vertex, which visits every partition exactly once.

use alloc::vec::Vec;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::math;
use crate::numerics::{ln_factorial, LnFactorials, LogSum};
use crate::weighting::Activity;
use crate::{Error, Result};

/// Default cap on the number of tilings an enumeration may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

// Subset-weight tables are precomputed when the block count stays below this.
const PRECOMPUTE_CAP: f64 = 5e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Float,
    Rational,
}

/// Partition-function value with its pressure, log_z / N.
#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub log_z: f64,
    pub pressure: f64,
    pub n_vertices: usize,
    pub tile_size: usize,
    pub mode: EvalMode,
    /// Exact value, present in rational mode.
    pub z_rational: Option<BigRational>,
}

impl PartitionResult {
    fn from_log(log_z: f64, n_vertices: usize, tile_size: usize) -> Self {
        PartitionResult {
            log_z,
            pressure: log_z / n_vertices as f64,
            n_vertices,
            tile_size,
            mode: EvalMode::Float,
            z_rational: None,
        }
    }
}

/// Natural log of the tiling count N! / ((N/n)! * (n!)^(N/n)).
pub fn log_tiling_count(n_vertices: usize, tile_size: usize) -> Result<f64> {
    check_divisibility(n_vertices, tile_size)?;
    let blocks = (n_vertices / tile_size) as u64;
    Ok(ln_factorial(n_vertices as u64)
        - ln_factorial(blocks)
        - blocks as f64 * ln_factorial(tile_size as u64))
}

fn check_divisibility(n_vertices: usize, tile_size: usize) -> Result<()> {
    if tile_size == 0 || n_vertices == 0 {
        return Err(Error::domain("vertex count and tile size must be positive"));
    }
    if n_vertices % tile_size != 0 {
        return Err(Error::domain("tile size must divide the vertex count"));
    }
    Ok(())
}

fn check_budget(n_vertices: usize, tile_size: usize, budget: u64) -> Result<()> {
    let log_count = log_tiling_count(n_vertices, tile_size)?;
    if n_vertices > 64 {
        return Err(Error::budget("enumeration is limited to 64 vertices"));
    }
    if log_count > math::ln(budget as f64) {
        return Err(Error::budget(alloc::format!(
            "estimated {:.3e} tilings exceeds the budget of {budget}",
            math::exp(log_count)
        )));
    }
    Ok(())
}

// Log-weights of all n-subsets keyed by vertex bitmask, when small enough.
fn precompute_masks<A: Activity>(f: &A) -> Result<Option<alloc::collections::BTreeMap<u64, f64>>> {
    let n_vertices = f.lattice().n_vertices();
    let n = f.tile_size();
    let log_subsets = ln_factorial(n_vertices as u64)
        - ln_factorial(n as u64)
        - ln_factorial((n_vertices - n) as u64);
    if log_subsets > math::ln(PRECOMPUTE_CAP) {
        return Ok(None);
    }
    let mut table = alloc::collections::BTreeMap::new();
    for subset in (0..n_vertices).combinations(n) {
        let mask = subset.iter().fold(0u64, |m, &v| m | 1u64 << v);
        table.insert(mask, f.log_value(&subset)?);
    }
    Ok(Some(table))
}

struct Enumeration<'a, A: Activity> {
    f: &'a A,
    masks: Option<alloc::collections::BTreeMap<u64, f64>>,
    n: usize,
}

impl<A: Activity> Enumeration<'_, A> {
    fn block_weight(&self, block: &[usize]) -> Result<f64> {
        if let Some(table) = &self.masks {
            let mask = block.iter().fold(0u64, |m, &v| m | 1u64 << v);
            return Ok(table[&mask]);
        }
        self.f.log_value(block)
    }

    // Sums over all completions of the partial tiling with `uncovered`
    // vertices left, accumulating into `out` in lexicographic branch order.
    fn recurse(&self, uncovered: u64, acc: f64, out: &mut LogSum) -> Result<()> {
        if uncovered == 0 {
            out.add_log(acc);
            return Ok(());
        }
        let first = uncovered.trailing_zeros() as usize;
        let rest: Vec<usize> = (first + 1..64)
            .filter(|&v| uncovered & (1u64 << v) != 0)
            .collect();
        let mut block = Vec::with_capacity(self.n);
        for others in rest.iter().copied().combinations(self.n - 1) {
            block.clear();
            block.push(first);
            block.extend_from_slice(&others);
            let w = self.block_weight(&block)?;
            let mut used = 1u64 << first;
            for &v in &others {
                used |= 1u64 << v;
            }
            self.recurse(uncovered & !used, acc + w, out)?;
        }
        Ok(())
    }
}

// Top-level branches: the partner subsets completing vertex 0. Each branch
// gets its own accumulator; the final merge runs in fixed branch order, so
// results are identical however branches are scheduled.
fn branch_blocks(n_vertices: usize, n: usize) -> Vec<Vec<usize>> {
    (1..n_vertices)
        .combinations(n - 1)
        .map(|others| {
            let mut block = Vec::with_capacity(n);
            block.push(0);
            block.extend_from_slice(&others);
            block
        })
        .collect()
}

fn run_branch<A: Activity>(en: &Enumeration<'_, A>, full: u64, block: &[usize]) -> Result<LogSum> {
    let mut used = 0u64;
    for &v in block {
        used |= 1u64 << v;
    }
    let w = en.block_weight(block)?;
    let mut out = LogSum::new();
    en.recurse(full & !used, w, &mut out)?;
    Ok(out)
}

#[cfg(feature = "std")]
fn branch_sums<A: Activity + Sync>(
    en: &Enumeration<'_, A>,
    full: u64,
    branches: &[Vec<usize>],
) -> Result<Vec<LogSum>> {
    let threads = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(8)
        .min(branches.len().max(1));
    if threads <= 1 {
        return branches.iter().map(|b| run_branch(en, full, b)).collect();
    }
    let mut sums: Vec<Result<LogSum>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || -> Vec<(usize, Result<LogSum>)> {
                    branches
                        .iter()
                        .enumerate()
                        .skip(t)
                        .step_by(threads)
                        .map(|(i, b)| (i, run_branch(en, full, b)))
                        .collect()
                })
            })
            .collect();
        let mut collected: Vec<(usize, Result<LogSum>)> = Vec::with_capacity(branches.len());
        for handle in handles {
            collected.extend(handle.join().expect("enumeration worker panicked"));
        }
        collected.sort_by_key(|(i, _)| *i);
        sums = collected.into_iter().map(|(_, s)| s).collect();
    });
    sums.into_iter().collect()
}

#[cfg(not(feature = "std"))]
fn branch_sums<A: Activity + Sync>(
    en: &Enumeration<'_, A>,
    full: u64,
    branches: &[Vec<usize>],
) -> Result<Vec<LogSum>> {
    branches.iter().map(|b| run_branch(en, full, b)).collect()
}

/// Exact log partition function by full enumeration, under the default
/// budget.
pub fn exact_partition<A: Activity + Sync>(f: &A) -> Result<PartitionResult> {
    exact_partition_with_budget(f, DEFAULT_ENUMERATION_BUDGET)
}

/// Exact log partition function by full enumeration. Refuses instances whose
/// estimated tiling count exceeds `budget`.
pub fn exact_partition_with_budget<A: Activity + Sync>(
    f: &A,
    budget: u64,
) -> Result<PartitionResult> {
    let n_vertices = f.lattice().n_vertices();
    let n = f.tile_size();
    check_budget(n_vertices, n, budget)?;

    let en = Enumeration {
        f,
        masks: precompute_masks(f)?,
        n,
    };
    let full: u64 = if n_vertices == 64 {
        u64::MAX
    } else {
        (1u64 << n_vertices) - 1
    };
    let branches = branch_blocks(n_vertices, n);
    let sums = branch_sums(&en, full, &branches)?;
    let mut total = LogSum::new();
    for s in &sums {
        total.merge(s);
    }
    Ok(PartitionResult::from_log(total.total_log(), n_vertices, n))
}

/// Exact partition function in rational arithmetic; requires the activity to
/// carry exact values (lattices of at most the rational cap).
pub fn exact_partition_rational<A: Activity>(f: &A, budget: u64) -> Result<PartitionResult> {
    let n_vertices = f.lattice().n_vertices();
    let n = f.tile_size();
    check_budget(n_vertices, n, budget)?;

    let mut table: alloc::collections::BTreeMap<u64, BigRational> =
        alloc::collections::BTreeMap::new();
    for subset in (0..n_vertices).combinations(n) {
        let mask = subset.iter().fold(0u64, |m, &v| m | 1u64 << v);
        let value = f
            .rational_value(&subset)
            .ok_or_else(|| Error::domain("activity carries no exact-rational values"))?;
        table.insert(mask, value);
    }

    fn recurse(
        table: &alloc::collections::BTreeMap<u64, BigRational>,
        n: usize,
        uncovered: u64,
        acc: &BigRational,
        out: &mut BigRational,
    ) {
        if uncovered == 0 {
            *out += acc;
            return;
        }
        let first = uncovered.trailing_zeros() as usize;
        let rest: Vec<usize> = (first + 1..64)
            .filter(|&v| uncovered & (1u64 << v) != 0)
            .collect();
        for others in rest.iter().copied().combinations(n - 1) {
            let mut used = 1u64 << first;
            for &v in &others {
                used |= 1u64 << v;
            }
            let term = acc * &table[&used];
            recurse(table, n, uncovered & !used, &term, out);
        }
    }

    let full: u64 = if n_vertices == 64 {
        u64::MAX
    } else {
        (1u64 << n_vertices) - 1
    };
    let mut z = BigRational::zero();
    recurse(&table, n, full, &BigRational::one(), &mut z);
    let z_f64 = z
        .to_f64()
        .ok_or_else(|| Error::domain("exact value does not fit in a float"))?;
    if z_f64 <= 0.0 {
        return Err(Error::invariant("partition function must be positive"));
    }
    Ok(PartitionResult {
        log_z: math::ln(z_f64),
        pressure: math::ln(z_f64) / n_vertices as f64,
        n_vertices,
        tile_size: n,
        mode: EvalMode::Rational,
        z_rational: Some(z),
    })
}

/// Closed-form partition function for the constant weighting:
/// log Z = (N/n)[ln(n-1)! + ln(N-n)! - ln(N-1)!] + ln N! - ln(N/n)! - (N/n) ln n!.
pub fn z0_hat(n_vertices: usize, tile_size: usize) -> Result<PartitionResult> {
    check_divisibility(n_vertices, tile_size)?;
    let facts = LnFactorials::up_to(n_vertices as u64);
    let blocks = (n_vertices / tile_size) as f64;
    let log_const = facts.get(tile_size as u64 - 1) + facts.get((n_vertices - tile_size) as u64)
        - facts.get(n_vertices as u64 - 1);
    let log_z = blocks * log_const + facts.get(n_vertices as u64)
        - ln_factorial((n_vertices / tile_size) as u64)
        - blocks * facts.get(tile_size as u64);
    Ok(PartitionResult::from_log(log_z, n_vertices, tile_size))
}

/// Infinite-volume limits of the constant-weight pressure and partition
/// function per site: pressure (1-n)/n and its exponential.
#[derive(Debug, Clone, Copy)]
pub struct LimitPressure {
    pub pressure: f64,
    pub z: f64,
}

pub fn z0_limit(tile_size: usize) -> Result<LimitPressure> {
    if tile_size == 0 {
        return Err(Error::domain("tile size must be at least 1"));
    }
    let pressure = (1.0 - tile_size as f64) / tile_size as f64;
    Ok(LimitPressure {
        pressure,
        z: math::exp(pressure),
    })
}

/// Universal upper bound M on Z^(1/N), valid for every normalized weighting:
/// M = [N^(N/n) / ((N/n)! n^(N/n))]^(1/N), evaluated in log domain.
pub fn universal_bound(n_vertices: usize, tile_size: usize) -> Result<f64> {
    check_divisibility(n_vertices, tile_size)?;
    let blocks = (n_vertices / tile_size) as f64;
    let log_m = (-ln_factorial((n_vertices / tile_size) as u64)
        + blocks * (math::ln(n_vertices as f64) - math::ln(tile_size as f64)))
        / n_vertices as f64;
    Ok(math::exp(log_m))
}
