//! Cross-checks against independent brute-force evaluations: a plain
//! linear-arithmetic tiling enumerator with none of the library's masking or
//! log-domain machinery, and direct sums over set sequences for the ladder.

use std::collections::BTreeSet;

use itertools::Itertools;
use tileweight::lattice::{Dissection, Lattice, Norm};
use tileweight::weighting::{
    build_weighting, canonical_key, coarse_average, Activity, WeightingFamily,
};
use tileweight::{exact, ladder};

/// Sum over perfect tilings by recursive pairing of the lowest free vertex,
/// in plain linear f64 arithmetic.
fn brute_force_partition<A: Activity>(f: &A) -> f64 {
    fn recurse<A: Activity>(f: &A, free: &mut Vec<usize>) -> f64 {
        if free.is_empty() {
            return 1.0;
        }
        let n = f.tile_size();
        let head = free[0];
        let rest: Vec<usize> = free[1..].to_vec();
        let mut total = 0.0;
        for partners in rest.iter().copied().combinations(n - 1) {
            let mut tuple = vec![head];
            tuple.extend_from_slice(&partners);
            let weight = f.log_value(&tuple).unwrap().exp();
            let mut remaining: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|v| !partners.contains(v))
                .collect();
            total += weight * recurse(f, &mut remaining);
        }
        total
    }
    let mut free: Vec<usize> = (0..f.lattice().n_vertices()).collect();
    recurse(f, &mut free)
}

fn pair_exp(ell: f64) -> WeightingFamily {
    WeightingFamily::PairExponential {
        ell,
        norm: Norm::Euclidean,
    }
}

#[test]
fn exact_partition_matches_brute_force() {
    let cases: Vec<(usize, i64, usize, WeightingFamily)> = vec![
        (1, 4, 2, WeightingFamily::Constant),
        (1, 4, 2, pair_exp(2.0)),
        (1, 6, 2, pair_exp(1.0)),
        (1, 6, 3, WeightingFamily::Constant),
        (1, 6, 3, pair_exp(3.0)),
        (2, 4, 2, pair_exp(1.5)),
        (1, 8, 4, pair_exp(0.7)),
    ];
    for (d, l, n, fam) in cases {
        let lat = Lattice::new(d, l).unwrap();
        let f = build_weighting(&fam, lat, n).unwrap();
        let direct = brute_force_partition(&f);
        let result = exact::exact_partition(&f).unwrap();
        assert!(
            (result.log_z - direct.ln()).abs() < 1e-10,
            "mismatch at d={d} L={l} n={n}: {} vs {}",
            result.log_z,
            direct.ln()
        );
    }
}

#[test]
fn exact_partition_matches_brute_force_on_random_tables() {
    // seeded multiplicative congruential stream; no rand dependency needed
    let mut state: u64 = 0x9E3779B97F4A7C15;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        0.5 + 1.5 * ((state >> 11) as f64 / (1u64 << 53) as f64)
    };
    for (d, l, n) in [(1usize, 8i64, 2usize), (1, 6, 3), (2, 4, 2)] {
        let lat = Lattice::new(d, l).unwrap();
        let mut keys = BTreeSet::new();
        for tuple in (0..lat.n_vertices()).combinations_with_replacement(n) {
            keys.insert(canonical_key(&lat, &tuple));
        }
        let table = keys.into_iter().map(|k| (k, next())).collect();
        let f = build_weighting(&WeightingFamily::UserTable(table), lat, n).unwrap();
        let direct = brute_force_partition(&f);
        let result = exact::exact_partition(&f).unwrap();
        assert!(
            (result.log_z - direct.ln()).abs() < 1e-10,
            "random table mismatch at d={d} L={l} n={n}"
        );
    }
}

#[test]
fn coarse_average_partition_matches_brute_force() {
    let lat = Lattice::new(1, 8).unwrap();
    let f = build_weighting(&pair_exp(2.0), lat, 2).unwrap();
    let dis = Dissection::new(lat, 2).unwrap();
    let fbar = coarse_average(&f, &dis).unwrap();
    let direct = brute_force_partition(&fbar);
    let result = exact::exact_partition(&fbar).unwrap();
    assert!((result.log_z - direct.ln()).abs() < 1e-10);
}

/// The proto-sum taken literally: every ordered sequence of n-subsets with
/// free overlap, optionally filtered to exact box occupancy, then the
/// sequence-count and per-box factors.
fn brute_force_proto_sum(
    fbar: &tileweight::weighting::CoarseWeighting,
    filter_occupancy: bool,
) -> f64 {
    let dis = fbar.dissection();
    let n_vertices = dis.lattice().n_vertices();
    let n = fbar.tile_size();
    let n_bar = dis.vertices_per_box();
    let sets: Vec<Vec<usize>> = (0..n_vertices).combinations(n).collect();
    let values: Vec<f64> = sets
        .iter()
        .map(|s| fbar.log_value(s).unwrap().exp())
        .collect();
    let slots = n_vertices / n;
    let mut total = 0.0;
    let mut stack: Vec<usize> = Vec::new();
    fn recurse(
        sets: &[Vec<usize>],
        values: &[f64],
        dis: &Dissection,
        stack: &mut Vec<usize>,
        slots: usize,
        n_bar: usize,
        filter: bool,
        total: &mut f64,
    ) {
        if stack.len() == slots {
            if filter {
                let chosen: Vec<Vec<usize>> = stack.iter().map(|&i| sets[i].clone()).collect();
                let occ = ladder::occupancy_vector(&chosen, dis);
                if !occ.iter().all(|&c| c == n_bar) {
                    return;
                }
            }
            *total += stack.iter().map(|&i| values[i]).product::<f64>();
            return;
        }
        for i in 0..sets.len() {
            stack.push(i);
            recurse(sets, values, dis, stack, slots, n_bar, filter, total);
            stack.pop();
        }
    }
    recurse(
        &sets,
        &values,
        dis,
        &mut stack,
        slots,
        n_bar,
        filter_occupancy,
        &mut total,
    );
    let mut factorial = 1.0;
    for k in 1..=slots {
        factorial *= k as f64;
    }
    let mut box_factor = 1.0;
    for k in 1..=n_bar {
        box_factor *= k as f64;
    }
    box_factor /= (n_bar as f64).powi(n_bar as i32);
    total * box_factor.powi(dis.n_boxes() as i32) / factorial
}

fn brute_force_z_plus(fbar: &tileweight::weighting::CoarseWeighting) -> f64 {
    brute_force_proto_sum(fbar, false)
}

fn brute_force_z_prime(fbar: &tileweight::weighting::CoarseWeighting) -> f64 {
    brute_force_proto_sum(fbar, true)
}

#[test]
fn z_plus_matches_literal_sum() {
    for (l, n, ell_bar, fam) in [
        (4i64, 2usize, 2i64, WeightingFamily::Constant),
        (4, 2, 2, pair_exp(2.0)),
        (6, 2, 3, WeightingFamily::Constant),
        (6, 2, 3, pair_exp(1.0)),
        (6, 3, 2, pair_exp(2.0)),
    ] {
        let lat = Lattice::new(1, l).unwrap();
        let f = build_weighting(&fam, lat, n).unwrap();
        let dis = Dissection::new(lat, ell_bar).unwrap();
        let fbar = coarse_average(&f, &dis).unwrap();
        let direct = brute_force_z_plus(&fbar);
        let closed = ladder::z_plus(&dis, n).unwrap();
        assert!(
            (closed - direct.ln()).abs() < 1e-10,
            "z_plus mismatch at L={l} n={n} ell_bar={ell_bar}"
        );
    }
}

#[test]
fn z_prime_matches_literal_sum() {
    for (l, n, ell_bar, fam) in [
        (4i64, 2usize, 2i64, WeightingFamily::Constant),
        (4, 2, 2, pair_exp(2.0)),
        (6, 2, 3, pair_exp(1.0)),
        (6, 3, 3, pair_exp(2.0)),
        (8, 2, 2, pair_exp(2.0)),
    ] {
        let lat = Lattice::new(1, l).unwrap();
        let f = build_weighting(&fam, lat, n).unwrap();
        let dis = Dissection::new(lat, ell_bar).unwrap();
        let fbar = coarse_average(&f, &dis).unwrap();
        let direct = brute_force_z_prime(&fbar);
        let dp = ladder::z_prime(&fbar, dis.n_boxes()).unwrap();
        assert!(
            (dp - direct.ln()).abs() < 1e-10,
            "z_prime mismatch at L={l} n={n} ell_bar={ell_bar}: {} vs {}",
            dp,
            direct.ln()
        );
    }
}

#[test]
fn single_box_restriction_is_vacuous() {
    // with one box the occupancy restriction excludes nothing, so the two
    // proto-sums coincide
    let lat = Lattice::new(1, 4).unwrap();
    let f = build_weighting(&pair_exp(2.0), lat, 2).unwrap();
    let dis = Dissection::new(lat, 4).unwrap();
    let fbar = coarse_average(&f, &dis).unwrap();
    let plus = ladder::z_plus(&dis, 2).unwrap();
    let prime = ladder::z_prime(&fbar, 1).unwrap();
    assert!((plus - prime).abs() < 1e-10);
}
