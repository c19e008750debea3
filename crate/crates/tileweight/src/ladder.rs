//! The bound ladder for coarse-grained partition functions: the unrestricted
//! upper proto-sum z_plus, the occupancy-restricted z_prime, and the
//! supertype-structured lower bound z_minus, together with the supertype
//! mass spectrum and the grid rounding of the proportion vector alpha.
//!
//! All three quantities bound or approximate the same object and must obey
//! z_plus >= z_prime >= z_minus on every instance; a violation is an
//! implementation bug, never a tolerance issue, because z_prime's terms are
//! a subset of z_plus's and z_minus undercounts z_prime's.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::exact;
use crate::lattice::{displacement_norm, Dissection, Norm};
use crate::math;
use crate::numerics::{ln_factorial, LnFactorials, LogSum};
use crate::weighting::{Activity, CoarseWeighting, Weighting};
use crate::{Error, Result};

/// Log of the unrestricted proto-sum over set sequences, from integer data
/// alone: -ln(N/n)! + (N/n) ln N + (N/nbar)(ln nbar! - nbar ln nbar)
/// - (N/n) ln n. Independent of the activity because each per-set sum
/// collapses to N/n under the normalization.
pub fn z_plus_closed(n_vertices: usize, tile_size: usize, per_box: usize) -> Result<f64> {
    if tile_size == 0 || per_box == 0 || n_vertices == 0 {
        return Err(Error::domain("sizes must be positive"));
    }
    if n_vertices % tile_size != 0 || n_vertices % per_box != 0 {
        return Err(Error::domain("tile size and box size must divide the vertex count"));
    }
    let sets = (n_vertices / tile_size) as f64;
    let boxes = (n_vertices / per_box) as f64;
    Ok(-ln_factorial((n_vertices / tile_size) as u64)
        + sets * math::ln(n_vertices as f64)
        + boxes * (ln_factorial(per_box as u64) - per_box as f64 * math::ln(per_box as f64))
        - sets * math::ln(tile_size as f64))
}

/// [`z_plus_closed`] for a concrete dissection.
pub fn z_plus(dis: &Dissection, tile_size: usize) -> Result<f64> {
    z_plus_closed(dis.lattice().n_vertices(), tile_size, dis.vertices_per_box())
}

// Profiles (r_1..r_Nboxes) with sum n and r_j <= min(n, nbar), with the log
// of their weight: fbar(pattern) * prod_j C(nbar, r_j).
fn set_profiles(fbar: &CoarseWeighting) -> Result<Vec<(Vec<u8>, f64)>> {
    let n = fbar.tile_size();
    let n_boxes = fbar.dissection().n_boxes();
    let n_bar = fbar.dissection().vertices_per_box();
    let cap = n.min(n_bar) as u8;
    let mut out = Vec::new();
    let mut profile = vec![0u8; n_boxes];
    fn rec(
        fbar: &CoarseWeighting,
        profile: &mut Vec<u8>,
        idx: usize,
        left: u8,
        cap: u8,
        out: &mut Vec<(Vec<u8>, f64)>,
    ) -> Result<()> {
        if idx == profile.len() {
            if left == 0 {
                let mut pattern = Vec::new();
                for (b, &r) in profile.iter().enumerate() {
                    for _ in 0..r {
                        pattern.push(b);
                    }
                }
                let n_bar = fbar.dissection().vertices_per_box();
                let mut log_w = fbar.log_value_pattern(&pattern)?;
                for &r in profile.iter() {
                    log_w += math::ln(binomial(n_bar, r as usize) as f64);
                }
                out.push((profile.clone(), log_w));
            }
            return Ok(());
        }
        for r in 0..=left.min(cap) {
            profile[idx] = r;
            rec(fbar, profile, idx + 1, left - r, cap, out)?;
            profile[idx] = 0;
        }
        Ok(())
    }
    rec(fbar, &mut profile, 0, n as u8, cap, &mut out)?;
    Ok(out)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Log of the proto-sum restricted to sequences filling every box exactly:
/// dynamic programming over remaining box capacities, then the 1/(N/n)! and
/// (nbar!/nbar^nbar)^Nboxes factors. The state lattice has
/// (nbar+1)^Nboxes cells, so the box count is budgeted.
pub fn z_prime(fbar: &CoarseWeighting, box_budget: usize) -> Result<f64> {
    let dis = fbar.dissection();
    let n = fbar.tile_size();
    let n_boxes = dis.n_boxes();
    let n_bar = dis.vertices_per_box();
    if n_boxes > box_budget {
        return Err(Error::budget(alloc::format!(
            "{n_boxes} boxes exceed the occupancy-table budget of {box_budget}"
        )));
    }
    let n_vertices = dis.lattice().n_vertices();
    if n_vertices % n != 0 {
        return Err(Error::domain("tile size must divide the vertex count"));
    }
    let profiles = set_profiles(fbar)?;
    let sets = n_vertices / n;

    let mut dp: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    dp.insert(vec![n_bar as u8; n_boxes], 0.0);
    for _ in 0..sets {
        let mut next: BTreeMap<Vec<u8>, LogSum> = BTreeMap::new();
        for (state, &log_v) in &dp {
            for (profile, log_w) in &profiles {
                if state.iter().zip(profile).all(|(&s, &r)| s >= r) {
                    let reduced: Vec<u8> =
                        state.iter().zip(profile).map(|(&s, &r)| s - r).collect();
                    next.entry(reduced).or_default().add_log(log_v + log_w);
                }
            }
        }
        dp = next.into_iter().map(|(k, v)| (k, v.total_log())).collect();
    }
    let filled = dp
        .get(vec![0u8; n_boxes].as_slice())
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    Ok(filled - ln_factorial(sets as u64)
        + n_boxes as f64
            * (ln_factorial(n_bar as u64) - n_bar as f64 * math::ln(n_bar as f64)))
}

/// Per-box counts of how many tile vertices (with multiplicity across sets)
/// fall in each box.
pub fn occupancy_vector(sets: &[Vec<usize>], dis: &Dissection) -> Vec<usize> {
    let mut counts = vec![0usize; dis.n_boxes()];
    for set in sets {
        for &v in set {
            counts[dis.box_of(v)] += 1;
        }
    }
    counts
}

/// Translation class of a pointed box multiset: the sorted minimal-image
/// coarse displacements of the n-1 rest boxes from the pointed box. The
/// pointing pins the base, so no further canonicalization is needed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Supertype {
    rest: Vec<Vec<i64>>,
}

impl Supertype {
    pub fn rest_displacements(&self) -> &[Vec<i64>] {
        &self.rest
    }

    /// Concrete rest-box ids when the pointed box is the coarse origin.
    pub fn rest_boxes(&self, dis: &Dissection) -> Vec<usize> {
        self.rest
            .iter()
            .map(|d| dis.coarse_lattice().vertex(d))
            .collect()
    }

    /// Largest box-center distance from the pointed box to a rest box.
    pub fn radius(&self, dis: &Dissection) -> f64 {
        self.rest
            .iter()
            .map(|d| dis.box_edge() as f64 * displacement_norm(d, Norm::Euclidean))
            .fold(0.0, f64::max)
    }
}

/// Slack applied to cutoff comparisons so boxes at the nominal radius stay in.
pub(crate) const CUTOFF_TOL: f64 = 1e-12;

/// All supertypes whose rest boxes lie within `cutoff_radius` of the pointed
/// box (box-center minimal-image distance), in canonical order.
pub fn enumerate_supertypes(dis: &Dissection, tile_size: usize, cutoff_radius: f64) -> Vec<Supertype> {
    let coarse = dis.coarse_lattice();
    let mut seen: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    for rest in (0..dis.n_boxes()).combinations_with_replacement(tile_size - 1) {
        let mut disp: Vec<Vec<i64>> = rest
            .iter()
            .map(|&b| coarse.torus_displacement(0, b).expect("box ids in range"))
            .collect();
        disp.sort();
        seen.insert(disp);
    }
    seen.into_iter()
        .map(|rest| Supertype { rest })
        .filter(|t| t.radius(dis) <= cutoff_radius + CUTOFF_TOL)
        .collect()
}

/// Cutoff radius that keeps every supertype of the dissection.
pub fn covering_cutoff(dis: &Dissection) -> f64 {
    let coarse = dis.coarse_lattice();
    (1..coarse.n_vertices())
        .map(|b| dis.box_center_distance(0, b, Norm::Euclidean))
        .fold(0.0, f64::max)
}

/// Number of pointed placements covered by a supertype: the pointing vertex
/// fixed in the pointed box, the n-1 rest vertices distinct and distributed
/// per the rest multiset.
pub fn placement_count(dis: &Dissection, t: &Supertype) -> u128 {
    let n_bar = dis.vertices_per_box();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for b in t.rest_boxes(dis) {
        *counts.entry(b).or_insert(0) += 1;
    }
    let mut placements: u128 = 1;
    for (&b, &m) in &counts {
        let available = if b == 0 { n_bar - 1 } else { n_bar };
        placements *= binomial(available, m);
    }
    placements
}

/// Mass of a supertype: the sum of fbar over pointed placements covered by
/// it. fbar is box-constant, so the sum collapses to the placement count
/// times the pattern value; independence from the choice of pointing vertex
/// follows.
pub fn supertype_mass(fbar: &CoarseWeighting, t: &Supertype) -> Result<f64> {
    let dis = fbar.dissection();
    let placements = placement_count(dis, t);
    if placements == 0 {
        return Ok(0.0);
    }
    let mut pattern = Vec::with_capacity(fbar.tile_size());
    pattern.push(0usize);
    pattern.extend_from_slice(&t.rest_boxes(dis));
    Ok(math::exp(fbar.log_value_pattern(&pattern)?) * placements as f64)
}

/// Supertype masses in retention order: sorted by descending mass with ties
/// broken by canonical encoding. `m_bar` is the shortest prefix holding all
/// but eps/20 of the mass; `kept` additionally drops prefix entries with
/// mass at most eps/(20 m_bar), which leaves the kept mass above 1 - eps/10.
#[derive(Debug, Clone)]
pub struct MassSpectrum {
    pub entries: Vec<(Supertype, f64)>,
    pub m_bar: usize,
    pub kept: usize,
    pub eps: f64,
    /// Radius used at enumeration time; masses beyond it are absent.
    pub cutoff: f64,
}

impl MassSpectrum {
    pub fn build(fbar: &CoarseWeighting, cutoff_radius: f64, eps: f64) -> Result<MassSpectrum> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::domain("eps must be positive"));
        }
        let supertypes = enumerate_supertypes(fbar.dissection(), fbar.tile_size(), cutoff_radius);
        let mut entries = Vec::with_capacity(supertypes.len());
        for t in supertypes {
            let mass = supertype_mass(fbar, &t)?;
            entries.push((t, mass));
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self::from_sorted(entries, eps, cutoff_radius))
    }

    /// Spectrum over synthetic masses (placeholder supertypes); intended for
    /// exercising the rounding pipeline on arbitrary inputs.
    pub fn from_masses(masses: &[f64], eps: f64) -> MassSpectrum {
        let mut entries: Vec<(Supertype, f64)> = masses
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                (
                    Supertype {
                        rest: vec![vec![i as i64]],
                    },
                    m,
                )
            })
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_sorted(entries, eps, f64::INFINITY)
    }

    fn from_sorted(entries: Vec<(Supertype, f64)>, eps: f64, cutoff: f64) -> MassSpectrum {
        let mut cumulative = 0.0;
        let mut m_bar = entries.len();
        for (i, (_, mass)) in entries.iter().enumerate() {
            cumulative += mass;
            if cumulative > 1.0 - eps / 20.0 {
                m_bar = i + 1;
                break;
            }
        }
        let floor = eps / (20.0 * m_bar.max(1) as f64);
        let kept = entries
            .iter()
            .take(m_bar)
            .take_while(|(_, mass)| *mass > floor)
            .count();
        MassSpectrum {
            entries,
            m_bar,
            kept,
            eps,
            cutoff,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    pub fn mass_through(&self, count: usize) -> f64 {
        self.entries.iter().take(count).map(|(_, m)| m).sum()
    }
}

/// Proportions assigned to the kept supertypes: exact rationals on the grid
/// of multiples of n/nbar, summing to 1, zero beyond the kept prefix.
#[derive(Debug, Clone)]
pub struct AlphaAssignment {
    /// Aligned with the spectrum entries.
    pub alphas: Vec<BigRational>,
    /// The ideal proportions a_k / (kept mass), same alignment.
    pub ideals: Vec<BigRational>,
    pub kept: usize,
    /// Grid step n/nbar.
    pub grid: BigRational,
    /// Whether nbar > 200 m_bar n / eps^2 held, which guarantees
    /// |alpha_k - ideal_k| <= (eps/10) a_k; rounding is best-effort otherwise.
    pub feasible: bool,
}

/// Rounds the ideal proportions onto the grid by pairwise transfer: move the
/// entry closest below a grid point down and the entry closest above up by
/// the smaller of the two distances. Each round lands at least one entry on
/// the grid, no entry leaves its starting grid interval, and the sum is
/// preserved exactly.
pub fn choose_alpha(
    spectrum: &MassSpectrum,
    n_bar: usize,
    tile_size: usize,
    eps: f64,
) -> Result<AlphaAssignment> {
    if spectrum.kept == 0 {
        return Err(Error::domain("spectrum keeps no supertypes"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    if tile_size == 0 || n_bar % tile_size != 0 {
        return Err(Error::domain("tile size must divide the box size"));
    }
    let kept = spectrum.kept;
    let grid = BigRational::new(tile_size.into(), n_bar.into());
    let mut kept_mass = BigRational::zero();
    let mut exact_masses = Vec::with_capacity(kept);
    for (_, mass) in spectrum.entries.iter().take(kept) {
        let m = BigRational::from_float(*mass)
            .ok_or_else(|| Error::domain("masses must be finite"))?;
        kept_mass += &m;
        exact_masses.push(m);
    }
    if kept_mass <= BigRational::zero() {
        return Err(Error::domain("kept mass must be positive"));
    }
    let ideals: Vec<BigRational> = exact_masses.iter().map(|m| m / &kept_mass).collect();

    let mut alphas = ideals.clone();
    loop {
        // distances to the nearest grid points below and above
        let mut down: Option<(usize, BigRational)> = None;
        let mut up: Option<(usize, BigRational)> = None;
        for (i, a) in alphas.iter().enumerate() {
            let q = (a / &grid).floor();
            let lo = &q * &grid;
            if &lo == a {
                continue;
            }
            let d_down = a - &lo;
            let d_up = (&lo + &grid) - a;
            if down.as_ref().is_none_or(|(_, d)| d_down < *d) {
                down = Some((i, d_down));
            }
            if up.as_ref().is_none_or(|(_, d)| d_up < *d) {
                up = Some((i, d_up));
            }
        }
        let (Some((i_down, d_down)), Some((i_up, d_up))) = (down, up) else {
            break;
        };
        let (i_down, i_up, d_down, d_up) = if i_down != i_up {
            (i_down, i_up, d_down, d_up)
        } else {
            // a single entry cannot be alone off-grid: the sum of the others
            // is a grid multiple and so would be 1 minus one, i.e. on-grid;
            // re-pick the up entry among the rest
            let mut up2: Option<(usize, BigRational)> = None;
            for (i, a) in alphas.iter().enumerate() {
                if i == i_down {
                    continue;
                }
                let lo = (a / &grid).floor() * &grid;
                if &lo == a {
                    continue;
                }
                let d = (&lo + &grid) - a;
                if up2.as_ref().is_none_or(|(_, best)| d < *best) {
                    up2 = Some((i, d));
                }
            }
            let (i_up, d_up) = up2.ok_or_else(|| Error::invariant("lone off-grid proportion"))?;
            (i_down, i_up, d_down, d_up)
        };
        let t = d_down.min(d_up);
        alphas[i_down] -= &t;
        alphas[i_up] += &t;
    }

    let mut alphas_full = alphas;
    let mut ideals_full = ideals;
    alphas_full.resize(spectrum.entries.len(), BigRational::zero());
    ideals_full.resize(spectrum.entries.len(), BigRational::zero());

    // feasibility for the deviation guarantee: nbar > 200 m_bar n / eps^2
    let feasible = (n_bar as f64) * eps * eps > 200.0 * spectrum.m_bar as f64 * tile_size as f64;
    Ok(AlphaAssignment {
        alphas: alphas_full,
        ideals: ideals_full,
        kept,
        grid,
        feasible,
    })
}

/// The five log factors of the structured lower bound and their total.
#[derive(Debug, Clone, Copy)]
pub struct ZMinusParts {
    pub log_factors: [f64; 5],
    pub log_total: f64,
}

/// Log of the supertype-structured lower bound: assigns each set slot a
/// supertype in proportion alpha, with nbar/n pointing locations per box.
/// Requires every alpha_k * nbar / n to be an integer.
pub fn z_minus_lower(
    fbar: &CoarseWeighting,
    spectrum: &MassSpectrum,
    alpha: &AlphaAssignment,
) -> Result<ZMinusParts> {
    let dis = fbar.dissection();
    let n = fbar.tile_size();
    let n_vertices = dis.lattice().n_vertices();
    let n_bar = dis.vertices_per_box();
    let n_boxes = dis.n_boxes() as f64;
    if n_bar % n != 0 {
        return Err(Error::domain("tile size must divide the box size"));
    }
    if alpha.alphas.len() != spectrum.entries.len() {
        return Err(Error::domain("alpha and spectrum lengths differ"));
    }
    let per_box = BigRational::new(n_bar.into(), n.into());
    let mut slots: Vec<u64> = Vec::with_capacity(alpha.alphas.len());
    for a in &alpha.alphas {
        if a.is_negative() {
            return Err(Error::domain("alpha entries must be nonnegative"));
        }
        let scaled = a * &per_box;
        if !scaled.is_integer() {
            return Err(Error::domain("alpha entries must be multiples of n/nbar"));
        }
        slots.push(
            scaled
                .to_integer()
                .to_u64()
                .ok_or_else(|| Error::domain("alpha slot count overflow"))?,
        );
    }

    let sets = (n_vertices / n) as f64;
    let sites = n_vertices as f64 / n_bar as f64;
    let facts = LnFactorials::up_to((n_bar / n).max(n_bar) as u64);
    let log_f1 = -ln_factorial((n_vertices / n) as u64)
        + n_boxes * (facts.get(n_bar as u64) - n_bar as f64 * math::ln(n_bar as f64));
    let log_f2 = -sets * math::ln(n as f64);
    let log_f3 = ln_factorial((n_vertices / n) as u64) - sites * facts.get((n_bar / n) as u64)
        + sets * math::ln(n_bar as f64);
    let mut slot_fact_sum = 0.0;
    let mut slot_mass_sum = 0.0;
    for (&r, (_, mass)) in slots.iter().zip(&spectrum.entries) {
        slot_fact_sum += facts.get(r);
        if r > 0 {
            slot_mass_sum += r as f64 * math::ln(*mass);
        }
    }
    let log_f4 = sites * (facts.get((n_bar / n) as u64) - slot_fact_sum);
    let log_f5 = sites * slot_mass_sum;
    let log_factors = [log_f1, log_f2, log_f3, log_f4, log_f5];
    Ok(ZMinusParts {
        log_factors,
        log_total: log_factors.iter().sum(),
    })
}

/// Budgets for the optional ladder rungs.
#[derive(Debug, Clone, Copy)]
pub struct LadderBudgets {
    /// Largest box count for which z_prime's occupancy table is attempted.
    pub box_budget: usize,
    /// Tiling cap for the optional exact coarse partition function.
    pub enumeration_budget: u64,
    /// Whether to enumerate the exact partition function of fbar.
    pub exact_coarse: bool,
}

impl Default for LadderBudgets {
    fn default() -> Self {
        LadderBudgets {
            box_budget: 4,
            enumeration_budget: exact::DEFAULT_ENUMERATION_BUDGET,
            exact_coarse: true,
        }
    }
}

/// Every rung and diagnostic computed for one instance. Roots are the
/// per-vertex values exp(log/N).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n_vertices: usize,
    pub tile_size: usize,
    pub per_box: usize,
    pub n_boxes: usize,
    pub log_z_plus: f64,
    pub log_z_prime: Option<f64>,
    pub log_z_minus: Option<f64>,
    pub factors: Option<[f64; 5]>,
    pub alpha_feasible: Option<bool>,
    pub root_z_plus: f64,
    pub root_z_prime: Option<f64>,
    pub root_z_minus: Option<f64>,
    /// Constant-weight closed-form root at the same (N, n).
    pub root_z0_hat: f64,
    /// Infinite-volume constant-weight root.
    pub root_z0_limit: f64,
    /// |root_z_plus - root_z0_hat|: the closed-form convergence gap.
    pub gap_plus_hat: f64,
    /// Exact coarse partition function, when enumerated.
    pub log_z_coarse_exact: Option<f64>,
    /// |root_z_prime - exact coarse root|, when both are present.
    pub gap_prime_exact: Option<f64>,
    /// |root_z_plus - root_z_minus|, when the lower rung is present.
    pub gap_plus_minus: Option<f64>,
}

/// Checks the rung ordering z_plus >= z_prime >= z_minus within 1e-9
/// relative; a violation is reported as an invariant error.
pub fn verify_ordering(report: &BoundReport) -> Result<()> {
    let tol = 1e-9;
    let mut upper = report.log_z_plus;
    if let Some(zp) = report.log_z_prime {
        if zp > upper + tol {
            return Err(Error::invariant(alloc::format!(
                "restricted sum exceeds the unrestricted sum: {zp} > {upper}"
            )));
        }
        upper = zp;
    }
    if let Some(zm) = report.log_z_minus {
        if zm > upper + tol {
            return Err(Error::invariant(alloc::format!(
                "lower bound exceeds the rung above it: {zm} > {upper}"
            )));
        }
    }
    Ok(())
}

/// Computes every affordable rung for the instance, checks the ordering, and
/// reports convergence diagnostics.
pub fn ladder_check(
    f: &Weighting,
    dis: &Dissection,
    eps: f64,
    budgets: &LadderBudgets,
) -> Result<BoundReport> {
    let n = f.tile_size();
    let n_vertices = f.lattice().n_vertices();
    let n_bar = dis.vertices_per_box();
    let fbar = crate::weighting::coarse_average(f, dis)?;

    let log_z_plus = z_plus(dis, n)?;
    let log_z_prime = match z_prime(&fbar, budgets.box_budget) {
        Ok(v) => Some(v),
        Err(Error::Budget(_)) => None,
        Err(e) => return Err(e),
    };
    let (log_z_minus, factors, alpha_feasible) = if n_bar % n == 0 {
        let spectrum = MassSpectrum::build(&fbar, covering_cutoff(dis), eps)?;
        let alpha = choose_alpha(&spectrum, n_bar, n, eps)?;
        let parts = z_minus_lower(&fbar, &spectrum, &alpha)?;
        (Some(parts.log_total), Some(parts.log_factors), Some(alpha.feasible))
    } else {
        (None, None, None)
    };

    let inv_n = 1.0 / n_vertices as f64;
    let hat = exact::z0_hat(n_vertices, n)?;
    let limit = exact::z0_limit(n)?;
    let root_z_plus = math::exp(log_z_plus * inv_n);
    let root_z0_hat = math::exp(hat.pressure);

    let log_z_coarse_exact = if budgets.exact_coarse {
        match exact::exact_partition_with_budget(&fbar, budgets.enumeration_budget) {
            Ok(r) => Some(r.log_z),
            Err(Error::Budget(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let root_z_prime = log_z_prime.map(|z| math::exp(z * inv_n));
    let root_z_minus = log_z_minus.map(|z| math::exp(z * inv_n));
    let report = BoundReport {
        n_vertices,
        tile_size: n,
        per_box: n_bar,
        n_boxes: dis.n_boxes(),
        log_z_plus,
        log_z_prime,
        log_z_minus,
        factors,
        alpha_feasible,
        root_z_plus,
        root_z_prime,
        root_z_minus,
        root_z0_hat,
        root_z0_limit: limit.z,
        gap_plus_hat: math::abs(root_z_plus - root_z0_hat),
        log_z_coarse_exact,
        gap_prime_exact: match (root_z_prime, log_z_coarse_exact) {
            (Some(rp), Some(lz)) => Some(math::abs(rp - math::exp(lz * inv_n))),
            _ => None,
        },
        gap_plus_minus: root_z_minus.map(|rm| math::abs(root_z_plus - rm)),
    };
    verify_ordering(&report)?;
    Ok(report)
}

/// Sum of the activity over all pointed placements at a fixed vertex; 1 for
/// every normalized weighting and every coarse average of one.
pub fn pointed_completion_sum<A: Activity>(f: &A, vertex: usize) -> Result<f64> {
    let n_vertices = f.lattice().n_vertices();
    if vertex >= n_vertices {
        return Err(Error::domain("vertex id out of range"));
    }
    let mut sum = LogSum::new();
    let others: Vec<usize> = (0..n_vertices).filter(|&v| v != vertex).collect();
    for rest in others.into_iter().combinations(f.tile_size() - 1) {
        let mut tuple = Vec::with_capacity(f.tile_size());
        tuple.push(vertex);
        tuple.extend_from_slice(&rest);
        sum.add_log(f.log_value(&tuple)?);
    }
    Ok(math::exp(sum.total_log()))
}
