//! Activity functions on size-n tiles: normalized translation-invariant
//! weight families, smoothness and decay statistics, integer rescaling, and
//! box-averaged coarse weightings.
//!
//! A weighting assigns a strictly positive value to every n-tuple of lattice
//! vertices, depends only on the tuple's translation class, is symmetric
//! under permutations, and is normalized so the sum over all (n-1)-subsets
//! completing a fixed vertex equals 1. Construction tabulates every
//! translation class up front, so the table is the single source of truth
//! and evaluation is pure lookup; intended for enumeration-scale lattices.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::Zero;

use crate::lattice::{Dissection, Lattice, Norm};
use crate::math;
use crate::numerics::LogSum;
use crate::{Error, Result};

/// Canonical form of a vertex tuple's translation class: the sorted list of
/// minimal-image displacements from a base vertex, minimized lexicographically
/// over the choice of base. Tuples with repeated vertices yield repeated or
/// zero displacements, so diagonal classes are representable too.
pub type CanonKey = Vec<Vec<i64>>;

/// Largest vertex count for which exact-rational tables are built.
pub const RATIONAL_LATTICE_CAP: usize = 12;

pub fn canonical_key(lat: &Lattice, tuple: &[usize]) -> CanonKey {
    assert!(!tuple.is_empty());
    let mut best: Option<CanonKey> = None;
    for (i, &base) in tuple.iter().enumerate() {
        let mut disp: Vec<Vec<i64>> = Vec::with_capacity(tuple.len() - 1);
        for (j, &v) in tuple.iter().enumerate() {
            if j != i {
                disp.push(lat.torus_displacement(base, v).expect("vertices in range"));
            }
        }
        disp.sort();
        if best.as_ref().is_none_or(|b| disp < *b) {
            best = Some(disp);
        }
    }
    best.unwrap()
}

/// Parametric weight families. Values are raw (pre-normalization); the
/// constructor divides by the pointed sum.
#[derive(Debug, Clone)]
pub enum WeightingFamily {
    /// Raw value 1 on every tuple.
    Constant,
    /// Raw value exp(-(1/ell) * sum of pairwise minimal-image distances).
    PairExponential { ell: f64, norm: Norm },
    /// Raw values supplied per canonical class; must cover every class of the
    /// target lattice, diagonal classes included.
    UserTable(BTreeMap<CanonKey, f64>),
}

impl WeightingFamily {
    pub fn norm(&self) -> Norm {
        match self {
            WeightingFamily::PairExponential { norm, .. } => *norm,
            _ => Norm::Euclidean,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightingFamily::PairExponential { ell, .. } => {
                if !(ell.is_finite() && *ell > 0.0) {
                    return Err(Error::domain("pair-exponential scale must be finite and positive"));
                }
            }
            WeightingFamily::Constant | WeightingFamily::UserTable(_) => {}
        }
        Ok(())
    }

    fn log_raw(&self, lat: &Lattice, rep: &[usize], key: &CanonKey) -> Result<f64> {
        let log_raw = match self {
            WeightingFamily::Constant => 0.0,
            WeightingFamily::PairExponential { ell, norm } => {
                let mut sum = 0.0;
                for i in 0..rep.len() {
                    for j in i + 1..rep.len() {
                        sum += lat.min_image_distance(rep[i], rep[j], *norm)?;
                    }
                }
                -sum / ell
            }
            WeightingFamily::UserTable(raws) => {
                let raw = *raws.get(key).ok_or_else(|| {
                    Error::domain("user table does not cover every tuple class")
                })?;
                if !(raw.is_finite() && raw > 0.0) {
                    return Err(Error::domain("user table raw values must be finite and positive"));
                }
                math::ln(raw)
            }
        };
        if log_raw.is_nan() || log_raw == f64::INFINITY {
            return Err(Error::domain("raw weight overflow"));
        }
        Ok(log_raw)
    }
}

/// Normalized activity on n-tuples of a fixed lattice. `classes` holds the
/// log raw value of every translation class (diagonal classes included);
/// normalized log values subtract `log_norm`, the log of the pointed raw sum.
#[derive(Debug, Clone)]
pub struct Weighting {
    lat: Lattice,
    n: usize,
    norm: Norm,
    log_norm: f64,
    classes: BTreeMap<CanonKey, f64>,
    rational: Option<BTreeMap<CanonKey, BigRational>>,
}

/// Shared evaluation surface for fine and coarse weightings: a positive
/// activity on n-tuples of a lattice, with an optional exact-rational view.
pub trait Activity {
    fn lattice(&self) -> &Lattice;
    fn tile_size(&self) -> usize;
    /// Natural log of the normalized value on a tuple of vertex ids.
    fn log_value(&self, tuple: &[usize]) -> Result<f64>;
    /// Exact normalized value, when a rational table was built.
    fn rational_value(&self, tuple: &[usize]) -> Option<BigRational>;
}

fn check_tuple(lat: &Lattice, n: usize, tuple: &[usize]) -> Result<()> {
    if tuple.len() != n {
        return Err(Error::domain("tuple length must equal the tile size"));
    }
    if tuple.iter().any(|&v| v >= lat.n_vertices()) {
        return Err(Error::domain("vertex id out of range"));
    }
    Ok(())
}

impl Weighting {
    pub fn lattice(&self) -> &Lattice {
        &self.lat
    }

    pub fn tile_size(&self) -> usize {
        self.n
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn has_rational(&self) -> bool {
        self.rational.is_some()
    }

    pub fn value(&self, tuple: &[usize]) -> Result<f64> {
        Ok(math::exp(self.log_value(tuple)?))
    }

    fn class_log_value(&self, key: &CanonKey) -> f64 {
        // every translation class is tabulated at construction
        self.classes[key] - self.log_norm
    }
}

impl Activity for Weighting {
    fn lattice(&self) -> &Lattice {
        &self.lat
    }

    fn tile_size(&self) -> usize {
        self.n
    }

    fn log_value(&self, tuple: &[usize]) -> Result<f64> {
        check_tuple(&self.lat, self.n, tuple)?;
        Ok(self.class_log_value(&canonical_key(&self.lat, tuple)))
    }

    fn rational_value(&self, tuple: &[usize]) -> Option<BigRational> {
        check_tuple(&self.lat, self.n, tuple).ok()?;
        self.rational
            .as_ref()?
            .get(&canonical_key(&self.lat, tuple))
            .cloned()
    }
}

// Sorted displacements are pairwise distinct and nonzero exactly when the
// tuple's vertices are distinct.
fn is_off_diagonal(key: &CanonKey) -> bool {
    key.iter().all(|d| d.iter().any(|&c| c != 0)) && key.windows(2).all(|w| w[0] != w[1])
}

fn rep_tuple(lat: &Lattice, key: &CanonKey) -> Vec<usize> {
    let mut t = Vec::with_capacity(key.len() + 1);
    t.push(0);
    for disp in key {
        t.push(lat.vertex(disp));
    }
    t
}

/// Builds a normalized weighting: tabulates the raw value of every tuple
/// class, sums raw values over the (n-1)-subsets completing vertex 0, and
/// divides by that sum. On lattices with at most [`RATIONAL_LATTICE_CAP`]
/// vertices an exact-rational table of the normalized off-diagonal values is
/// built alongside, from the same f64 raws.
pub fn build_weighting(fam: &WeightingFamily, lat: Lattice, n: usize) -> Result<Weighting> {
    if n == 0 {
        return Err(Error::domain("tile size must be at least 1"));
    }
    if lat.n_vertices() % n != 0 {
        return Err(Error::domain("tile size must divide the vertex count"));
    }
    fam.validate()?;

    let big_n = lat.n_vertices();
    let mut classes: BTreeMap<CanonKey, f64> = BTreeMap::new();
    let mut norm = LogSum::new();
    // Every tuple class has a representative containing vertex 0, so visiting
    // all multisets {0} + (n-1 others, repeats allowed) covers the keyspace,
    // and the off-diagonal subsets among them are exactly the Eq-3 pointed
    // completions.
    for others in (0..big_n).combinations_with_replacement(n - 1) {
        let mut tuple = Vec::with_capacity(n);
        tuple.push(0);
        tuple.extend_from_slice(&others);
        let key = canonical_key(&lat, &tuple);
        let log_raw = match classes.get(&key) {
            Some(&v) => v,
            None => {
                let rep = rep_tuple(&lat, &key);
                let v = fam.log_raw(&lat, &rep, &key)?;
                classes.insert(key.clone(), v);
                v
            }
        };
        // tuple is sorted (0, then an ascending multiset), so adjacent
        // comparison decides distinctness
        if is_off_diagonal(&key) && tuple.windows(2).all(|w| w[0] != w[1]) {
            norm.add_log(log_raw);
        }
    }
    let log_norm = norm.total_log();
    if !log_norm.is_finite() {
        return Err(Error::domain("normalizing sum is not finite"));
    }

    let rational = if big_n <= RATIONAL_LATTICE_CAP {
        Some(build_rational_table(&lat, n, &classes)?)
    } else {
        None
    };

    Ok(Weighting {
        lat,
        n,
        norm: fam.norm(),
        log_norm,
        classes,
        rational,
    })
}

// Exact renormalization of the f64 raws: each raw is converted to a rational
// exactly, the pointed sum is accumulated exactly, and normalized values are
// stored per off-diagonal class.
fn build_rational_table(
    lat: &Lattice,
    n: usize,
    classes: &BTreeMap<CanonKey, f64>,
) -> Result<BTreeMap<CanonKey, BigRational>> {
    let mut raws: BTreeMap<CanonKey, BigRational> = BTreeMap::new();
    let mut norm = BigRational::zero();
    for others in (1..lat.n_vertices()).combinations(n - 1) {
        let mut tuple = Vec::with_capacity(n);
        tuple.push(0);
        tuple.extend_from_slice(&others);
        let key = canonical_key(lat, &tuple);
        let raw = match raws.get(&key) {
            Some(r) => r.clone(),
            None => {
                let r = BigRational::from_float(math::exp(classes[&key]))
                    .ok_or_else(|| Error::domain("raw weight is not a finite float"))?;
                raws.insert(key.clone(), r.clone());
                r
            }
        };
        norm += raw;
    }
    Ok(raws
        .into_iter()
        .map(|(k, r)| (k, r / norm.clone()))
        .collect())
}

/// Smallest s with |f(t') - f(t)| <= s * max(f(t), f(t')) over all tuples t
/// (diagonals included) and all single-vertex unit moves t -> t'. Exhaustive
/// over the tabulated classes; 0 exactly when f is constant.
pub fn smoothness(f: &Weighting) -> f64 {
    let n = f.n;
    let shifts = f.lat.unit_shifts();
    let mut worst = 0.0f64;
    for key in f.classes.keys() {
        let rep = rep_tuple(&f.lat, key);
        let v0 = math::exp(f.class_log_value(key));
        for pos in 0..n {
            for shift in &shifts {
                let mut moved = rep.clone();
                moved[pos] = f.lat.translate(rep[pos], shift);
                let v1 = math::exp(f.class_log_value(&canonical_key(&f.lat, &moved)));
                let ratio = math::abs(v0 - v1) / v0.max(v1);
                if ratio > worst {
                    worst = ratio;
                }
            }
        }
    }
    worst
}

/// Smallest R with f(t) <= exp(-maxdist(t)/R) over all off-diagonal tile
/// shapes t, i.e. the max of maxdist/(-ln f); infinity when some shape with
/// positive diameter has f >= 1.
pub fn decay_radius(f: &Weighting) -> f64 {
    let mut radius = 0.0f64;
    for key in f.classes.keys() {
        if !is_off_diagonal(key) {
            continue;
        }
        let rep = rep_tuple(&f.lat, key);
        let mut maxdist = 0.0f64;
        for i in 0..rep.len() {
            for j in i + 1..rep.len() {
                maxdist = maxdist.max(
                    f.lat
                        .min_image_distance(rep[i], rep[j], f.norm)
                        .expect("representative vertices in range"),
                );
            }
        }
        if maxdist == 0.0 {
            continue;
        }
        let log_f = f.class_log_value(key);
        if log_f >= 0.0 {
            return f64::INFINITY;
        }
        radius = radius.max(maxdist / -log_f);
    }
    radius
}

/// A rescaled weighting and the normalization defect it carried before being
/// renormalized.
#[derive(Debug, Clone)]
pub struct ScaledWeighting {
    pub weighting: Weighting,
    /// |pointed sum of the raw rescaled values - 1|: the finite-lattice error
    /// of the scale transformation acknowledged by the construction. Zero for
    /// lambda = 1; of order (lambda-1)/N even for constant f, since the
    /// lattice Jacobian lambda^d only approximates the subset-count ratio.
    pub defect: f64,
}

/// Pulls f back along vertex scaling by an integer factor: the result lives
/// on the lattice with edge L/lambda and has raw value lambda^d * f(lambda*t),
/// renormalized. lambda must divide the edge and the target vertex count must
/// remain divisible by n.
pub fn scale_weighting(f: &Weighting, lambda: i64) -> Result<ScaledWeighting> {
    if lambda < 1 {
        return Err(Error::domain("scale factor must be a positive integer"));
    }
    if f.lat.edge() % lambda != 0 {
        return Err(Error::domain("scale factor must divide the lattice edge"));
    }
    let target = Lattice::new(f.lat.dim(), f.lat.edge() / lambda)?;
    if target.n_vertices() % f.n != 0 {
        return Err(Error::domain("tile size must divide the rescaled vertex count"));
    }
    let jacobian = lambda.pow(f.lat.dim() as u32) as f64;
    let mut raws: BTreeMap<CanonKey, f64> = BTreeMap::new();
    for others in (0..target.n_vertices()).combinations_with_replacement(f.n - 1) {
        let mut tuple = Vec::with_capacity(f.n);
        tuple.push(0);
        tuple.extend_from_slice(&others);
        let key = canonical_key(&target, &tuple);
        if raws.contains_key(&key) {
            continue;
        }
        // scaled displacements stay minimal-image distinct: |lambda*x| <= L/2
        let mut source = Vec::with_capacity(f.n);
        source.push(0);
        for disp in &key {
            let scaled: Vec<i64> = disp.iter().map(|&c| c * lambda).collect();
            source.push(f.lat.vertex(&scaled));
        }
        let value = math::exp(f.log_value(&source)?);
        raws.insert(key, jacobian * value);
    }
    let weighting = build_weighting(&WeightingFamily::UserTable(raws), target, f.n)?;
    let defect = math::abs(math::exp(weighting.log_norm) - 1.0);
    Ok(ScaledWeighting { weighting, defect })
}

/// Box-averaged coarse weighting: constant on box-membership patterns, each
/// table entry the mean of f over the distinct-vertex assignments realizing
/// the pattern. Patterns asking more vertices of a box than it holds are
/// unreachable and left untabulated.
#[derive(Debug, Clone)]
pub struct CoarseWeighting {
    dis: Dissection,
    n: usize,
    table: BTreeMap<CanonKey, f64>,
    rational: Option<BTreeMap<CanonKey, BigRational>>,
}

impl CoarseWeighting {
    pub fn dissection(&self) -> &Dissection {
        &self.dis
    }

    pub fn tile_size(&self) -> usize {
        self.n
    }

    pub fn has_rational(&self) -> bool {
        self.rational.is_some()
    }

    fn pattern_key(&self, boxes: &[usize]) -> Result<CanonKey> {
        if boxes.len() != self.n {
            return Err(Error::domain("pattern length must equal the tile size"));
        }
        if boxes.iter().any(|&b| b >= self.dis.n_boxes()) {
            return Err(Error::domain("box id out of range"));
        }
        Ok(canonical_key(self.dis.coarse_lattice(), boxes))
    }

    /// Log of the averaged value on a box pattern (one box id per tuple slot).
    pub fn log_value_pattern(&self, boxes: &[usize]) -> Result<f64> {
        let key = self.pattern_key(boxes)?;
        self.table
            .get(&key)
            .copied()
            .ok_or_else(|| Error::domain("box pattern exceeds box capacity"))
    }

    pub fn rational_value_pattern(&self, boxes: &[usize]) -> Option<BigRational> {
        let key = self.pattern_key(boxes).ok()?;
        self.rational.as_ref()?.get(&key).cloned()
    }

    fn boxes_of(&self, tuple: &[usize]) -> Result<Vec<usize>> {
        check_tuple(self.dis.lattice(), self.n, tuple)?;
        Ok(tuple.iter().map(|&v| self.dis.box_of(v)).collect())
    }
}

impl Activity for CoarseWeighting {
    fn lattice(&self) -> &Lattice {
        self.dis.lattice()
    }

    fn tile_size(&self) -> usize {
        self.n
    }

    fn log_value(&self, tuple: &[usize]) -> Result<f64> {
        self.log_value_pattern(&self.boxes_of(tuple)?)
    }

    fn rational_value(&self, tuple: &[usize]) -> Option<BigRational> {
        self.rational_value_pattern(&self.boxes_of(tuple).ok()?)
    }
}

/// Averages an activity over each reachable box-membership pattern. When the
/// activity carries rational values the averages are also taken exactly.
/// Averaging a box-constant activity (a coarse weighting viewed as a fine
/// activity) reproduces its table, making the operation idempotent.
pub fn coarse_average<A: Activity>(f: &A, dis: &Dissection) -> Result<CoarseWeighting> {
    if dis.lattice() != f.lattice() {
        return Err(Error::domain("dissection lattice differs from the weighting lattice"));
    }
    let n = f.tile_size();
    let n_bar = dis.vertices_per_box();
    let coarse = *dis.coarse_lattice();
    let mut table: BTreeMap<CanonKey, f64> = BTreeMap::new();
    let mut rational: Option<BTreeMap<CanonKey, BigRational>> = Some(BTreeMap::new());
    for others in (0..dis.n_boxes()).combinations_with_replacement(n - 1) {
        let mut pattern = Vec::with_capacity(n);
        pattern.push(0usize);
        pattern.extend_from_slice(&others);
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &b in &pattern {
            *counts.entry(b).or_insert(0) += 1;
        }
        if counts.values().any(|&m| m > n_bar) {
            continue;
        }
        let key = canonical_key(&coarse, &pattern);
        if table.contains_key(&key) {
            continue;
        }
        let per_box: Vec<Vec<Vec<usize>>> = counts
            .iter()
            .map(|(&b, &m)| dis.box_vertices(b).into_iter().combinations(m).collect())
            .collect();
        let mut sum = LogSum::new();
        let mut sum_rat = BigRational::zero();
        let mut count: u64 = 0;
        for choice in per_box.iter().multi_cartesian_product() {
            let fine: Vec<usize> = choice.iter().flat_map(|c| c.iter().copied()).collect();
            sum.add_log(f.log_value(&fine)?);
            if rational.is_some() {
                match f.rational_value(&fine) {
                    Some(r) => sum_rat += r,
                    None => rational = None,
                }
            }
            count += 1;
        }
        table.insert(key.clone(), sum.total_log() - math::ln(count as f64));
        if let Some(tbl) = rational.as_mut() {
            tbl.insert(key, sum_rat / BigRational::from_integer(count.into()));
        }
    }
    Ok(CoarseWeighting {
        dis: *dis,
        n,
        table,
        rational,
    })
}

/// Outcome of the coarse-approximation check: with a = box_edge * d * n * sm(f),
/// every off-diagonal tuple must satisfy |f - fbar| <= (a/(1-a)) * f when
/// a < 1; a >= 1 makes the claim vacuous.
#[derive(Debug, Clone, Copy)]
pub struct CoarseGapReport {
    pub alpha: f64,
    /// a/(1-a); infinity when vacuous.
    pub bound: f64,
    pub worst_ratio: f64,
    pub holds: bool,
    pub vacuous: bool,
}

/// Exhaustively compares f with its box average over every off-diagonal
/// n-subset. A false `holds` with alpha < 1 indicates an implementation bug,
/// not a tolerance issue.
pub fn coarse_gap_check(f: &Weighting, dis: &Dissection) -> Result<CoarseGapReport> {
    let fbar = coarse_average(f, dis)?;
    let alpha =
        dis.box_edge() as f64 * f.lat.dim() as f64 * f.n as f64 * smoothness(f);
    let vacuous = alpha >= 1.0;
    let bound = if vacuous { f64::INFINITY } else { alpha / (1.0 - alpha) };
    let mut worst = 0.0f64;
    for subset in (0..f.lat.n_vertices()).combinations(f.n) {
        let value = math::exp(f.log_value(&subset)?);
        let avg = math::exp(fbar.log_value(&subset)?);
        worst = worst.max(math::abs(value - avg) / value);
    }
    // 1e-12 absorbs float roundoff at exact equality (constant families)
    let holds = vacuous || worst <= bound + 1e-12;
    Ok(CoarseGapReport {
        alpha,
        bound,
        worst_ratio: worst,
        holds,
        vacuous,
    })
}

/// Sum of the activity over all n-subsets of the lattice; equals N/n for any
/// normalized weighting.
pub fn placement_mass<A: Activity>(f: &A) -> Result<f64> {
    let mut sum = LogSum::new();
    for subset in (0..f.lattice().n_vertices()).combinations(f.tile_size()) {
        sum.add_log(f.log_value(&subset)?);
    }
    Ok(math::exp(sum.total_log()))
}

/// Exact-rational placement mass, when the activity carries rational values.
pub fn placement_mass_rational<A: Activity>(f: &A) -> Option<BigRational> {
    let mut sum = BigRational::zero();
    for subset in (0..f.lattice().n_vertices()).combinations(f.tile_size()) {
        sum += f.rational_value(&subset)?;
    }
    Some(sum)
}
