//! Parameter schedules tying the accuracy target to the smoothness target,
//! the box size, and the truncation count, plus the feasibility inequalities
//! that make the lower-bound construction go through and the tail-mass
//! verification for truncated supertype spectra.
//!
//! Every schedule is a power of the working epsilon; the exponents are kept
//! in exact symbolic form (rational part plus an integer multiple of the
//! slack s) so independent re-derivations can be compared field by field.

use alloc::vec::Vec;

use crate::ladder::{enumerate_supertypes, placement_count, MassSpectrum};
use crate::lattice::Norm;
use crate::math;
use crate::weighting::CoarseWeighting;
use crate::{Error, Result};

/// An exponent of the form num/den + s_coeff * s with integer fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentForm {
    pub num: i64,
    pub den: i64,
    pub s_coeff: i64,
}

impl ExponentForm {
    pub fn value(&self, s: f64) -> f64 {
        self.num as f64 / self.den as f64 + self.s_coeff as f64 * s
    }
}

/// The derived targets for one accuracy request. Real-valued targets are
/// always present; integer roundings are omitted above 2^53 where nearest
/// rounding is no longer meaningful in floating point.
#[derive(Debug, Clone)]
pub struct ConditionsParams {
    pub eps: f64,
    /// Working epsilon; equal to eps here, kept separate for reporting.
    pub eps_bar: f64,
    pub s: f64,
    pub d: usize,
    pub n: usize,
    /// Smoothness target exponent: n + 1 + 2/d + (2n+3)s.
    pub sm_exponent: ExponentForm,
    /// Box-size target exponent: -(nd + 2) - 2(n+1)ds.
    pub n_bar_exponent: ExponentForm,
    /// Truncation-count target exponent: -nd - 2nds.
    pub m_bar_exponent: ExponentForm,
    /// eps_bar^sm_exponent; doubles as the delta of the accuracy statement.
    pub sm_target: f64,
    pub n_bar_real: f64,
    /// Nearest d-th power, when representable.
    pub n_bar: Option<u64>,
    /// Edge whose d-th power is n_bar.
    pub ell_bar: Option<u64>,
    pub m_bar_real: f64,
    /// Nearest integer, when representable.
    pub m_bar: Option<u64>,
    /// Coarse-gap coefficient d n eps_bar^(1+s).
    pub alpha: f64,
    /// Free localization constant (> 1) of the accuracy statement; recorded
    /// for report context, not used by the inequalities.
    pub c1: f64,
}

const ROUNDABLE: f64 = 9_007_199_254_740_992.0; // 2^53

fn nearest_dth_power(x: f64, d: usize) -> Option<(u64, u64)> {
    if !(x.is_finite() && x < ROUNDABLE) {
        return None;
    }
    let edge = math::powf(x.max(1.0), 1.0 / d as f64);
    let lo = (math::floor(edge) as u64).max(1);
    let mut best: Option<(u64, u64, f64)> = None;
    for ell in [lo, lo + 1] {
        let power = (ell as u128).pow(d as u32);
        if power > ROUNDABLE as u128 {
            continue;
        }
        let gap = math::abs(power as f64 - x);
        if best.is_none_or(|(_, _, g)| gap < g) {
            best = Some((ell, power as u64, gap));
        }
    }
    best.map(|(ell, power, _)| (ell, power))
}

/// Derives the targets for accuracy eps and slack s in dimension d with
/// tile size n. The working epsilon is eps itself.
pub fn conditions_params(eps: f64, s: f64, d: usize, n: usize) -> Result<ConditionsParams> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::domain("s must be positive"));
    }
    if d == 0 || n == 0 {
        return Err(Error::domain("dimension and tile size must be positive"));
    }
    let (di, ni) = (d as i64, n as i64);
    let sm_exponent = ExponentForm {
        num: di * (ni + 1) + 2,
        den: di,
        s_coeff: 2 * ni + 3,
    };
    let n_bar_exponent = ExponentForm {
        num: -(ni * di + 2),
        den: 1,
        s_coeff: -2 * (ni + 1) * di,
    };
    let m_bar_exponent = ExponentForm {
        num: -ni * di,
        den: 1,
        s_coeff: -2 * ni * di,
    };
    let ln_eps = math::ln(eps);
    let sm_target = math::exp(sm_exponent.value(s) * ln_eps);
    let n_bar_real = math::exp(n_bar_exponent.value(s) * ln_eps);
    let m_bar_real = math::exp(m_bar_exponent.value(s) * ln_eps);
    let rounded = nearest_dth_power(n_bar_real, d);
    let m_bar = if m_bar_real.is_finite() && m_bar_real < ROUNDABLE {
        Some(math::round(m_bar_real).max(1.0) as u64)
    } else {
        None
    };
    let alpha = d as f64 * n as f64 * math::exp((1.0 + s) * ln_eps);
    Ok(ConditionsParams {
        eps,
        eps_bar: eps,
        s,
        d,
        n,
        sm_exponent,
        n_bar_exponent,
        m_bar_exponent,
        sm_target,
        n_bar_real,
        n_bar: rounded.map(|(_, p)| p),
        ell_bar: rounded.map(|(e, _)| e),
        m_bar_real,
        m_bar,
        alpha,
        c1: 2.0,
    })
}

/// One feasibility inequality: holds iff the log-space margin is positive.
#[derive(Debug, Clone, Copy)]
pub struct InequalityCheck {
    pub label: &'static str,
    /// Log-space slack; the inequality holds iff this is nonnegative.
    pub margin: f64,
    pub holds: bool,
}

fn check(label: &'static str, margin: f64) -> InequalityCheck {
    InequalityCheck {
        label,
        margin,
        holds: margin >= 0.0,
    }
}

fn evaluate_checks(p: &ConditionsParams) -> Vec<InequalityCheck> {
    let ln_eps = math::ln(p.eps_bar);
    let (s, d, n) = (p.s, p.d as f64, p.n as f64);
    // logs of the targets: rounded integers when available, pure powers
    // otherwise (the two agree to rounding error wherever both exist)
    let ln_n_bar = match p.n_bar {
        Some(v) => math::ln(v as f64),
        None => p.n_bar_exponent.value(s) * ln_eps,
    };
    let ln_m_bar = match p.m_bar {
        Some(v) => math::ln(v as f64),
        None => p.m_bar_exponent.value(s) * ln_eps,
    };

    let mut checks = Vec::with_capacity(5);

    // box size beats the slot demand: n_bar > 200 m_bar n / eps^2
    checks.push(check(
        "slot-capacity",
        ln_n_bar - (math::ln(200.0 * n) + ln_m_bar - 2.0 * ln_eps),
    ));

    // Stirling error budget: ln sqrt(2 pi n_bar) + 1/12 <= n_bar eps/(10 m_bar)
    let lhs = 0.5 * math::ln(2.0 * core::f64::consts::PI) + 0.5 * ln_n_bar + 1.0 / 12.0;
    let ln_rhs = ln_n_bar + ln_eps - math::ln(10.0) - ln_m_bar;
    checks.push(check("stirling-budget", ln_rhs - math::ln(lhs.max(f64::MIN_POSITIVE))));

    // the same budget with the targets substituted as pure powers
    let lhs_sub = 0.5 * math::ln(2.0 * core::f64::consts::PI)
        + 0.5 * p.n_bar_exponent.value(s) * ln_eps
        + 1.0 / 12.0;
    let ln_rhs_sub = (p.n_bar_exponent.value(s) + 1.0 - p.m_bar_exponent.value(s)) * ln_eps
        - math::ln(10.0);
    checks.push(check(
        "stirling-budget-substituted",
        ln_rhs_sub - math::ln(lhs_sub.max(f64::MIN_POSITIVE)),
    ));

    // reduced slot-capacity: eps^(-2sd) > 200 n
    checks.push(check(
        "slot-capacity-reduced",
        -2.0 * s * d * ln_eps - math::ln(200.0 * n),
    ));

    // coarse-gap coefficient stays small: alpha/(1-alpha) <= eps
    let alpha = d * n * math::exp((1.0 + s) * ln_eps);
    let margin = if alpha < 1.0 {
        ln_eps - (math::ln(alpha) - math::ln_1p(-alpha))
    } else {
        f64::NEG_INFINITY
    };
    checks.push(check("gap-coefficient", margin));

    checks
}

/// The feasibility report: per-inequality margins at the working epsilon and
/// the epsilon threshold below which every inequality passes.
#[derive(Debug, Clone)]
pub struct ConditionsReport {
    pub checks: Vec<InequalityCheck>,
    pub all_hold: bool,
    /// Largest working epsilon (to bisection precision) at which all five
    /// inequalities pass; 0 if none exists above the probe floor.
    pub threshold: f64,
}

fn all_pass(eps_bar: f64, s: f64, d: usize, n: usize) -> bool {
    conditions_params(eps_bar, s, d, n)
        .map(|p| evaluate_checks(&p).iter().all(|c| c.holds))
        .unwrap_or(false)
}

/// Evaluates the five inequalities at the params' working epsilon and
/// bisects (in log eps) for the all-pass threshold of the same (s, d, n).
pub fn verify_conditions(p: &ConditionsParams) -> ConditionsReport {
    let checks = evaluate_checks(p);
    let all_hold = checks.iter().all(|c| c.holds);

    let mut lo = math::ln(1e-300);
    let mut hi = math::ln(0.99);
    let threshold = if all_pass(math::exp(hi), p.s, p.d, p.n) {
        math::exp(hi)
    } else if !all_pass(math::exp(lo), p.s, p.d, p.n) {
        0.0
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if all_pass(math::exp(mid), p.s, p.d, p.n) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        math::exp(lo)
    };
    ConditionsReport {
        checks,
        all_hold,
        threshold,
    }
}

/// Tail accounting for a truncated spectrum: the mass held by the retained
/// prefixes, the deficit left outside the enumeration cutoff, and an
/// exponential-envelope bound on that deficit from the decay radius of the
/// underlying weighting.
#[derive(Debug, Clone)]
pub struct TailMassReport {
    /// Mass of the first m_bar entries.
    pub kept_mass: f64,
    /// Mass of the kept prefix (after the per-entry floor).
    pub retained_mass: f64,
    /// Mass of everything enumerated.
    pub enumerated_mass: f64,
    /// 1 - enumerated_mass: the mass beyond the cutoff.
    pub deficit: f64,
    /// Envelope bound on the deficit: sum over excluded supertypes of
    /// placement count times exp(-min distance / decay_radius).
    pub envelope: f64,
    /// Shortest prefix holding more than 1 - eps/20.
    pub minimal_m_bar: usize,
    pub holds_m_bar: bool,
    pub holds_retained: bool,
    pub deficit_within_envelope: bool,
}

/// Checks the truncation quality of a spectrum against the decay radius of
/// the fine weighting it was averaged from.
pub fn tail_mass_check(
    fbar: &CoarseWeighting,
    spectrum: &MassSpectrum,
    eps: f64,
    decay_radius: f64,
) -> Result<TailMassReport> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    let dis = fbar.dissection();
    let kept_mass = spectrum.mass_through(spectrum.m_bar);
    let retained_mass = spectrum.mass_through(spectrum.kept);
    let enumerated_mass = spectrum.total_mass();
    let deficit = 1.0 - enumerated_mass;

    let mut envelope = 0.0;
    for t in enumerate_supertypes(dis, fbar.tile_size(), f64::INFINITY) {
        if t.radius(dis) <= spectrum.cutoff + crate::ladder::CUTOFF_TOL {
            continue;
        }
        let spread = t
            .rest_boxes(dis)
            .iter()
            .map(|&b| dis.box_min_distance(0, b, Norm::Euclidean))
            .fold(0.0, f64::max);
        envelope += placement_count(dis, &t) as f64 * math::exp(-spread / decay_radius);
    }

    let mut cumulative = 0.0;
    let mut minimal_m_bar = spectrum.entries.len();
    for (i, (_, mass)) in spectrum.entries.iter().enumerate() {
        cumulative += mass;
        if cumulative > 1.0 - eps / 20.0 {
            minimal_m_bar = i + 1;
            break;
        }
    }

    Ok(TailMassReport {
        kept_mass,
        retained_mass,
        enumerated_mass,
        deficit,
        envelope,
        minimal_m_bar,
        holds_m_bar: kept_mass > 1.0 - eps / 20.0,
        holds_retained: retained_mass > 1.0 - eps / 10.0,
        deficit_within_envelope: deficit <= envelope + 1e-9,
    })
}
