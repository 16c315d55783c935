//! Exact rational arithmetic for the exponent calculus: critical exponents,
//! Strichartz admissibility, Besov/Lebesgue embedding predicates and the
//! theorem-applicability verdicts.
//!
//! Everything in this module is exact. The applicability table contains
//! borderline equalities (for instance `2k/(k-2*gamma) = 2p` exactly at
//! `p = p_c`) that floating point would misclassify, so all exponents are
//! `Ratio<i64>` values and every comparison is an exact rational comparison.

pub mod table;

use num_rational::Ratio;
use num_traits::Zero;
use std::fmt;

use crate::error::{KgError, Result};

/// Exact rational exponent, always stored in lowest terms with a positive
/// denominator (guaranteed by `num_rational::Ratio`).
pub type Rat = Ratio<i64>;

/// Shorthand for `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(n, d)
}

/// Shorthand for an integer rational.
pub fn rint(n: i64) -> Rat {
    Ratio::from_integer(n)
}

/// A rational extended with `+infinity`, used for the time exponent `q`
/// and for the upper embedding exponent `r*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtRat {
    Finite(Rat),
    Inf,
}

impl ExtRat {
    pub fn finite(self) -> Option<Rat> {
        match self {
            ExtRat::Finite(x) => Some(x),
            ExtRat::Inf => None,
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, ExtRat::Inf)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        Some(match (self, other) {
            (ExtRat::Inf, ExtRat::Inf) => Equal,
            (ExtRat::Inf, ExtRat::Finite(_)) => Greater,
            (ExtRat::Finite(_), ExtRat::Inf) => Less,
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
        })
    }
}

impl From<Rat> for ExtRat {
    fn from(x: Rat) -> Self {
        ExtRat::Finite(x)
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(x) => write!(f, "{x}"),
            ExtRat::Inf => write!(f, "inf"),
        }
    }
}

/// The three critical exponents of the product-space problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriticalExponents {
    /// `p0 = max(2, 1 + 4/d)`: lower threshold, above the L2-critical
    /// exponent on the Euclidean factor.
    pub p0: Rat,
    /// `pc = 1 + 4/(d+k-2)`: the H1-critical exponent for the whole
    /// dimension `d+k`.
    pub pc: Rat,
    /// `p_sob = (d+2)/(d+k-2)`: threshold between the Sobolev-embedding
    /// and Morrey routes on the compact factor.
    pub p_sob: Rat,
}

/// Computes `p0`, `pc`, `p_sob` exactly. Rejects `d+k <= 2` where `pc`
/// is undefined.
pub fn critical_exponents(d: u32, k: u32) -> Result<CriticalExponents> {
    if d < 1 || k < 1 {
        return Err(KgError::Exponent(format!("d, k must be >= 1 (got d={d}, k={k})")));
    }
    if d + k <= 2 {
        return Err(KgError::Exponent(format!(
            "pc undefined for d+k = {} <= 2",
            d + k
        )));
    }
    let d_i = d as i64;
    let dk2 = (d + k - 2) as i64;
    let p0 = std::cmp::max(rint(2), rint(1) + rat(4, d_i));
    let pc = rint(1) + rat(4, dk2);
    let p_sob = rat(d_i + 2, dk2);
    Ok(CriticalExponents { p0, pc, p_sob })
}

/// Upper bound on `p` in the supercritical theorem for `3 <= d <= 5`:
/// `(d^2 + 2d - 4) / (d^2 - 2d)`.
pub fn supercritical_cap(d: u32) -> Result<Rat> {
    if !(3..=5).contains(&d) {
        return Err(KgError::Exponent(format!(
            "supercritical cap defined for 3 <= d <= 5 (got d={d})"
        )));
    }
    let d = d as i64;
    Ok(rat(d * d + 2 * d - 4, d * d - 2 * d))
}

/// Result of checking a `(q, r)` pair against the admissibility definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admissibility {
    /// The scaling identity `2/q = d(1/2 - 1/r)` holds exactly.
    pub identity: bool,
    /// `r` lies in `[2, 2d/(d-2)]` (`r <= inf` if d=1, `r < inf` if d=2).
    pub in_range: bool,
    /// The pair is the endpoint `q = 2`, `r = 2d/(d-2)`.
    pub endpoint: bool,
    /// Overall verdict; the endpoint is only admitted for `d >= 4`.
    pub admissible: bool,
}

fn two_over(q: ExtRat) -> Option<Rat> {
    match q {
        ExtRat::Inf => Some(rint(0)),
        ExtRat::Finite(q) => {
            if q.is_zero() {
                None
            } else {
                Some(rint(2) / q)
            }
        }
    }
}

fn range_max_r(d: u32) -> ExtRat {
    match d {
        1 | 2 => ExtRat::Inf,
        _ => ExtRat::Finite(rat(2 * d as i64, d as i64 - 2)),
    }
}

fn r_in_range(d: u32, r: ExtRat) -> bool {
    if ExtRat::Finite(rint(2)) > r {
        return false;
    }
    match (d, r) {
        (1, _) => true,
        (2, ExtRat::Inf) => false, // r < inf required when d = 2
        (2, ExtRat::Finite(_)) => true,
        (_, ExtRat::Inf) => false,
        (_, ExtRat::Finite(r)) => r <= rat(2 * d as i64, d as i64 - 2),
    }
}

/// Solves the admissibility identity `2/q = d(1/2 - 1/r)` for `r`,
/// without enforcing range or endpoint restrictions.
///
/// `q = inf` forces `r = 2`; `dq = 4` gives `r = inf`.
pub fn solve_admissible_r(d: u32, q: ExtRat) -> Result<ExtRat> {
    let d_i = d as i64;
    let two_q = two_over(q).ok_or_else(|| KgError::Exponent("q must be positive".into()))?;
    // 1/r = 1/2 - (2/q)/d
    let inv_r = rat(1, 2) - two_q / rint(d_i);
    if inv_r.is_zero() {
        Ok(ExtRat::Inf)
    } else if inv_r < rint(0) {
        Err(KgError::Exponent(format!(
            "no positive r solves 2/q = {d}(1/2 - 1/r) for q = {q}"
        )))
    } else {
        Ok(ExtRat::Finite(inv_r.recip()))
    }
}

/// The unique admissible `r` for a given `(d, q)`, enforcing the range
/// restriction and the endpoint policy (`q = 2` admitted only for `d >= 4`,
/// where it is flagged as the endpoint pair).
pub fn admissible_r(d: u32, q: ExtRat) -> Result<(ExtRat, bool)> {
    if d < 1 {
        return Err(KgError::Exponent("d must be >= 1".into()));
    }
    if let ExtRat::Finite(qf) = q {
        if qf < rint(2) {
            return Err(KgError::Exponent(format!("q = {qf} < 2 is not admissible")));
        }
        if qf == rint(2) && d <= 3 {
            return Err(KgError::Exponent(format!(
                "endpoint q = 2 (r = 2d/(d-2)) excluded for d = {d} <= 3"
            )));
        }
    }
    let r = solve_admissible_r(d, q)?;
    if !r_in_range(d, r) {
        return Err(KgError::Exponent(format!(
            "r = {r} outside the admissible range for d = {d}"
        )));
    }
    let endpoint = q == ExtRat::Finite(rint(2));
    Ok((r, endpoint))
}

/// Checks whether `(q, r)` is an admissible pair for dimension `d`.
pub fn is_admissible(d: u32, q: ExtRat, r: ExtRat) -> Admissibility {
    let identity = match solve_admissible_r(d, q) {
        Ok(solved) => solved == r,
        Err(_) => false,
    };
    let in_range = r_in_range(d, r);
    let endpoint = q == ExtRat::Finite(rint(2)) && r == range_max_r(d);
    let admissible = identity && in_range && (!endpoint || d >= 4);
    Admissibility {
        identity,
        in_range,
        endpoint,
        admissible,
    }
}

/// The Besov regularity exponent attached to an admissible pair:
/// `s = 1 - (1/2)(d/2 + 1)(1 - 2/r)`.
pub fn strichartz_s(d: u32, r: ExtRat) -> Result<Rat> {
    let one_minus_2r = match r {
        ExtRat::Inf => rint(1),
        ExtRat::Finite(r) => {
            if r < rint(2) {
                return Err(KgError::Exponent(format!("r = {r} < 2")));
            }
            rint(1) - rint(2) / r
        }
    };
    let half_weight = rat(1, 2) * (rat(d as i64, 2) + rint(1));
    Ok(rint(1) - half_weight * one_minus_2r)
}

/// The full exponent bundle for the choice `q = p`, `rho = 2p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentProfile {
    pub d: u32,
    pub k: u32,
    pub p: Rat,
    /// Time exponent; `q = p` throughout.
    pub q: Rat,
    /// Spatial pair exponent `r = 2dp/(dp - 4)`.
    pub r: Rat,
    /// Besov regularity `s = (dp - d - 2)/(dp)`.
    pub s: Rat,
    /// Derivative weight in the compact directions,
    /// `gamma = (d + 2 + 2p - dp)/(2p)`.
    pub gamma: Rat,
    /// Target Lebesgue exponent `rho = 2p`.
    pub rho: Rat,
    /// Upper embedding exponent `r* = dr/(d - sr)`, `inf` when `d <= sr`.
    pub r_star: ExtRat,
}

/// Builds the profile `q = p`, `r(p)`, `s(p)`, `gamma(p)`, `rho = 2p`,
/// `r*`. Requires `dp > 4` so that `r(p)` is positive and finite.
pub fn derived_profile(d: u32, k: u32, p: Rat) -> Result<ExponentProfile> {
    if d < 1 || k < 1 {
        return Err(KgError::Exponent("d, k must be >= 1".into()));
    }
    let d_r = rint(d as i64);
    let dp = d_r * p;
    if dp <= rint(4) {
        return Err(KgError::Exponent(format!(
            "dp = {dp} <= 4: r(p) undefined or negative"
        )));
    }
    let r = rint(2) * dp / (dp - rint(4));
    let s = (dp - d_r - rint(2)) / dp;
    let gamma = (d_r + rint(2) + rint(2) * p - dp) / (rint(2) * p);
    let rho = rint(2) * p;
    let sr = s * r;
    let r_star = if d_r <= sr {
        ExtRat::Inf
    } else {
        ExtRat::Finite(d_r * r / (d_r - sr))
    };
    Ok(ExponentProfile {
        d,
        k,
        p,
        q: p,
        r,
        s,
        gamma,
        rho,
        r_star,
    })
}

/// Besov-into-Lebesgue embedding on the Euclidean factor:
/// `B^s_{r,2} c L^rho` iff `2 <= r <= rho <= r*` with `r* = dr/(d - sr)`
/// (`r* = inf` when `d <= sr`). Requires `s > 0`.
pub fn embedding_euclidean(d: u32, s: Rat, r: Rat, rho: Rat) -> Result<bool> {
    if s <= rint(0) {
        return Err(KgError::Exponent(format!("embedding requires s > 0 (got s = {s})")));
    }
    if r < rint(2) {
        return Ok(false);
    }
    let d_r = rint(d as i64);
    let sr = s * r;
    let r_star = if d_r <= sr {
        ExtRat::Inf
    } else {
        ExtRat::Finite(d_r * r / (d_r - sr))
    };
    Ok(r <= rho && ExtRat::Finite(rho) <= r_star)
}

/// How the Lebesgue control in the compact directions is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// `H^gamma(M^k) c L^{2p}` by the Sobolev embedding
    /// (`k >= 2*gamma` and `2k/(k-2*gamma) >= 2p`).
    SobolevEmbedding,
    /// `H^gamma(M^k) c L^inf` by Morrey (`k < 2*gamma`), then `L^{2p}`
    /// via the finite volume of `M^k`.
    MorreyFiniteVolume,
    NotApplicable,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Route::SobolevEmbedding => write!(f, "sobolev"),
            Route::MorreyFiniteVolume => write!(f, "morrey"),
            Route::NotApplicable => write!(f, "none"),
        }
    }
}

/// A named condition that can fail in an applicability verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    KAtMost2,
    TotalDimAtLeast3,
    TotalDimAtMost6,
    PAtLeastP0,
    PAtMostPc,
    KAtLeast2WhenD1,
    DAtMost5,
    PAtMostSupercriticalCap,
    GammaAboveHalfK,
    SobolevLebesgueBound,
    MorreyThreshold,
    FiniteVolume,
    ProfileUndefined,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Condition::KAtMost2 => "k <= 2",
            Condition::TotalDimAtLeast3 => "d+k >= 3",
            Condition::TotalDimAtMost6 => "d+k <= 6",
            Condition::PAtLeastP0 => "p >= p0",
            Condition::PAtMostPc => "p <= pc",
            Condition::KAtLeast2WhenD1 => "k >= 2 when d = 1",
            Condition::DAtMost5 => "d <= 5",
            Condition::PAtMostSupercriticalCap => "p <= (d^2+2d-4)/(d^2-2d)",
            Condition::GammaAboveHalfK => "gamma > k/2",
            Condition::SobolevLebesgueBound => "2k/(k-2*gamma) >= 2p",
            Condition::MorreyThreshold => "k < 2*gamma",
            Condition::FiniteVolume => "Vol(M^k) finite",
            Condition::ProfileUndefined => "dp > 4",
        };
        write!(f, "{name}")
    }
}

/// Applicability verdict: `applicable` iff `failed_conditions` is empty,
/// and `route == NotApplicable` iff not applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub applicable: bool,
    pub route: Route,
    pub failed_conditions: Vec<Condition>,
}

impl Verdict {
    fn pass(route: Route) -> Self {
        Verdict {
            applicable: true,
            route,
            failed_conditions: Vec::new(),
        }
    }

    fn fail(failed: Vec<Condition>) -> Self {
        debug_assert!(!failed.is_empty());
        Verdict {
            applicable: false,
            route: Route::NotApplicable,
            failed_conditions: failed,
        }
    }
}

/// Embedding `H^gamma(M^k) c L^{2p}(M^k)`: Sobolev route when
/// `k >= 2*gamma` and `2k/(k-2*gamma) >= 2p` (the bound is `+inf` at
/// `k = 2*gamma`), Morrey route when `k < 2*gamma` and the volume is
/// finite.
pub fn embedding_compact(k: u32, gamma: Rat, p: Rat, finite_volume: bool) -> Result<Verdict> {
    if gamma < rint(0) {
        return Err(KgError::Exponent(format!("gamma = {gamma} < 0")));
    }
    if p < rint(1) {
        return Err(KgError::Exponent(format!("p = {p} < 1")));
    }
    let k_r = rint(k as i64);
    let two_gamma = rint(2) * gamma;
    if k_r >= two_gamma {
        let bound = if k_r == two_gamma {
            ExtRat::Inf
        } else {
            ExtRat::Finite(rint(2) * k_r / (k_r - two_gamma))
        };
        if bound >= ExtRat::Finite(rint(2) * p) {
            Ok(Verdict::pass(Route::SobolevEmbedding))
        } else {
            Ok(Verdict::fail(vec![
                Condition::SobolevLebesgueBound,
                Condition::MorreyThreshold,
            ]))
        }
    } else if finite_volume {
        Ok(Verdict::pass(Route::MorreyFiniteVolume))
    } else {
        Ok(Verdict::fail(vec![Condition::FiniteVolume]))
    }
}

/// Verdicts for the two main theorems at a given `(d, k, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremVerdicts {
    /// Energy-space scattering: `k <= 2`, `3 <= d+k <= 6`, `p0 <= p <= pc`.
    pub thm1: Verdict,
    /// Anisotropic scattering with extra `y`-regularity `gamma > k/2`:
    /// `p0 <= p`, no upper bound for `d <= 2`, `p <= (d^2+2d-4)/(d^2-2d)`
    /// for `3 <= d <= 5`, and `k >= 2` when `d = 1`.
    pub thm2: Verdict,
}

/// Evaluates both theorem verdicts. `gamma_extra`, when supplied, is the
/// user-chosen extra regularity for the anisotropic theorem and must
/// exceed `k/2`; when absent the theorem's "for all gamma > k/2"
/// quantifier leaves that condition unchecked.
///
/// The p-range for the anisotropic theorem is stated twice in slightly
/// different forms (the proposition-level bound `p >= p0` and the
/// theorem-level bound `p < inf` for `d <= 2`); for `d = 2` these agree
/// since `p0 = 3`, and both are enforced through the `p >= p0` condition.
pub fn theorem_applicability(
    d: u32,
    k: u32,
    p: Rat,
    gamma_extra: Option<Rat>,
) -> Result<TheoremVerdicts> {
    if d < 1 || k < 1 {
        return Err(KgError::Exponent("d, k must be >= 1".into()));
    }

    // Theorem 1: energy-space scattering.
    let mut failed1 = Vec::new();
    if k > 2 {
        failed1.push(Condition::KAtMost2);
    }
    if d + k < 3 {
        failed1.push(Condition::TotalDimAtLeast3);
    }
    if d + k > 6 {
        failed1.push(Condition::TotalDimAtMost6);
    }
    if d + k >= 3 {
        let crit = critical_exponents(d, k)?;
        if p < crit.p0 {
            failed1.push(Condition::PAtLeastP0);
        }
        if p > crit.pc {
            failed1.push(Condition::PAtMostPc);
        }
    }
    let thm1 = if failed1.is_empty() {
        // In range, dp > 4 always holds, so the compact embedding route
        // (Sobolev at p >= p_sob, Morrey below) is well-defined.
        let profile = derived_profile(d, k, p)?;
        let emb = embedding_compact(k, profile.gamma, p, true)?;
        debug_assert!(emb.applicable);
        Verdict::pass(emb.route)
    } else {
        Verdict::fail(failed1)
    };

    // Theorem 2: anisotropic scattering.
    let mut failed2 = Vec::new();
    let p0 = std::cmp::max(rint(2), rint(1) + rat(4, d as i64));
    if p < p0 {
        failed2.push(Condition::PAtLeastP0);
    }
    if d == 1 && k < 2 {
        failed2.push(Condition::KAtLeast2WhenD1);
    }
    if d >= 3 {
        if d > 5 {
            failed2.push(Condition::DAtMost5);
        } else if p > supercritical_cap(d)? {
            failed2.push(Condition::PAtMostSupercriticalCap);
        }
    }
    if let Some(g) = gamma_extra {
        if g <= rat(k as i64, 2) {
            failed2.push(Condition::GammaAboveHalfK);
        }
    }
    let thm2 = if failed2.is_empty() {
        // gamma > k/2 gives Morrey control H^gamma(M^k) c L^inf, and the
        // finite volume closes the L^{2p} estimate in y.
        Verdict::pass(Route::MorreyFiniteVolume)
    } else {
        Verdict::fail(failed2)
    };

    Ok(TheoremVerdicts { thm1, thm2 })
}

/// Embedding route for the compact factor at the derived `gamma(p)`,
/// `NotApplicable` when the profile itself is undefined (`dp <= 4`) or
/// the derived weight is negative (`rho = 2p` outside `[r, r*]`).
pub fn embedding_route(d: u32, k: u32, p: Rat) -> Result<Route> {
    match derived_profile(d, k, p) {
        Ok(profile) if profile.gamma >= rint(0) => {
            Ok(embedding_compact(k, profile.gamma, p, true)?.route)
        }
        _ => Ok(Route::NotApplicable),
    }
}
