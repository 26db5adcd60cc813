//! Euclidean projection onto the feasible price set.
//!
//! Coordinate `i` may stay at its baseline `p0_i` or move by at least
//! `delta_i`, optionally inside `[l_i, u_i]`. Projecting a query `q` onto the
//! set of vectors with at most `k` changed coordinates decomposes: every
//! coordinate has a 1-D nearest feasible point, and the gain of spending one
//! change slot on `i` is
//!
//! ```text
//! score_i = (p0_i - q_i)^2 - dist_i
//! ```
//!
//! where `dist_i` is the squared 1-D distance. Keeping the `k` largest
//! positive scores and resetting everything else to baseline gives a
//! projection.

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::par;

/// Default absolute tolerance for [`certify_in_h`].
pub const CERTIFY_TOL: f64 = 1e-8;

/// All minimizers of `(p - q)^2` over one coordinate's feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection1d {
    /// Deterministic choice. At a half-threshold tie this is the baseline.
    pub primary: f64,
    /// The other minimizer at a tie.
    pub secondary: Option<f64>,
}

/// Per-coordinate result of the 1-D projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct CoordScore {
    pub proj: f64,
    pub dist_sq: f64,
    pub score: f64,
    /// Changed-side minimizer when `q` sits exactly on a half-threshold.
    pub tie_alt: Option<f64>,
}

/// Closed-form 1-D projection. `lo`/`hi` are infinite in the unbounded case.
#[inline]
pub(crate) fn coord_score(p0: f64, delta: f64, lo: f64, hi: f64, q: f64) -> CoordScore {
    let up_mid = p0 + 0.5 * delta;
    let down_mid = p0 - 0.5 * delta;
    if q >= down_mid && q <= up_mid {
        let d = q - p0;
        let tie_alt = if q == up_mid {
            Some(p0 + delta)
        } else if q == down_mid {
            Some(p0 - delta)
        } else {
            None
        };
        return CoordScore {
            proj: p0,
            dist_sq: d * d,
            score: 0.0,
            tie_alt,
        };
    }
    let proj = if q > up_mid {
        q.clamp(p0 + delta, hi)
    } else {
        q.clamp(lo, p0 - delta)
    };
    let moved = proj - q;
    let stay = q - p0;
    let dist_sq = moved * moved;
    CoordScore {
        proj,
        dist_sq,
        score: (stay * stay - dist_sq).max(0.0),
        tie_alt: None,
    }
}

fn check_1d(p0: f64, delta: f64, bounds: Option<(f64, f64)>, q: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::Contract(format!("delta = {delta} must be positive")));
    }
    if !p0.is_finite() || !q.is_finite() {
        return Err(Error::Contract("baseline and query must be finite".into()));
    }
    match bounds {
        None => Ok((f64::NEG_INFINITY, f64::INFINITY)),
        Some((l, u)) => {
            if l > p0 - delta || u < p0 + delta {
                Err(Error::Contract(format!(
                    "bounds [{l}, {u}] must contain [p0 - delta, p0 + delta] = [{}, {}]",
                    p0 - delta,
                    p0 + delta
                )))
            } else {
                Ok((l, u))
            }
        }
    }
}

/// Projects `q` onto `{p0} ∪ (-inf, p0 - delta] ∪ [p0 + delta, inf)`,
/// intersected with `[l, u]` when bounds are given.
pub fn project_1d(p0: f64, delta: f64, bounds: Option<(f64, f64)>, q: f64) -> Result<Projection1d> {
    let (lo, hi) = check_1d(p0, delta, bounds, q)?;
    let s = coord_score(p0, delta, lo, hi, q);
    Ok(Projection1d {
        primary: s.proj,
        secondary: s.tie_alt,
    })
}

/// Squared distance from `q` to the 1-D feasible set.
pub fn distance_sq_1d(p0: f64, delta: f64, bounds: Option<(f64, f64)>, q: f64) -> Result<f64> {
    let (lo, hi) = check_1d(p0, delta, bounds, q)?;
    Ok(coord_score(p0, delta, lo, hi, q).dist_sq)
}

/// Per-coordinate projection data for one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionScores {
    pub q: Vec<f64>,
    pub proj: Vec<f64>,
    pub dist_sq: Vec<f64>,
    pub delta_score: Vec<f64>,
    /// Coordinates whose 1-D projection has two minimizers.
    pub tie_flags: Vec<bool>,
}

pub(crate) fn score_into(instance: &Instance, q: &[f64], out: &mut [CoordScore]) {
    let p0 = instance.p0();
    let delta = instance.delta();
    par::fill(out, |i| {
        let (lo, hi) = instance.interval(i);
        coord_score(p0[i], delta[i], lo, hi, q[i])
    });
}

fn check_query(instance: &Instance, q: &[f64]) -> Result<()> {
    if q.len() != instance.n() {
        return Err(Error::Structural(format!(
            "query has length {} but n = {}",
            q.len(),
            instance.n()
        )));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("query point is not finite".into()));
    }
    Ok(())
}

pub fn score(instance: &Instance, q: &[f64]) -> Result<ProjectionScores> {
    check_query(instance, q)?;
    let mut raw = vec![CoordScore::default(); q.len()];
    score_into(instance, q, &mut raw);
    Ok(ProjectionScores {
        q: q.to_vec(),
        proj: raw.iter().map(|s| s.proj).collect(),
        dist_sq: raw.iter().map(|s| s.dist_sq).collect(),
        delta_score: raw.iter().map(|s| s.score).collect(),
        tie_flags: raw.iter().map(|s| s.tie_alt.is_some()).collect(),
    })
}

/// Indices of the (at most) `k` largest strictly positive scores. Equal
/// scores go to the lower index. Expected linear time.
pub(crate) fn select_top_k(scores: &[CoordScore], k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].score > 0.0).collect();
    if chosen.len() > k {
        let order = |&i: &usize, &j: &usize| {
            scores[j]
                .score
                .total_cmp(&scores[i].score)
                .then(i.cmp(&j))
        };
        chosen.select_nth_unstable_by(k - 1, order);
        chosen.truncate(k);
    }
    chosen.sort_unstable();
    chosen
}

/// Writes one projection of `q` into `out` given precomputed scores.
pub(crate) fn project_with_scores(instance: &Instance, scores: &[CoordScore], out: &mut [f64]) {
    out.copy_from_slice(instance.p0());
    for i in select_top_k(scores, instance.k()) {
        out[i] = scores[i].proj;
    }
}

/// A member of the projection set of `q`: baseline everywhere except the
/// top-`k` positive scores, which take their 1-D projection.
pub fn project_feasible(instance: &Instance, q: &[f64]) -> Result<Vec<f64>> {
    check_query(instance, q)?;
    let mut raw = vec![CoordScore::default(); q.len()];
    score_into(instance, q, &mut raw);
    let mut out = vec![0.0; q.len()];
    project_with_scores(instance, &raw, &mut out);
    Ok(out)
}

/// `‖p - p0‖_0 <= k`, every coordinate is baseline or at least `delta` away,
/// and bounds hold when present.
pub fn is_feasible(instance: &Instance, p: &[f64]) -> bool {
    if p.len() != instance.n() {
        return false;
    }
    let p0 = instance.p0();
    let delta = instance.delta();
    let mut changed = 0usize;
    for i in 0..p.len() {
        if p[i] == p0[i] {
            continue;
        }
        changed += 1;
        let (lo, hi) = instance.interval(i);
        // thresholds as rounded by the projection itself
        let outside = p[i] >= p0[i] + delta[i] || p[i] <= p0[i] - delta[i];
        if !outside || p[i] < lo || p[i] > hi {
            return false;
        }
    }
    changed <= instance.k()
}

/// Distance from `value` to the nearest 1-D projection of `q_i`, counting
/// both minimizers when `q_i` is within `tol` of a half-threshold.
pub(crate) fn membership_gap(instance: &Instance, i: usize, q_i: f64, value: f64, tol: f64) -> f64 {
    let p0 = instance.p0()[i];
    let delta = instance.delta()[i];
    let (lo, hi) = instance.interval(i);
    let mut best = f64::INFINITY;
    for probe in [q_i, q_i - tol, q_i + tol] {
        let s = coord_score(p0, delta, lo, hi, probe);
        best = best.min((value - s.proj).abs());
        if let Some(alt) = s.tie_alt {
            best = best.min((value - alt).abs());
        }
    }
    // Near a half-threshold both sides are admissible.
    if (q_i - (p0 + 0.5 * delta)).abs() <= tol {
        best = best.min((value - p0).abs()).min((value - (p0 + delta)).abs());
    }
    if (q_i - (p0 - 0.5 * delta)).abs() <= tol {
        best = best.min((value - p0).abs()).min((value - (p0 - delta)).abs());
    }
    best
}

/// Whether the changed set of `p` satisfies the score conditions of a
/// projection of `q`: with a full budget every changed score dominates every
/// unchanged one, with budget to spare every unchanged score is zero.
/// Both comparisons are relaxed by `tol`.
pub(crate) fn support_admissible(instance: &Instance, scores: &[CoordScore], p: &[f64], tol: f64) -> bool {
    let p0 = instance.p0();
    let n = p.len();
    let changed = (0..n).filter(|&i| p[i] != p0[i]).count();
    if changed > instance.k() {
        return false;
    }
    let max_out = par::max_by(n, |i| if p[i] == p0[i] { scores[i].score } else { f64::NEG_INFINITY });
    if changed < instance.k() {
        return max_out <= tol;
    }
    let min_in = (0..n)
        .filter(|&i| p[i] != p0[i])
        .map(|i| scores[i].score)
        .fold(f64::INFINITY, f64::min);
    min_in >= max_out - tol
}

/// Whether `p` is (within `tol`) one of the projections of `q`.
pub fn certify_in_h(instance: &Instance, q: &[f64], p: &[f64], tol: f64) -> bool {
    if check_query(instance, q).is_err() || p.len() != instance.n() {
        return false;
    }
    let mut raw = vec![CoordScore::default(); q.len()];
    score_into(instance, q, &mut raw);
    let p0 = instance.p0();
    let members_ok = (0..p.len())
        .filter(|&i| p[i] != p0[i])
        .all(|i| membership_gap(instance, i, q[i], p[i], tol) <= tol);
    members_ok && support_admissible(instance, &raw, p, tol)
}
