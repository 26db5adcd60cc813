//! Gradient projection for the constrained pricing problem.
//!
//! Each iteration projects a gradient step onto the feasible set:
//! `p <- H(p - grad Q(p) / L)` with `L` above the largest eigenvalue of `S`.
//! The objective never increases, and once consecutive iterates are closer
//! than `delta_min / sqrt(2)` the partition of coordinates into
//! held / raised / lowered can no longer change. From there the iteration is
//! plain projected gradient on a convex box-constrained QP, which
//! [`refine_on_partition`] solves directly to a tight tolerance.

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::model::{self, Instance, SpectralMode};
use crate::par;
use crate::projection::{self, CoordScore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Spectral(SpectralMode),
    /// Caller-supplied `L`; must exceed the largest eigenvalue of `S`.
    Fixed(f64),
}

/// Threshold on the per-iteration decrease `Q(p_t) - Q(p_{t+1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// `eps = factor * max(1, |Q(p_1)|)`
    Relative(f64),
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub step: StepRule,
    pub stop: StopRule,
    pub max_iters: usize,
    pub refine: bool,
    /// Consecutive small, partition-preserving steps before refining.
    pub stab_window: usize,
    pub long_step_factor: f64,
    pub seed: u64,
    /// Number of multi-start runs, at most 5.
    pub starts: usize,
    pub parallel_starts: bool,
    /// Tolerance on the fixed-point residual for the stationarity verdict.
    pub cert_tol: f64,
    /// Projected-gradient tolerance inside the refinement.
    pub refine_tol: f64,
    /// Estimate the smallest eigenvalue and attach suboptimality bounds.
    pub bounds_report: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            step: StepRule::Spectral(SpectralMode::Gershgorin),
            stop: StopRule::Relative(1e-9),
            max_iters: 50_000,
            refine: true,
            stab_window: 5,
            long_step_factor: 10.0,
            seed: 0,
            starts: 5,
            parallel_starts: false,
            cert_tol: 1e-7,
            refine_tol: 1e-9,
            bounds_report: false,
        }
    }
}

impl SolverParams {
    pub fn check(&self) -> Result<()> {
        let eps = match self.stop {
            StopRule::Relative(e) | StopRule::Absolute(e) => e,
        };
        if !(eps > 0.0) {
            return Err(Error::Contract(format!("eps = {eps} must be positive")));
        }
        if !(self.long_step_factor > 1.0) {
            return Err(Error::Contract(format!(
                "long_step_factor = {} must exceed 1",
                self.long_step_factor
            )));
        }
        if self.max_iters == 0 || self.stab_window == 0 {
            return Err(Error::Contract("max_iters and stab_window must be positive".into()));
        }
        if !(1..=5).contains(&self.starts) {
            return Err(Error::Contract(format!("starts = {} must lie in 1..=5", self.starts)));
        }
        if let StepRule::Fixed(l) = self.step {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Contract(format!("fixed L = {l} must be positive")));
            }
        }
        Ok(())
    }

    pub fn step_constant(&self, instance: &Instance) -> f64 {
        match self.step {
            StepRule::Fixed(l) => l,
            StepRule::Spectral(mode) => model::step_constant(instance, mode).0,
        }
    }
}

/// Which way a coordinate sits relative to its baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Held,
    Raised,
    Lowered,
}

#[inline]
pub fn side_of(p0: f64, x: f64) -> Side {
    if x == p0 {
        Side::Held
    } else if x > p0 {
        Side::Raised
    } else {
        Side::Lowered
    }
}

/// Index triple (held, raised, lowered) naming one convex piece of the
/// feasible set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
}

impl Partition {
    pub fn of(instance: &Instance, p: &[f64]) -> Partition {
        Partition::from_sides(&sides(instance, p))
    }

    pub fn from_sides(sides: &[Side]) -> Partition {
        let mut part = Partition {
            alpha: Vec::new(),
            beta: Vec::new(),
            gamma: Vec::new(),
        };
        for (i, s) in sides.iter().enumerate() {
            match s {
                Side::Held => part.alpha.push(i),
                Side::Raised => part.beta.push(i),
                Side::Lowered => part.gamma.push(i),
            }
        }
        part
    }

    pub fn sides(&self, n: usize) -> Result<Vec<Side>> {
        let mut out = vec![None; n];
        for (set, side) in [(&self.alpha, Side::Held), (&self.beta, Side::Raised), (&self.gamma, Side::Lowered)] {
            for &i in set {
                if i >= n || out[i].is_some() {
                    return Err(Error::Contract(format!("partition index {i} is out of range or repeated")));
                }
                out[i] = Some(side);
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::Contract(format!("partition misses index {i}"))))
            .collect()
    }

    pub fn changes(&self) -> usize {
        self.beta.len() + self.gamma.len()
    }
}

pub(crate) fn sides(instance: &Instance, p: &[f64]) -> Vec<Side> {
    let p0 = instance.p0();
    let mut out = vec![Side::Held; p.len()];
    par::fill(&mut out, |i| side_of(p0[i], p[i]));
    out
}

/// What an observer sees after every iteration.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub t: usize,
    pub prev: &'a [f64],
    pub next: &'a [f64],
    pub q_prev: f64,
    pub q_next: f64,
    pub step_sq: f64,
    pub partition_changed: bool,
    /// The step was the refinement solve rather than a projection step.
    pub refinement: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub start_id: usize,
    pub final_p: Vec<f64>,
    pub final_q_obj: f64,
    pub final_profit: f64,
    pub iterations: usize,
    /// `Q` at the start and after every step.
    pub objective_trace: Vec<f64>,
    /// `‖p_{t+1} - p_t‖^2` for every step.
    pub step_sq_trace: Vec<f64>,
    /// Steps (1-based) after which the partition differed from before.
    pub partition_changes: Vec<usize>,
    pub stationarity_residual: f64,
    pub stationary: bool,
    pub partition: Partition,
    pub kappa: usize,
    pub bound_i: Option<f64>,
    pub bound_ii: Option<f64>,
    pub refined: bool,
    /// Stopped by the decrease test rather than the iteration cap.
    pub converged: bool,
    pub step_constant: f64,
    pub wall_time: Duration,
}

/// Runs the gradient projection iteration from `start`.
pub fn gpa_solve(instance: &Instance, start: &[f64], params: &SolverParams) -> Result<SolveReport> {
    gpa_solve_observed(instance, start, params, &mut |_| {})
}

pub fn gpa_solve_observed(
    instance: &Instance,
    start: &[f64],
    params: &SolverParams,
    observer: &mut dyn FnMut(&IterationView<'_>),
) -> Result<SolveReport> {
    params.check()?;
    instance.check_solvable()?;
    let l = params.step_constant(instance);
    solve_with_l(instance, start, params, l, observer)
}

fn solve_with_l(
    instance: &Instance,
    start: &[f64],
    params: &SolverParams,
    l: f64,
    observer: &mut dyn FnMut(&IterationView<'_>),
) -> Result<SolveReport> {
    let clock = Instant::now();
    let n = instance.n();
    if start.len() != n {
        return Err(Error::Structural(format!("start has length {} but n = {n}", start.len())));
    }
    let mut p = if projection::is_feasible(instance, start) {
        start.to_vec()
    } else {
        projection::project_feasible(instance, start)?
    };
    let mut q_obj = model::objective_q(instance, &p)?;
    let eps = match params.stop {
        StopRule::Relative(r) => r * q_obj.abs().max(1.0),
        StopRule::Absolute(e) => e,
    };
    let stab_threshold = 0.5 * instance.delta_min().powi(2);

    let mut trace = vec![q_obj];
    let mut step_trace = Vec::new();
    let mut partition_changes = Vec::new();
    let mut grad = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut scores = vec![CoordScore::default(); n];
    let mut next = vec![0.0; n];
    let mut cur_sides = sides(instance, &p);
    let mut refined_sides: Option<Vec<Side>> = None;
    let mut stable_run = 0usize;
    let mut converged = false;
    let mut steps = 0usize;

    while steps < params.max_iters {
        model::gradient_into(instance, &p, &mut grad);
        par::fill(&mut y, |i| p[i] - grad[i] / l);
        projection::score_into(instance, &y, &mut scores);
        projection::project_with_scores(instance, &scores, &mut next);
        let q_next = model::objective_q(instance, &next)?;
        let step_sq = par::dist_sq(&p, &next);
        let next_sides = sides(instance, &next);
        let changed = next_sides != cur_sides;
        steps += 1;
        observer(&IterationView {
            t: steps,
            prev: &p,
            next: &next,
            q_prev: q_obj,
            q_next,
            step_sq,
            partition_changed: changed,
            refinement: false,
        });
        trace.push(q_next);
        step_trace.push(step_sq);
        if changed {
            partition_changes.push(steps);
        }
        let decrease = q_obj - q_next;
        std::mem::swap(&mut p, &mut next);
        q_obj = q_next;
        cur_sides = next_sides;

        stable_run = if step_sq <= stab_threshold && !changed { stable_run + 1 } else { 0 };
        let stalled = decrease <= eps;
        let already_refined = refined_sides.as_ref() == Some(&cur_sides);
        let want_refine = params.refine && !already_refined && (stable_run >= params.stab_window || stalled);
        if want_refine && steps < params.max_iters {
            let part = Partition::from_sides(&cur_sides);
            let outcome = refine_inner(instance, &cur_sides, &p, l, params.refine_tol, params.max_iters)?;
            let q_ref = model::objective_q(instance, &outcome.p)?;
            let ref_step = par::dist_sq(&p, &outcome.p);
            steps += 1;
            observer(&IterationView {
                t: steps,
                prev: &p,
                next: &outcome.p,
                q_prev: q_obj,
                q_next: q_ref,
                step_sq: ref_step,
                partition_changed: false,
                refinement: true,
            });
            trace.push(q_ref);
            step_trace.push(ref_step);
            debug_assert_eq!(Partition::of(instance, &outcome.p), part);
            p = outcome.p;
            q_obj = q_ref;
            refined_sides = Some(cur_sides.clone());
            stable_run = 0;
            continue;
        }
        if stalled {
            converged = true;
            break;
        }
    }

    let cert = certify_with_scores(instance, &p, l, params.cert_tol, &mut grad, &mut y, &mut scores, &mut next)?;
    let partition = Partition::from_sides(&cur_sides);
    let kappa = partition.changes();
    Ok(SolveReport {
        start_id: 0,
        final_profit: model::profit_z(instance, &p)?,
        final_q_obj: q_obj,
        final_p: p,
        iterations: steps,
        objective_trace: trace,
        step_sq_trace: step_trace,
        partition_changes,
        stationarity_residual: cert.residual,
        stationary: cert.ok,
        partition,
        kappa,
        bound_i: None,
        bound_ii: None,
        refined: refined_sides.is_some(),
        converged,
        step_constant: l,
        wall_time: clock.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub p: Vec<f64>,
    pub iterations: usize,
    /// Projected-gradient tolerance reached before the iteration cap.
    pub converged: bool,
}

/// Restricted interval of coordinate `i` under a fixed side.
#[inline]
fn piece_interval(instance: &Instance, i: usize, side: Side) -> (f64, f64) {
    let p0 = instance.p0()[i];
    let delta = instance.delta()[i];
    let (lo, hi) = instance.interval(i);
    match side {
        Side::Held => (p0, p0),
        Side::Raised => (p0 + delta, hi),
        Side::Lowered => (lo, p0 - delta),
    }
}

/// Minimizes `Q` over the convex piece named by `partition`: held
/// coordinates at baseline, raised ones in `[p0 + delta, u]`, lowered ones in
/// `[l, p0 - delta]`. Projected gradient with step `1/L` from `p`, stopping
/// once `‖x - clamp(x - grad/L)‖_inf <= tol`.
pub fn refine_on_partition(
    instance: &Instance,
    partition: &Partition,
    p: &[f64],
    l: f64,
    tol: f64,
    max_iters: usize,
) -> Result<RefineOutcome> {
    let sides = partition.sides(instance.n())?;
    if partition.changes() > instance.k() {
        return Err(Error::Contract(format!(
            "partition changes {} prices but k = {}",
            partition.changes(),
            instance.k()
        )));
    }
    if p.len() != instance.n() {
        return Err(Error::Structural("start point has the wrong length".into()));
    }
    refine_inner(instance, &sides, p, l, tol, max_iters)
}

fn refine_inner(instance: &Instance, sides: &[Side], p: &[f64], l: f64, tol: f64, max_iters: usize) -> Result<RefineOutcome> {
    let n = instance.n();
    let mut x = vec![0.0; n];
    par::fill(&mut x, |i| {
        let (lo, hi) = piece_interval(instance, i, sides[i]);
        p[i].clamp(lo, hi)
    });
    if sides.iter().all(|&s| s == Side::Held) {
        return Ok(RefineOutcome { p: x, iterations: 0, converged: true });
    }
    let mut grad = vec![0.0; n];
    let mut next = vec![0.0; n];
    for it in 0..max_iters {
        model::gradient_into(instance, &x, &mut grad);
        par::fill(&mut next, |i| {
            let (lo, hi) = piece_interval(instance, i, sides[i]);
            (x[i] - grad[i] / l).clamp(lo, hi)
        });
        let gap = par::dist_inf(&x, &next);
        if !gap.is_finite() {
            return Err(Error::Numeric("refinement diverged".into()));
        }
        if gap <= tol {
            return Ok(RefineOutcome { p: x, iterations: it, converged: true });
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(RefineOutcome { p: x, iterations: max_iters, converged: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    pub ok: bool,
    /// Sup-norm distance from `p` to the nearest member of
    /// `H(p - grad Q(p)/L)`, with tie alternatives within `tol` admitted.
    pub residual: f64,
}

/// Fixed-point test `p ∈ H(p - grad Q(p) / L)`.
pub fn certify_stationary(instance: &Instance, p: &[f64], l: f64, tol: f64) -> Result<Stationarity> {
    if !projection::is_feasible(instance, p) {
        return Err(Error::Contract("certify_stationary needs a feasible point".into()));
    }
    let n = instance.n();
    certify_with_scores(
        instance,
        p,
        l,
        tol,
        &mut vec![0.0; n],
        &mut vec![0.0; n],
        &mut vec![CoordScore::default(); n],
        &mut vec![0.0; n],
    )
}

#[allow(clippy::too_many_arguments)]
fn certify_with_scores(
    instance: &Instance,
    p: &[f64],
    l: f64,
    tol: f64,
    grad: &mut [f64],
    q: &mut [f64],
    scores: &mut [CoordScore],
    h: &mut [f64],
) -> Result<Stationarity> {
    model::gradient_into(instance, p, grad);
    par::fill(q, |i| p[i] - grad[i] / l);
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("gradient step is not finite".into()));
    }
    projection::score_into(instance, q, scores);
    projection::project_with_scores(instance, scores, h);
    let deterministic = par::dist_inf(p, h);

    // Same support as p, each changed coordinate at its nearest admissible
    // 1-D projection.
    let own_support = if projection::support_admissible(instance, scores, p, tol) {
        let p0 = instance.p0();
        (0..p.len())
            .filter(|&i| p[i] != p0[i])
            .map(|i| projection::membership_gap(instance, i, q[i], p[i], tol))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let residual = deterministic.min(own_support);
    Ok(Stationarity { ok: residual <= tol, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceBound {
    pub kappa: usize,
    /// Sum of the sorted scores beyond the first `kappa`.
    pub tail: f64,
    /// Bound on `‖grad Q(p)‖^2`.
    pub bound_i: f64,
    /// Bound on `Q(p) - Q*`; absent without a smallest-eigenvalue estimate.
    pub bound_ii: Option<f64>,
    /// `kappa < k`, so the tail vanishes and only the delta terms remain.
    pub reduced: bool,
}

/// Suboptimality bounds at a stationary point of an unbounded instance:
///
/// ```text
/// ‖grad Q(p)‖^2 <= L^2 tail + L^2/4 sum delta_i^2
/// Q(p) - Q*     <= L^2/(2 lambda_n) tail + L^2/(8 lambda_n) sum delta_i^2
/// ```
///
/// `tail` sums the scores at `p - grad Q(p)/L` ranked below the `kappa`-th,
/// `kappa` being the number of changed prices.
pub fn performance_bound(
    instance: &Instance,
    p: &[f64],
    l: f64,
    lambda_n: Option<f64>,
    tol: f64,
) -> Result<PerformanceBound> {
    if instance.bounds().is_some() {
        return Err(Error::Contract("performance bounds hold only without price bounds".into()));
    }
    if !projection::is_feasible(instance, p) {
        return Err(Error::Contract("performance bounds need a feasible point".into()));
    }
    let grad = model::gradient_q(instance, p)?;
    let q: Vec<f64> = p.iter().zip(&grad).map(|(x, g)| x - g / l).collect();
    let mut scores = projection::score(instance, &q)?.delta_score;
    scores.sort_unstable_by(|a, b| b.total_cmp(a));
    let p0 = instance.p0();
    let kappa = p.iter().zip(p0).filter(|(x, b)| x != b).count();
    let tail: f64 = scores[kappa..].iter().sum();
    let reduced = kappa < instance.k();
    if reduced && tail > tol {
        return Err(Error::Contract(format!(
            "point changes {kappa} < k prices yet unchanged scores sum to {tail:e}; it is not stationary"
        )));
    }
    let tail = if reduced { 0.0 } else { tail };
    let delta_sq: f64 = instance.delta().iter().map(|d| d * d).sum();
    let l2 = l * l;
    let bound_i = l2 * tail + 0.25 * l2 * delta_sq;
    let bound_ii = match lambda_n {
        Some(lam) if lam > 0.0 => Some(l2 / (2.0 * lam) * tail + l2 / (8.0 * lam) * delta_sq),
        _ => None,
    };
    Ok(PerformanceBound { kappa, tail, bound_i, bound_ii, reduced })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    Baseline,
    Random(usize),
    LongStep,
    Warm,
}

/// The standard starts: baseline, three seeded random feasible points, and
/// one long projected step from the baseline.
pub fn start_points(instance: &Instance, params: &SolverParams, l: f64) -> Result<Vec<(StartKind, Vec<f64>)>> {
    let n = instance.n();
    let k = instance.k();
    let p0 = instance.p0();
    let delta = instance.delta();
    let mut out = vec![(StartKind::Baseline, p0.to_vec())];
    for j in 0..3 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(params.seed.wrapping_add(j as u64 + 1));
        let mut p = p0.to_vec();
        let mut support = sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        for i in support {
            let magnitude = delta[i] * (1.0 + rng.gen::<f64>());
            let raised = rng.gen_bool(0.5);
            let (lo, hi) = instance.interval(i);
            p[i] = if raised {
                (p0[i] + magnitude).min(hi)
            } else {
                (p0[i] - magnitude).max(lo)
            };
        }
        out.push((StartKind::Random(j + 1), p));
    }
    let grad = model::gradient_q(instance, p0)?;
    let y: Vec<f64> = p0
        .iter()
        .zip(&grad)
        .map(|(b, g)| b - params.long_step_factor * g / l)
        .collect();
    out.push((StartKind::LongStep, projection::project_feasible(instance, &y)?));
    out.truncate(params.starts);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MultiStart {
    pub best: usize,
    pub reports: Vec<SolveReport>,
    pub step_constant: f64,
    pub lambda_n: Option<f64>,
}

impl MultiStart {
    pub fn best(&self) -> &SolveReport {
        &self.reports[self.best]
    }
}

/// Runs the standard starts and keeps the lowest final objective.
pub fn multi_start(instance: &Instance, params: &SolverParams) -> Result<MultiStart> {
    multi_start_with(instance, params, &[])
}

/// As [`multi_start`], plus caller-supplied warm starts run after the
/// standard ones.
pub fn multi_start_with(instance: &Instance, params: &SolverParams, warm: &[Vec<f64>]) -> Result<MultiStart> {
    params.check()?;
    instance.check_solvable()?;
    let l = params.step_constant(instance);
    let mut starts = start_points(instance, params, l)?;
    starts.extend(warm.iter().map(|p| (StartKind::Warm, p.clone())));

    let run = |(id, (_, start)): (usize, &(StartKind, Vec<f64>))| -> Result<SolveReport> {
        let mut report = solve_with_l(instance, start, params, l, &mut |_| {})?;
        report.start_id = id + 1;
        Ok(report)
    };
    let results: Vec<Result<SolveReport>> = if params.parallel_starts {
        run_parallel(&starts, &run)
    } else {
        starts.iter().enumerate().map(run).collect()
    };
    let mut reports = results.into_iter().collect::<Result<Vec<_>>>()?;

    let lambda_n = if params.bounds_report && instance.bounds().is_none() {
        model::inverse_lambdan(instance).converged_value()
    } else {
        None
    };
    if params.bounds_report && instance.bounds().is_none() {
        for r in reports.iter_mut().filter(|r| r.stationary) {
            if let Ok(b) = performance_bound(instance, &r.final_p, l, lambda_n, params.cert_tol) {
                r.bound_i = Some(b.bound_i);
                r.bound_ii = b.bound_ii;
            }
        }
    }
    let best = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.final_q_obj.total_cmp(&b.1.final_q_obj).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one start");
    Ok(MultiStart { best, reports, step_constant: l, lambda_n })
}

/// One point of a profit-versus-k curve.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub k_fraction: f64,
    pub k: usize,
    pub profit: f64,
    /// `None` for the baseline point `k = 0`.
    pub run: Option<MultiStart>,
}

/// Re-solves `instance` for each `k = max(1, round(fraction * n))`, in
/// increasing order, after a leading `k = 0` baseline point. Every solve is
/// warm-started from the previous best, which stays feasible for a larger
/// `k`, so the profit curve cannot decrease.
pub fn k_sweep(instance: &Instance, fractions: &[f64], params: &SolverParams) -> Result<Vec<SweepPoint>> {
    let n = instance.n();
    let mut ks: Vec<(f64, usize)> = Vec::with_capacity(fractions.len());
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::validation("k_list", format!("fraction {f} must lie in (0, 1]")));
        }
        ks.push((f, ((f * n as f64).round() as usize).clamp(1, n)));
    }
    ks.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
    ks.dedup_by_key(|e| e.1);

    let mut out = vec![SweepPoint {
        k_fraction: 0.0,
        k: 0,
        profit: model::profit_z(instance, instance.p0())?,
        run: None,
    }];
    let mut warm: Vec<Vec<f64>> = Vec::new();
    for (fraction, k) in ks {
        let sub = instance.with_k(k)?;
        let run = multi_start_with(&sub, params, &warm)?;
        warm = vec![run.best().final_p.clone()];
        out.push(SweepPoint { k_fraction: fraction, k, profit: run.best().final_profit, run: Some(run) });
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn run_parallel<F>(starts: &[(StartKind, Vec<f64>)], run: &F) -> Vec<Result<SolveReport>>
where
    F: Fn((usize, &(StartKind, Vec<f64>))) -> Result<SolveReport> + Sync,
{
    use rayon::prelude::*;
    starts.par_iter().enumerate().map(run).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<F>(starts: &[(StartKind, Vec<f64>)], run: &F) -> Vec<Result<SolveReport>>
where
    F: Fn((usize, &(StartKind, Vec<f64>))) -> Result<SolveReport>,
{
    starts.iter().enumerate().map(run).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    fn example() -> Instance {
        Instance::new(
            1,
            vec![6.0, 1.0],
            CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap(),
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            None,
        )
        .unwrap()
    }

    fn fixed_l3() -> SolverParams {
        SolverParams { step: StepRule::Fixed(3.0), ..SolverParams::default() }
    }

    #[test]
    fn first_step_of_worked_example() {
        let inst = example();
        let mut seen = Vec::new();
        let params = SolverParams { refine: false, ..fixed_l3() };
        let report = gpa_solve_observed(&inst, &[0.0, 0.5], &params, &mut |v| {
            seen.push((v.next.to_vec(), v.q_prev, v.q_next))
        })
        .unwrap();
        assert_eq!(seen[0].0, vec![2.0, 0.0]);
        assert!((seen[0].1 + 0.25).abs() < 1e-15);
        assert!((seen[0].2 + 8.0).abs() < 1e-15);
        assert!((report.final_q_obj + 9.0).abs() < 1e-6);
        assert!(report.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn worked_example_certificates() {
        let inst = example();
        let bad = certify_stationary(&inst, &[0.0, 0.5], 3.0, 1e-8).unwrap();
        assert!(!bad.ok);
        assert!(bad.residual >= 2.0);
        let good = certify_stationary(&inst, &[3.0, 0.0], 3.0, 1e-8).unwrap();
        assert!(good.ok, "{good:?}");
    }

    #[test]
    fn baseline_inside_window_is_stationary() {
        // grad Q(p0) = -f, tiny compared with L * delta / 2
        let inst = Instance::new(
            1,
            vec![0.01, 0.02],
            CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap(),
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            None,
        )
        .unwrap();
        let st = certify_stationary(&inst, &[0.0, 0.0], 2.002, 1e-8).unwrap();
        assert!(st.ok);
        assert_eq!(st.residual, 0.0);
    }

    #[test]
    fn refinement_on_fixed_pieces() {
        let inst = example();
        let held = Partition { alpha: vec![0, 1], beta: vec![], gamma: vec![] };
        let r = refine_on_partition(&inst, &held, &[0.0, 0.0], 3.0, 1e-12, 1000).unwrap();
        assert_eq!(r.p, vec![0.0, 0.0]);
        assert_eq!(r.iterations, 0);

        let part = Partition { alpha: vec![0], beta: vec![1], gamma: vec![] };
        let r = refine_on_partition(&inst, &part, &[0.0, 2.0], 3.0, 1e-12, 10_000).unwrap();
        assert!(r.converged);
        assert!((r.p[0]).abs() < 1e-12 && (r.p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn refine_rejects_oversized_partition() {
        let inst = example();
        let part = Partition { alpha: vec![], beta: vec![0, 1], gamma: vec![] };
        assert!(refine_on_partition(&inst, &part, &[1.0, 1.0], 3.0, 1e-9, 10).is_err());
        let broken = Partition { alpha: vec![0], beta: vec![], gamma: vec![] };
        assert!(refine_on_partition(&inst, &broken, &[0.0, 0.0], 3.0, 1e-9, 10).is_err());
    }

    #[test]
    fn multi_start_finds_global_optimum_of_example() {
        let inst = example();
        let ms = multi_start(&inst, &fixed_l3()).unwrap();
        assert_eq!(ms.reports.len(), 5);
        let best = ms.best();
        assert!((best.final_q_obj + 9.0).abs() < 1e-9);
        assert!(ms.reports.iter().all(|r| best.final_q_obj <= r.final_q_obj));
        assert!(best.stationary);
    }

    #[test]
    fn reduced_bound_when_budget_unused() {
        let inst = Instance::new(
            2,
            vec![6.0, 0.01],
            CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap(),
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            None,
        )
        .unwrap();
        let b = performance_bound(&inst, &[3.0, 0.0], 3.0, Some(2.0), 1e-9).unwrap();
        assert!(b.reduced);
        assert_eq!(b.kappa, 1);
        assert!((b.bound_ii.unwrap() - 9.0 * 0.5 / 16.0).abs() < 1e-12);
        assert!((b.bound_i - 9.0 * 0.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn params_are_checked() {
        let bad = SolverParams { long_step_factor: 1.0, ..SolverParams::default() };
        assert!(bad.check().is_err());
        let bad = SolverParams { stop: StopRule::Absolute(0.0), ..SolverParams::default() };
        assert!(bad.check().is_err());
    }
}
