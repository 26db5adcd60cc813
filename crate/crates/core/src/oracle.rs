//! Exhaustive ground truth for small instances.
//!
//! Everything here is brute force on purpose: partitions are enumerated, the
//! restricted QPs are solved by trying every active set with a dense
//! Cholesky factorization, and the projection oracle tries every support.
//! None of it shares code paths with the iterative solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gpa::{Partition, Side};
use crate::model::Instance;

/// Largest `n` accepted by the exact restricted solve.
pub const MAX_EXACT_N: usize = 20;
/// Largest number of partitions [`global_optimum`] will enumerate.
pub const MAX_PARTITIONS: u64 = 1_000_000;
/// Largest `n` accepted by [`brute_projection`].
pub const MAX_BRUTE_N: usize = 10;

fn binomial(n: u64, r: u64) -> u64 {
    (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of partitions with between 1 and `k` changed prices:
/// `sum_{i=1..k} C(n, i) 2^i`. The all-held partition is not counted.
pub fn count_partitions(n: usize, k: usize) -> Result<u64> {
    if k == 0 || k > n || n > MAX_EXACT_N {
        return Err(Error::Contract(format!(
            "count_partitions needs 1 <= k <= n <= {MAX_EXACT_N}, got n = {n}, k = {k}"
        )));
    }
    Ok((1..=k as u64).map(|i| binomial(n as u64, i) << i).sum())
}

/// Optimal point of one restricted QP.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSolution {
    pub p: Vec<f64>,
    pub q_value: f64,
}

/// Dense copy of the problem data shared by many restricted solves.
struct DenseProblem<'a> {
    instance: &'a Instance,
    s: DMatrix<f64>,
    f: DVector<f64>,
    scale: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Activity {
    Free,
    /// At `p0 +/- delta`.
    Inner,
    /// At the finite price bound.
    Outer,
}

impl<'a> DenseProblem<'a> {
    fn new(instance: &'a Instance) -> Result<Self> {
        let n = instance.n();
        if n > MAX_EXACT_N {
            return Err(Error::Capacity(format!(
                "exact restricted solves are limited to n <= {MAX_EXACT_N}, got {n}"
            )));
        }
        instance.check_solvable()?;
        let s = instance.dense_s();
        let f = DVector::from_column_slice(instance.linear_term());
        let scale = 1.0 + f.amax() + s.amax() * instance.p0().iter().fold(1.0f64, |m, x| m.max(x.abs()));
        Ok(DenseProblem { instance, s, f, scale })
    }

    fn q_value(&self, p: &DVector<f64>) -> f64 {
        0.5 * p.dot(&(&self.s * p)) - self.f.dot(p)
    }

    fn solve(&self, sides: &[Side]) -> Result<RestrictedSolution> {
        let inst = self.instance;
        let n = inst.n();
        let p0 = inst.p0();
        let delta = inst.delta();
        let moved: Vec<usize> = (0..n).filter(|&i| sides[i] != Side::Held).collect();
        let radix: Vec<usize> = moved
            .iter()
            .map(|&i| {
                let (lo, hi) = inst.interval(i);
                let outer_finite = match sides[i] {
                    Side::Raised => hi.is_finite(),
                    _ => lo.is_finite(),
                };
                if outer_finite { 3 } else { 2 }
            })
            .collect();
        let patterns: usize = radix.iter().product();
        let tol = 1e-9 * self.scale;

        let mut best: Option<(f64, DVector<f64>)> = None;
        let mut activity = vec![Activity::Free; moved.len()];
        for code in 0..patterns {
            let mut rest = code;
            for (slot, &r) in radix.iter().enumerate() {
                activity[slot] = match rest % r {
                    0 => Activity::Free,
                    1 => Activity::Inner,
                    _ => Activity::Outer,
                };
                rest /= r;
            }
            let mut p = DVector::from_column_slice(p0);
            let mut free = Vec::new();
            for (slot, &i) in moved.iter().enumerate() {
                let (lo, hi) = inst.interval(i);
                match (activity[slot], sides[i]) {
                    (Activity::Free, _) => free.push(i),
                    (Activity::Inner, Side::Raised) => p[i] = p0[i] + delta[i],
                    (Activity::Inner, _) => p[i] = p0[i] - delta[i],
                    (Activity::Outer, Side::Raised) => p[i] = hi,
                    (Activity::Outer, _) => p[i] = lo,
                }
            }
            if !free.is_empty() {
                let m = free.len();
                let s_ff = DMatrix::from_fn(m, m, |r, c| self.s[(free[r], free[c])]);
                let mut rhs = DVector::from_fn(m, |r, _| self.f[free[r]]);
                for (r, &i) in free.iter().enumerate() {
                    for j in (0..n).filter(|j| !free.contains(j)) {
                        rhs[r] -= self.s[(i, j)] * p[j];
                    }
                }
                let chol = s_ff.clone().cholesky().ok_or_else(|| {
                    Error::Numeric("principal submatrix of S is not positive definite".into())
                })?;
                let mut x = chol.solve(&rhs);
                // one step of iterative refinement removes most factorization rounding
                let residual = &rhs - &s_ff * &x;
                x += chol.solve(&residual);
                for (r, &i) in free.iter().enumerate() {
                    p[i] = x[r];
                }
            }
            if !self.kkt_holds(sides, &moved, &activity, &p, tol) {
                continue;
            }
            // free values may sit a rounding error outside their interval
            for &i in &free {
                let (lo, hi) = inst.interval(i);
                p[i] = if sides[i] == Side::Raised {
                    p[i].max(p0[i] + delta[i]).min(hi)
                } else {
                    p[i].min(p0[i] - delta[i]).max(lo)
                };
            }
            let q = self.q_value(&p);
            if best.as_ref().is_none_or(|(bq, _)| q < *bq) {
                best = Some((q, p));
            }
        }
        match best {
            Some((q_value, p)) => Ok(RestrictedSolution { p: p.iter().copied().collect(), q_value }),
            None => Err(Error::Numeric(
                "no active set satisfies the optimality conditions of the restricted problem".into(),
            )),
        }
    }

    /// Free coordinates inside their interval, active ones with a
    /// sign-correct multiplier.
    fn kkt_holds(&self, sides: &[Side], moved: &[usize], activity: &[Activity], p: &DVector<f64>, tol: f64) -> bool {
        let inst = self.instance;
        let grad = &self.s * p - &self.f;
        moved.iter().zip(activity).all(|(&i, &act)| {
            let p0 = inst.p0()[i];
            let delta = inst.delta()[i];
            let (lo, hi) = inst.interval(i);
            let raised = sides[i] == Side::Raised;
            match act {
                Activity::Free => {
                    if raised {
                        p[i] > p0 + delta - tol && p[i] <= hi + tol
                    } else {
                        p[i] < p0 - delta + tol && p[i] >= lo - tol
                    }
                }
                // pushing against a lower limit needs grad >= 0, against an
                // upper limit grad <= 0
                Activity::Inner if raised => grad[i] >= -tol,
                Activity::Inner => grad[i] <= tol,
                Activity::Outer if raised => grad[i] <= tol,
                Activity::Outer => grad[i] >= -tol,
            }
        })
    }
}

/// Exact minimizer of `Q` over the piece named by `partition`.
pub fn solve_restricted(instance: &Instance, partition: &Partition) -> Result<RestrictedSolution> {
    let problem = DenseProblem::new(instance)?;
    let sides = partition.sides(instance.n())?;
    if partition.changes() > instance.k() {
        return Err(Error::Contract(format!(
            "partition changes {} prices but k = {}",
            partition.changes(),
            instance.k()
        )));
    }
    problem.solve(&sides)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOptimum {
    pub p: Vec<f64>,
    pub q_value: f64,
    pub partition: Partition,
    /// Partitions evaluated, including the all-held one.
    pub evaluated: u64,
}

/// Enumerates every partition with at most `k` changes plus the baseline and
/// returns the best restricted optimum. Ties go to the lexicographically
/// smallest side vector (held < raised < lowered).
pub fn global_optimum(instance: &Instance) -> Result<GlobalOptimum> {
    let n = instance.n();
    let k = instance.k();
    if n > MAX_EXACT_N {
        return Err(Error::Capacity(format!(
            "global optimum enumeration is limited to n <= {MAX_EXACT_N}, got {n}"
        )));
    }
    let count = count_partitions(n, k)?;
    if count > MAX_PARTITIONS {
        return Err(Error::Capacity(format!(
            "{count} partitions exceed the enumeration limit of {MAX_PARTITIONS}"
        )));
    }
    let problem = DenseProblem::new(instance)?;

    let mut subsets = Vec::new();
    for size in 1..=k {
        combinations(n, size, &mut subsets);
    }
    let eval_subset = |subset: &Vec<usize>| -> Result<Option<Candidate>> {
        let mut best: Option<Candidate> = None;
        for signs in 0..(1usize << subset.len()) {
            let mut sides = vec![Side::Held; n];
            for (b, &i) in subset.iter().enumerate() {
                sides[i] = if signs >> b & 1 == 0 { Side::Raised } else { Side::Lowered };
            }
            let sol = problem.solve(&sides)?;
            let cand = (sol.q_value, sides, sol.p);
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        Ok(best)
    };
    let results: Vec<Result<Option<Candidate>>> = map_subsets(&subsets, eval_subset);

    let baseline_p = instance.p0().to_vec();
    let mut best = (
        problem.q_value(&DVector::from_column_slice(&baseline_p)),
        vec![Side::Held; n],
        baseline_p,
    );
    for r in results {
        if let Some(cand) = r? {
            if better(&cand, &best) {
                best = cand;
            }
        }
    }
    Ok(GlobalOptimum {
        p: best.2,
        q_value: best.0,
        partition: Partition::from_sides(&best.1),
        evaluated: count + 1,
    })
}

/// Objective value, sides and prices of one evaluated piece.
type Candidate = (f64, Vec<Side>, Vec<f64>);

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)).is_lt()
}

#[cfg(feature = "parallel")]
fn map_subsets<T: Send, F>(subsets: &[Vec<usize>], f: F) -> Vec<T>
where
    F: Fn(&Vec<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    subsets.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_subsets<T, F>(subsets: &[Vec<usize>], f: F) -> Vec<T>
where
    F: Fn(&Vec<usize>) -> T,
{
    subsets.iter().map(f).collect()
}

/// Appends all `size`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, size: usize, out: &mut Vec<Vec<usize>>) {
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.clone());
        let mut i = size;
        while i > 0 && idx[i - 1] == n - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Nearest point of the feasible set to `q`, by trying every support of size
/// at most `k` and, on each supported coordinate, the best of staying put or
/// clamping into either changed interval.
pub fn brute_projection(instance: &Instance, q: &[f64]) -> Result<Vec<f64>> {
    let n = instance.n();
    if n > MAX_BRUTE_N {
        return Err(Error::Capacity(format!(
            "brute-force projection is limited to n <= {MAX_BRUTE_N}, got {n}"
        )));
    }
    if q.len() != n {
        return Err(Error::Structural(format!("query has length {} but n = {n}", q.len())));
    }
    let p0 = instance.p0();
    let delta = instance.delta();
    let best_moved: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let (lo, hi) = instance.interval(i);
            let candidates = [
                p0[i],
                q[i].max(p0[i] + delta[i]).min(hi),
                q[i].min(p0[i] - delta[i]).max(lo),
            ];
            candidates
                .iter()
                .map(|&x| (x, (x - q[i]) * (x - q[i])))
                .fold((p0[i], f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc })
        })
        .collect();
    let stay: Vec<f64> = (0..n).map(|i| (p0[i] - q[i]) * (p0[i] - q[i])).collect();

    let mut best_mask = 0u32;
    let mut best_dist = f64::INFINITY;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize > instance.k() {
            continue;
        }
        let dist: f64 = (0..n)
            .map(|i| if mask >> i & 1 == 1 { best_moved[i].1 } else { stay[i] })
            .sum();
        if dist < best_dist {
            best_dist = dist;
            best_mask = mask;
        }
    }
    Ok((0..n)
        .map(|i| if best_mask >> i & 1 == 1 { best_moved[i].0 } else { p0[i] })
        .collect())
}
