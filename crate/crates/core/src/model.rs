//! Problem data and the quadratic objective.
//!
//! Demand is linear, `v(p) = a - D p`, and profit is `Z(p) = (p - c)'v(p)`.
//! Maximizing profit is the same as minimizing
//! `Q(p) = 1/2 p'S p - f'p` with `S = D + D'` and `f = a + D'c`; the two
//! differ by the constant `c'a`: `Z(p) = -Q(p) - c'a`.
//!
//! `S` is never stored. Every product with it is evaluated as `D p + D' p`
//! from the row-major matrix and a precomputed transpose.

use nalgebra::DMatrix;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{self, EigenEstimate};
use crate::par;
use crate::sparse::CsrMatrix;

/// Largest size for which positive definiteness is checked by a dense
/// Cholesky factorization.
pub const DENSE_PD_LIMIT: usize = 2_000;

/// Per-product price bounds `l <= p <= u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// One price-optimization instance.
#[derive(Debug, Clone)]
pub struct Instance {
    k: usize,
    a: Vec<f64>,
    d: CsrMatrix,
    dt: CsrMatrix,
    c: Vec<f64>,
    p0: Vec<f64>,
    delta: Vec<f64>,
    bounds: Option<Bounds>,
    f: Vec<f64>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.a == other.a
            && self.d == other.d
            && self.c == other.c
            && self.p0 == other.p0
            && self.delta == other.delta
            && self.bounds == other.bounds
    }
}

impl Instance {
    /// Checks structure only (lengths, finiteness, `1 <= k <= n`). Modelling
    /// assumptions such as `delta > 0` are reported by [`validate`] and
    /// enforced by [`Instance::check_solvable`].
    pub fn new(
        k: usize,
        a: Vec<f64>,
        d: CsrMatrix,
        c: Vec<f64>,
        p0: Vec<f64>,
        delta: Vec<f64>,
        bounds: Option<Bounds>,
    ) -> Result<Self> {
        let n = d.n();
        if n == 0 {
            return Err(Error::Structural("instance has no products".into()));
        }
        if k == 0 || k > n {
            return Err(Error::Structural(format!("k = {k} must lie in 1..={n}")));
        }
        let mut fields: Vec<(&str, &[f64])> =
            vec![("a", &a), ("c", &c), ("p0", &p0), ("delta", &delta)];
        if let Some(b) = &bounds {
            fields.push(("l", &b.lower));
            fields.push(("u", &b.upper));
        }
        for (name, v) in fields {
            if v.len() != n {
                return Err(Error::Structural(format!(
                    "`{name}` has length {} but n = {n}",
                    v.len()
                )));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::Structural(format!("`{name}[{i}]` is not finite")));
            }
        }
        let dt = d.transpose();
        let mut f = vec![0.0; n];
        par::fill(&mut f, |i| a[i] + dt.row_dot(i, &c));
        Ok(Instance {
            k,
            a,
            d,
            dt,
            c,
            p0,
            delta,
            bounds,
            f,
        })
    }

    pub fn n(&self) -> usize {
        self.p0.len()
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn p0(&self) -> &[f64] {
        &self.p0
    }
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }
    pub fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }
    pub fn d(&self) -> &CsrMatrix {
        &self.d
    }
    pub fn d_transpose(&self) -> &CsrMatrix {
        &self.dt
    }
    /// Linear coefficient `f = a + D'c` of `Q`.
    pub fn linear_term(&self) -> &[f64] {
        &self.f
    }

    /// Interval `[l_i, u_i]`, infinite when the instance is unbounded.
    #[inline]
    pub fn interval(&self, i: usize) -> (f64, f64) {
        match &self.bounds {
            Some(b) => (b.lower[i], b.upper[i]),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn delta_min(&self) -> f64 {
        self.delta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same demand model with a different change budget.
    pub fn with_k(&self, k: usize) -> Result<Instance> {
        if k == 0 || k > self.n() {
            return Err(Error::Structural(format!(
                "k = {k} must lie in 1..={}",
                self.n()
            )));
        }
        let mut out = self.clone();
        out.k = k;
        Ok(out)
    }

    /// The solver needs `delta > 0` and consistent bounds.
    pub fn check_solvable(&self) -> Result<()> {
        if let Some(i) = self.delta.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::validation(
                "delta",
                format!("delta[{i}] = {} must be positive", self.delta[i]),
            ));
        }
        if let Some(b) = &self.bounds {
            for i in 0..self.n() {
                if b.lower[i] > self.p0[i] - self.delta[i] {
                    return Err(Error::validation(
                        "l",
                        format!("l[{i}] = {} exceeds p0 - delta = {}", b.lower[i], self.p0[i] - self.delta[i]),
                    ));
                }
                if b.upper[i] < self.p0[i] + self.delta[i] {
                    return Err(Error::validation(
                        "u",
                        format!("u[{i}] = {} is below p0 + delta = {}", b.upper[i], self.p0[i] + self.delta[i]),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `out = S x`
    pub fn s_mul_into(&self, x: &[f64], out: &mut [f64]) {
        par::fill(out, |i| self.d.row_dot(i, x) + self.dt.row_dot(i, x));
    }

    pub fn s_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.s_mul_into(x, &mut out);
        out
    }

    /// Row `i` of `S` as `(column, value)` pairs sorted by column, entries
    /// that cancel to zero dropped.
    pub fn s_row(&self, i: usize) -> Vec<(usize, f64)> {
        let (dc, dv) = self.d.row(i);
        let (tc, tv) = self.dt.row(i);
        let mut entries: Vec<(usize, f64)> = dc
            .iter()
            .zip(dv)
            .chain(tc.iter().zip(tv))
            .map(|(&c, &v)| (c, v))
            .collect();
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        merged
    }

    /// Dense copy of `S`, for small instances only.
    pub fn dense_s(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut s = DMatrix::zeros(n, n);
        for (i, j, v) in self.d.triplets() {
            s[(i, j)] += v;
            s[(j, i)] += v;
        }
        s
    }

    fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n() {
            return Err(Error::Structural(format!(
                "price vector has length {} but n = {}",
                p.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Outcome of the assumption checks. Each flag is one family of inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// `s_ij <= 0` for every `i != j`.
    pub a1_sign_pattern: bool,
    /// `S` positive definite.
    pub a1_positive_definite: bool,
    /// False when positive definiteness was only inferred from solver
    /// convergence (large, not diagonally dominant instances).
    pub pd_exact: bool,
    /// `a > 0`, `c > 0` and `a - D c >= 0`.
    pub a2_nonneg: bool,
    /// `p0 - delta >= c`.
    pub a3_profitable_baseline: bool,
    /// `delta > 0`.
    pub a4_positive_delta: bool,
    /// `l <= p0 - delta` and `u >= p0 + delta` (trivially true without bounds).
    pub bounds_consistent: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.a1_sign_pattern
            && self.a1_positive_definite
            && self.a2_nonneg
            && self.a3_profitable_baseline
            && self.a4_positive_delta
            && self.bounds_consistent
    }
}

/// True when every row of `S` has a diagonal strictly larger than the
/// absolute sum of its off-diagonal entries.
pub fn strictly_diagonally_dominant(instance: &Instance) -> bool {
    (0..instance.n()).all(|i| {
        let (diag, off) = instance.s_row(i).iter().fold((0.0, 0.0), |(d, o), &(j, v)| {
            if j == i { (v, o) } else { (d, o + v.abs()) }
        });
        diag > off
    })
}

/// Checks the modelling assumptions. Never fails: every violated family is
/// reported through its flag plus a message naming the first offender.
pub fn validate(instance: &Instance) -> ValidationReport {
    let n = instance.n();
    let mut messages = Vec::new();

    let mut sign_ok = true;
    let mut diag_dominant = true;
    for i in 0..n {
        let row = instance.s_row(i);
        let mut diag = 0.0;
        let mut off = 0.0;
        for &(j, v) in &row {
            if j == i {
                diag = v;
            } else {
                off += v.abs();
                if v > 0.0 && sign_ok {
                    sign_ok = false;
                    messages.push(format!("A1: s[{i}][{j}] = {v} is positive"));
                }
            }
        }
        diag_dominant &= diag > off;
    }

    let (pd, pd_exact) = if diag_dominant {
        (true, true)
    } else if n <= DENSE_PD_LIMIT {
        (instance.dense_s().cholesky().is_some(), true)
    } else {
        let ok = unconstrained_minimizer(instance).is_ok();
        messages.push("A1: positive definiteness inferred from conjugate-gradient convergence (probable)".into());
        (ok, false)
    };
    if !pd {
        messages.push("A1: S = D + D' is not positive definite".into());
    }

    let a = instance.a();
    let c = instance.c();
    let dc = instance.d().mul_vec(c);
    let mut a2 = true;
    for i in 0..n {
        let bad = if !(a[i] > 0.0) {
            Some(format!("A2: a[{i}] = {} is not positive", a[i]))
        } else if !(c[i] > 0.0) {
            Some(format!("A2: c[{i}] = {} is not positive", c[i]))
        } else if a[i] - dc[i] < 0.0 {
            Some(format!("A2: (a - Dc)[{i}] = {} is negative", a[i] - dc[i]))
        } else {
            None
        };
        if let Some(msg) = bad {
            a2 = false;
            messages.push(msg);
            break;
        }
    }

    let p0 = instance.p0();
    let delta = instance.delta();
    let a3 = match (0..n).find(|&i| p0[i] - delta[i] < c[i]) {
        Some(i) => {
            messages.push(format!("A3: p0[{i}] - delta[{i}] = {} is below cost {}", p0[i] - delta[i], c[i]));
            false
        }
        None => true,
    };
    let a4 = match delta.iter().position(|&d| !(d > 0.0)) {
        Some(i) => {
            messages.push(format!("A4: delta[{i}] = {} is not positive", delta[i]));
            false
        }
        None => true,
    };
    let bounds_ok = match instance.bounds() {
        None => true,
        Some(b) => match (0..n).find(|&i| b.lower[i] > p0[i] - delta[i] || b.upper[i] < p0[i] + delta[i]) {
            Some(i) => {
                messages.push(format!("bounds: [{}, {}] does not contain p0[{i}] +/- delta[{i}]", b.lower[i], b.upper[i]));
                false
            }
            None => true,
        },
    };

    ValidationReport {
        a1_sign_pattern: sign_ok,
        a1_positive_definite: pd,
        pd_exact,
        a2_nonneg: a2,
        a3_profitable_baseline: a3,
        a4_positive_delta: a4,
        bounds_consistent: bounds_ok,
        messages,
    }
}

/// `Q(p) = 1/2 p'S p - f'p`, evaluated as `p'D p - f'p` in one sparse pass.
pub fn objective_q(instance: &Instance, p: &[f64]) -> Result<f64> {
    instance.check_len(p)?;
    let d = instance.d();
    let f = instance.linear_term();
    let q = par::sum_by(p.len(), |i| p[i] * (d.row_dot(i, p) - f[i]));
    ensure_finite(q, "objective")
}

/// `grad Q(p) = S p - f`
pub fn gradient_q(instance: &Instance, p: &[f64]) -> Result<Vec<f64>> {
    instance.check_len(p)?;
    let mut g = vec![0.0; p.len()];
    gradient_into(instance, p, &mut g);
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("gradient is not finite".into()));
    }
    Ok(g)
}

pub(crate) fn gradient_into(instance: &Instance, p: &[f64], out: &mut [f64]) {
    let d = instance.d();
    let dt = instance.d_transpose();
    let f = instance.linear_term();
    par::fill(out, |i| d.row_dot(i, p) + dt.row_dot(i, p) - f[i]);
}

/// Profit `Z(p) = (p - c)'(a - D p)`.
pub fn profit_z(instance: &Instance, p: &[f64]) -> Result<f64> {
    instance.check_len(p)?;
    let d = instance.d();
    let a = instance.a();
    let c = instance.c();
    let z = par::sum_by(p.len(), |i| (p[i] - c[i]) * (a[i] - d.row_dot(i, p)));
    ensure_finite(z, "profit")
}

/// `c'a`, the constant separating profit from `-Q`.
pub fn profit_constant(instance: &Instance) -> f64 {
    par::dot(instance.c(), instance.a())
}

#[derive(Debug, Clone)]
pub struct UnconstrainedOptimum {
    pub p: Vec<f64>,
    pub q_value: f64,
}

/// Solves `S p = f` by conjugate gradients to relative residual `1e-10`.
pub fn unconstrained_minimizer(instance: &Instance) -> Result<UnconstrainedOptimum> {
    let n = instance.n();
    let cap = (10 * n + 100).min(50_000);
    let p = linalg::conjugate_gradient(
        |x, out| instance.s_mul_into(x, out),
        instance.linear_term(),
        1e-10,
        cap,
    )?;
    let q_value = objective_q(instance, &p)?;
    Ok(UnconstrainedOptimum { p, q_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMode {
    Gershgorin,
    Power,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralBounds {
    /// Step constant, strictly above the largest eigenvalue estimate.
    pub l: f64,
    pub lambda1_est: f64,
    pub lambdan_est: Option<f64>,
    /// Power mode was requested but the iteration stagnated, so `l` is the
    /// Gershgorin value.
    pub fell_back: bool,
}

/// `1.001 * max_i sum_j |s_ij|`, an upper bound on every eigenvalue of `S`
/// with a strict margin.
pub fn gershgorin_l(instance: &Instance) -> f64 {
    let radius = par::max_by(instance.n(), |i| {
        instance.s_row(i).iter().map(|e| e.1.abs()).sum::<f64>()
    });
    1.001 * radius
}

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 10_000;

pub fn power_lambda1(instance: &Instance) -> EigenEstimate {
    linalg::power_iteration(
        |x, out| instance.s_mul_into(x, out),
        instance.n(),
        POWER_TOL,
        POWER_MAX_ITER,
    )
}

pub fn inverse_lambdan(instance: &Instance) -> EigenEstimate {
    linalg::inverse_iteration(|x, out| instance.s_mul_into(x, out), instance.n(), POWER_TOL, 1_000)
}

/// Step constant only, skipping the estimates [`spectral_bounds`] reports.
pub fn step_constant(instance: &Instance, mode: SpectralMode) -> (f64, bool) {
    let g = gershgorin_l(instance);
    match mode {
        SpectralMode::Gershgorin => (g, false),
        SpectralMode::Power => {
            let est = power_lambda1(instance);
            if est.converged && est.value > 0.0 {
                (1.01 * est.value, false)
            } else {
                (g, true)
            }
        }
    }
}

/// Step constant `L > lambda_1` plus eigenvalue estimates of `S`.
pub fn spectral_bounds(instance: &Instance, mode: SpectralMode, want_lambda_min: bool) -> SpectralBounds {
    let g = gershgorin_l(instance);
    let est = power_lambda1(instance);
    let usable = est.converged && est.value > 0.0 && est.value.is_finite();
    let (l, fell_back) = match mode {
        SpectralMode::Gershgorin => (g, false),
        SpectralMode::Power if usable => (1.01 * est.value, false),
        SpectralMode::Power => (g, true),
    };
    let lambda1_est = if usable { est.value } else { g / 1.001 };
    let lambdan_est = if want_lambda_min {
        let inv = inverse_lambdan(instance);
        (inv.converged && inv.value > 0.0).then_some(inv.value)
    } else {
        None
    };
    SpectralBounds {
        l,
        lambda1_est,
        lambdan_est,
        fell_back,
    }
}
