//! Matrix-free iterative solvers over a symmetric operator.

use crate::error::{Error, Result};
use crate::par;

/// Conjugate gradients for `A x = b` with `A` symmetric positive definite,
/// supplied as `apply(x, out)` computing `out = A x`.
///
/// Stops when `||r|| <= rel_tol * ||b||`. A non-positive curvature
/// `p'Ap <= 0` or hitting `max_iter` is reported as non-convergence, which for
/// our operators means the matrix is (probably) not positive definite.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = par::norm_sq(b).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = par::norm_sq(&r);
    let target = rel_tol * b_norm;
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let curvature = par::dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::NonConvergence(format!(
                "non-positive curvature {curvature:e} in conjugate gradients; matrix is not positive definite"
            )));
        }
        let step = rr / curvature;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next = par::norm_sq(&r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }
    if rr.sqrt() <= target {
        Ok(x)
    } else {
        Err(Error::NonConvergence(format!(
            "conjugate gradients stopped after {max_iter} iterations at relative residual {:e}",
            rr.sqrt() / b_norm
        )))
    }
}

/// Deterministic, non-degenerate start vector for power-type iterations.
pub(crate) fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    let norm = par::norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Outcome of a power-type iteration.
#[derive(Debug, Clone, Copy)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EigenEstimate {
    /// The estimate, if the iteration converged to a positive finite value.
    pub fn converged_value(&self) -> Option<f64> {
        (self.converged && self.value.is_finite() && self.value > 0.0).then_some(self.value)
    }
}

/// Power iteration for the dominant eigenvalue, tracked by the Rayleigh
/// quotient; converged when its relative change drops to `rel_tol`.
pub fn power_iteration<F>(apply: F, n: usize, rel_tol: f64, max_iter: usize) -> EigenEstimate
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut v = start_vector(n);
    let mut w = vec![0.0; n];
    let mut rho = f64::NAN;
    for it in 1..=max_iter {
        apply(&v, &mut w);
        let next = par::dot(&v, &w);
        let norm = par::norm_sq(&w).sqrt();
        if !next.is_finite() || norm == 0.0 || !norm.is_finite() {
            return EigenEstimate {
                value: next,
                iterations: it,
                converged: false,
            };
        }
        let converged = rho.is_finite() && (next - rho).abs() <= rel_tol * next.abs();
        rho = next;
        if converged {
            return EigenEstimate {
                value: rho,
                iterations: it,
                converged: true,
            };
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / norm);
    }
    EigenEstimate {
        value: rho,
        iterations: max_iter,
        converged: false,
    }
}

/// Inverse iteration for the smallest eigenvalue of an SPD operator. Each
/// step solves with conjugate gradients; the estimate is the Rayleigh
/// quotient `v'Av` of the normalized iterate.
pub fn inverse_iteration<F>(apply: F, n: usize, rel_tol: f64, max_iter: usize) -> EigenEstimate
where
    F: Fn(&[f64], &mut [f64]),
{
    let mut v = start_vector(n);
    let mut av = vec![0.0; n];
    let mut rho = f64::NAN;
    let cg_cap = (10 * n).clamp(100, 20_000);
    for it in 1..=max_iter {
        let w = match conjugate_gradient(&apply, &v, 1e-12, cg_cap) {
            Ok(w) => w,
            Err(_) => {
                return EigenEstimate {
                    value: f64::NAN,
                    iterations: it,
                    converged: false,
                }
            }
        };
        let norm = par::norm_sq(&w).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / norm);
        apply(&v, &mut av);
        let next = par::dot(&v, &av);
        let converged = rho.is_finite() && (next - rho).abs() <= rel_tol * next.abs();
        rho = next;
        if converged {
            return EigenEstimate {
                value: rho,
                iterations: it,
                converged: true,
            };
        }
    }
    EigenEstimate {
        value: rho,
        iterations: max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut s = 2.0 * x[i];
            if i > 0 {
                s -= x[i - 1];
            }
            if i + 1 < n {
                s -= x[i + 1];
            }
            out[i] = s;
        }
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let b = vec![1.0; 20];
        let x = conjugate_gradient(tridiag, &b, 1e-12, 200).unwrap();
        let mut ax = vec![0.0; 20];
        tridiag(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn cg_flags_indefinite() {
        let neg = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0];
            out[1] = -x[1];
        };
        assert!(conjugate_gradient(neg, &[0.0, 1.0], 1e-10, 50).is_err());
    }

    #[test]
    fn extreme_eigenvalues_of_2x2() {
        // [[2,-1],[-1,2]] has eigenvalues 1 and 3
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = 2.0 * x[0] - x[1];
            out[1] = -x[0] + 2.0 * x[1];
        };
        let top = power_iteration(apply, 2, 1e-12, 10_000);
        assert!(top.converged);
        assert!((top.value - 3.0).abs() < 1e-8);
        let bottom = inverse_iteration(apply, 2, 1e-12, 1_000);
        assert!(bottom.converged);
        assert!((bottom.value - 1.0).abs() < 1e-8);
    }
}
