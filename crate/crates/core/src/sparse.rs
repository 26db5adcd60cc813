//! Compressed sparse row storage for the price-effect matrix.

use crate::error::{Error, Result};
use crate::par;

/// Square CSR matrix. Entries keep the order in which they were supplied
/// within each row, so a matrix read from a file writes back identically.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Triplets are grouped by row
    /// with a stable sort; within a row the input order is kept.
    ///
    /// Rejected: out-of-range indices, duplicate positions, explicitly stored
    /// zeros, non-finite values and rows without a diagonal entry.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::Structural(format!(
                    "entry ({r}, {c}) outside a {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Structural(format!("entry ({r}, {c}) is not finite")));
            }
            if v == 0.0 {
                return Err(Error::Structural(format!(
                    "entry ({r}, {c}) is an explicitly stored zero"
                )));
            }
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        let m = CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        };
        m.check_rows()?;
        Ok(m)
    }

    fn check_rows(&self) -> Result<()> {
        let mut seen = vec![usize::MAX; self.n];
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            let mut has_diag = false;
            for &c in cols {
                if seen[c] == i {
                    return Err(Error::Structural(format!(
                        "duplicate entry ({i}, {c})"
                    )));
                }
                seen[c] = i;
                has_diag |= c == i;
            }
            if !has_diag {
                return Err(Error::Structural(format!(
                    "row {i} has no stored diagonal entry"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).fold(0.0, |acc, (&c, &v)| acc + v * x[c])
    }

    pub fn diag(&self, i: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter()
            .position(|&c| c == i)
            .map(|p| vals[p])
            .unwrap_or(0.0)
    }

    /// `out = A x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        par::fill(out, |i| self.row_dot(i, x));
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Transpose; rows of the result list their entries by ascending column.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n {
            let (rc, rv) = self.row(i);
            for (&c, &v) in rc.iter().zip(rv) {
                let slot = next[c];
                cols[slot] = i;
                vals[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// All stored entries in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_row_order_and_transposes() {
        let t = [(1, 1, 2.0), (0, 1, -0.5), (0, 0, 3.0), (1, 0, 0.25)];
        let m = CsrMatrix::from_triplets(2, &t).unwrap();
        let back: Vec<_> = m.triplets().collect();
        assert_eq!(back, vec![(0, 1, -0.5), (0, 0, 3.0), (1, 1, 2.0), (1, 0, 0.25)]);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![2.0, 4.25]);
        let mt = m.transpose();
        assert_eq!(mt.mul_vec(&[1.0, 2.0]), vec![3.5, -0.5 + 4.0]);
        assert_eq!(m.diag(0), 3.0);
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 1.0)]).is_err());
        assert!(CsrMatrix::from_triplets(1, &[(0, 0, 0.0)]).is_err());
        assert!(CsrMatrix::from_triplets(1, &[(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(CsrMatrix::from_triplets(1, &[(0, 3, 1.0)]).is_err());
        assert!(CsrMatrix::from_triplets(1, &[(0, 0, f64::NAN)]).is_err());
    }
}
