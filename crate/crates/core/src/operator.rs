//! Real-symmetric sparse operators in the constrained basis.
//!
//! Storage is a diagonal vector plus CSR for the off-diagonal part with
//! both (r,c) and (c,r) kept, so a matrix-vector product is one forward
//! pass. All Hamiltonians and observables in this crate are real symmetric.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Row-parallel matvec only pays off for large dimensions.
const PAR_MATVEC_MIN_DIM: usize = 1 << 14;

#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

/// Accumulates symmetric triplets, then builds CSR.
pub struct OperatorBuilder {
    dim: usize,
    diag: Vec<f64>,
    triplets: Vec<(u32, u32, f64)>,
}

impl OperatorBuilder {
    pub fn new(dim: usize) -> Self {
        OperatorBuilder {
            dim,
            diag: vec![0.0; dim],
            triplets: Vec::new(),
        }
    }

    #[inline]
    pub fn add_diagonal(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Add v to (r,c) and (c,r); r == c goes to the diagonal once.
    #[inline]
    pub fn add_symmetric(&mut self, r: usize, c: usize, v: f64) {
        if r == c {
            self.diag[r] += v;
        } else {
            self.triplets.push((r as u32, c as u32, v));
            self.triplets.push((c as u32, r as u32, v));
        }
    }

    pub fn build(mut self) -> SparseOperator {
        self.triplets
            .sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col: Vec<u32> = Vec::with_capacity(self.triplets.len());
        let mut val: Vec<f64> = Vec::with_capacity(self.triplets.len());
        // Single pass: rows arrive in order; merge equal (r,c) runs.
        let mut current_row = 0usize;
        for &(r, c, v) in &self.triplets {
            let r = r as usize;
            while current_row < r {
                current_row += 1;
                row_ptr[current_row] = col.len();
            }
            if col.len() > row_ptr[current_row] && *col.last().unwrap() == c {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
            }
        }
        while current_row < self.dim {
            current_row += 1;
            row_ptr[current_row] = col.len();
        }
        SparseOperator {
            dim: self.dim,
            diag: self.diag,
            row_ptr,
            col,
            val,
        }
    }
}

impl SparseOperator {
    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        let dim = diag.len();
        SparseOperator {
            dim,
            diag,
            row_ptr: vec![0; dim + 1],
            col: Vec::new(),
            val: Vec::new(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_diagonal(vec![0.0; dim])
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Off-diagonal stored entries (both orientations counted).
    pub fn off_diagonal_nnz(&self) -> usize {
        self.val.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn is_diagonal(&self) -> bool {
        self.val.is_empty()
    }

    /// y = A·x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let row_task = |r: usize, y_r: &mut f64| {
            let mut acc = self.diag[r] * x[r];
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            for k in lo..hi {
                acc += self.val[k] * x[self.col[k] as usize];
            }
            *y_r = acc;
        };
        if self.dim >= PAR_MATVEC_MIN_DIM {
            y.par_iter_mut().enumerate().for_each(|(r, y_r)| row_task(r, y_r));
        } else {
            for (r, y_r) in y.iter_mut().enumerate() {
                row_task(r, y_r);
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// y = A·x for complex x (A stays real).
    pub fn matvec_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let row_task = |r: usize, y_r: &mut Complex64| {
            let mut acc = x[r] * self.diag[r];
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            for k in lo..hi {
                acc += x[self.col[k] as usize] * self.val[k];
            }
            *y_r = acc;
        };
        if self.dim >= PAR_MATVEC_MIN_DIM {
            y.par_iter_mut().enumerate().for_each(|(r, y_r)| row_task(r, y_r));
        } else {
            for (r, y_r) in y.iter_mut().enumerate() {
                row_task(r, y_r);
            }
        }
    }

    /// ⟨x|A|x⟩ for a real vector.
    pub fn expectation(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            let mut row = self.diag[r] * x[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.val[k] * x[self.col[k] as usize];
            }
            acc += x[r] * row;
        }
        acc
    }

    /// ⟨x|A|x⟩ for a complex vector (real by symmetry).
    pub fn expectation_complex(&self, x: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            let mut row = x[r] * self.diag[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += x[self.col[k] as usize] * self.val[k];
            }
            acc += (x[r].conj() * row).re;
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            m[(r, r)] = self.diag[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col[k] as usize)] += self.val[k];
            }
        }
        m
    }

    /// Exact symmetry check (used by tests; storage is symmetric by
    /// construction, this guards the builders).
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[k] as usize;
                let lo = self.row_ptr[c];
                let hi = self.row_ptr[c + 1];
                let back = self.col[lo..hi]
                    .binary_search(&(r as u32))
                    .map(|p| self.val[lo + p])
                    .unwrap_or(0.0);
                worst = worst.max((self.val[k] - back).abs());
            }
        }
        worst
    }

    /// Largest row sum of |entries|, a cheap upper bound on the spectral
    /// norm (used to scale tolerances).
    pub fn norm_bound(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            let mut acc = self.diag[r].abs();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.val[k].abs();
            }
            worst = worst.max(acc);
        }
        worst
    }

    /// A + s·diag(w) with w a per-basis-state diagonal.
    pub fn with_added_diagonal(&self, w: &[f64], s: f64) -> Result<SparseOperator> {
        if w.len() != self.dim {
            return Err(Error::validation("diagonal length mismatch"));
        }
        let mut out = self.clone();
        for (d, &wi) in out.diag.iter_mut().zip(w) {
            *d += s * wi;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SparseOperator {
        let mut b = OperatorBuilder::new(3);
        b.add_diagonal(0, 1.0);
        b.add_diagonal(2, -2.0);
        b.add_symmetric(0, 1, 0.5);
        b.add_symmetric(1, 2, 0.25);
        b.add_symmetric(0, 1, 0.5); // duplicate merges
        b.build()
    }

    #[test]
    fn builds_symmetric_csr() {
        let a = toy();
        assert_eq!(a.symmetry_defect(), 0.0);
        let d = a.to_dense();
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], 1.0);
        assert_eq!(d[(1, 2)], 0.25);
        assert_eq!(d[(0, 0)], 1.0);
        assert_eq!(d[(2, 2)], -2.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = toy();
        let d = a.to_dense();
        let x = vec![0.3, -1.2, 2.0];
        let y = a.apply(&x);
        for r in 0..3 {
            let want: f64 = (0..3).map(|c| d[(r, c)] * x[c]).sum();
            assert!((y[r] - want).abs() < 1e-15);
        }
        let expect = a.expectation(&x);
        let want: f64 = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .map(|(r, c)| x[r] * d[(r, c)] * x[c])
            .sum();
        assert!((expect - want).abs() < 1e-14);
    }

    #[test]
    fn complex_matvec_consistent() {
        let a = toy();
        let x = vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-1.2, 0.4),
            Complex64::new(2.0, -0.9),
        ];
        let mut y = vec![Complex64::new(0.0, 0.0); 3];
        a.matvec_complex(&x, &mut y);
        let re: Vec<f64> = x.iter().map(|z| z.re).collect();
        let im: Vec<f64> = x.iter().map(|z| z.im).collect();
        let yre = a.apply(&re);
        let yim = a.apply(&im);
        for r in 0..3 {
            assert!((y[r].re - yre[r]).abs() < 1e-15);
            assert!((y[r].im - yim[r]).abs() < 1e-15);
        }
    }
}
