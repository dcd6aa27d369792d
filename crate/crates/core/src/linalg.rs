//! Banded LU factorization used for the per-step Newmark solve.
//!
//! The nonlocal stiffness couples each particle to at most `2m` neighbours on
//! either side (mirrored ghosts fold back inside that band), so the effective
//! mass matrix `St·I + φ₂ΔT²·K` is banded. No pivoting is performed; the
//! matrices factored here are diagonally dominant or close to symmetric
//! positive definite, and a vanishing pivot is reported as singular.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    upper: usize,
    /// Row-major band storage, `lower + upper + 1` entries per row.
    data: Vec<f64>,
}

impl BandedLu {
    /// Factors the band `[i − lower, i + upper]` of a dense matrix.
    pub fn factor(a: &DMatrix<f64>, lower: usize, upper: usize) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "banded LU needs a square matrix");
        let width = lower + upper + 1;
        let mut data = vec![0.0; n * width];
        for i in 0..n {
            let lo = i.saturating_sub(lower);
            let hi = (i + upper + 1).min(n);
            for j in lo..hi {
                data[i * width + j + lower - i] = a[(i, j)];
            }
        }
        let mut lu = Self {
            n,
            lower,
            upper,
            data,
        };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.lower + self.upper + 1) + j + self.lower - i
    }

    fn eliminate(&mut self) -> Result<()> {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..self.n {
            let pivot = self.data[self.idx(k, k)];
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(Error::Singular(format!(
                    "zero pivot at row {k} of the effective mass matrix"
                )));
            }
            let row_end = (k + self.lower + 1).min(self.n);
            let col_end = (k + self.upper + 1).min(self.n);
            for i in k + 1..row_end {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..col_end {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.lower);
            let mut s = b[i];
            for (j, bj) in b.iter().enumerate().take(i).skip(lo) {
                s -= self.data[self.idx(i, j)] * bj;
            }
            b[i] = s;
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.upper + 1).min(self.n);
            let mut s = b[i];
            for (j, bj) in b.iter().enumerate().take(hi).skip(i + 1) {
                s -= self.data[self.idx(i, j)] * bj;
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
    }
}

/// Lower and upper bandwidths of the nonzero pattern of `a`.
pub fn bandwidths(a: &DMatrix<f64>) -> (usize, usize) {
    let mut lower = 0;
    let mut upper = 0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
    }
    (lower, upper)
}
