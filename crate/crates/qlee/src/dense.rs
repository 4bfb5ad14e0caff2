//! Dense square complex matrices, just large enough for the oracle work:
//! products, norms, and the matrix exponential inputs. Row-major storage.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_sparse(s: &SparseOperator) -> Result<Self> {
        s.to_dense()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Write `v` as column `col`; used when assembling a unitary column by
    /// column from basis-state evolutions.
    pub fn set_column(&mut self, col: usize, v: &[Complex64]) {
        debug_assert_eq!(v.len(), self.dim);
        for (r, &x) in v.iter().enumerate() {
            self.set(r, col, x);
        }
    }

    pub fn scale(&self, f: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Matrix product, i-k-j loop order so the inner loop walks both operands
    /// contiguously.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row_b = &other.data[k * n..(k + 1) * n];
                let row_o = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in row_o.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let n = self.dim;
        let out = self
            .data
            .chunks_exact(n)
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(Complex64::new(0.0, 0.0), |acc, (&a, &x)| acc + a * x)
            })
            .collect();
        Ok(out)
    }

    /// `self.adjoint() * v` without materializing the adjoint.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (row, &vi) in self.data.chunks_exact(n).zip(v) {
            if vi == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a.conj() * vi;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let n = self.dim;
        let mut sums = vec![0.0f64; n];
        for row in self.data.chunks_exact(n) {
            for (s, a) in sums.iter_mut().zip(row) {
                *s += a.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_identity() {
        let mut a = DenseOperator::zeros(2);
        a.set(0, 1, c(2.0, 1.0));
        a.set(1, 0, c(-1.0, 0.0));
        let id = DenseOperator::identity(2);
        assert_eq!(a.matmul(&id).unwrap(), a);
        assert_eq!(id.matmul(&a).unwrap(), a);
    }

    #[test]
    fn adjoint_matvec_matches_explicit_adjoint() {
        let mut a = DenseOperator::zeros(2);
        a.set(0, 0, c(1.0, 2.0));
        a.set(0, 1, c(-0.5, 0.25));
        a.set(1, 1, c(0.0, -1.0));
        let v = vec![c(0.3, -0.7), c(1.5, 0.2)];
        let direct = a.adjoint().matvec(&v).unwrap();
        let fused = a.adjoint_matvec(&v).unwrap();
        for (x, y) in direct.iter().zip(&fused) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn one_norm_is_max_column_sum() {
        let mut a = DenseOperator::zeros(2);
        a.set(0, 0, c(3.0, 0.0));
        a.set(1, 0, c(0.0, 4.0));
        a.set(0, 1, c(1.0, 0.0));
        assert_eq!(a.one_norm(), 7.0);
    }
}
