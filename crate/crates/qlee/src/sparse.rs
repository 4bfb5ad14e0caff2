//! Minimal complex sparse matrices in sorted coordinate form.
//!
//! The generators this library manipulates (shift/difference operators,
//! obstacle corrections, the flow generator) have a handful of entries per
//! row, and tests need exact, reproducible entry lists. A sorted, merged,
//! zero-pruned coordinate representation keeps all of that trivially
//! inspectable; no general-purpose sparse library guarantees the exact entry
//! ordering the text export freezes.

use num_complex::Complex64;

use crate::dense::DenseOperator;
use crate::error::{Error, Result};

/// Guard for materializing a sparse operator as a dense matrix.
pub const DENSE_DIM_GUARD: usize = 1 << 14;

/// Square sparse matrix over `Complex64`.
///
/// Entries are sorted by `(row, col)`, duplicates merged, exact zeros
/// dropped. Those invariants hold for every constructor and operation.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    /// The `dim x dim` zero matrix.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// The `dim x dim` identity.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim)
                .map(|i| (i, i, Complex64::new(1.0, 0.0)))
                .collect(),
        }
    }

    /// Build from an arbitrary entry list; sorts, merges duplicates by
    /// summation and drops entries that end up exactly zero.
    pub fn from_entries(dim: usize, raw: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        for &(r, c, _) in &raw {
            if r >= dim {
                return Err(Error::IndexOutOfRange { index: r, dim });
            }
            if c >= dim {
                return Err(Error::IndexOutOfRange { index: c, dim });
            }
        }
        let mut raw = raw;
        raw.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::with_capacity(raw.len());
        for (r, c, v) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 != Complex64::new(0.0, 0.0));
        Ok(Self { dim, entries })
    }

    /// Real-valued convenience constructor.
    pub fn from_real_entries(dim: usize, raw: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::from_entries(
            dim,
            raw.into_iter()
                .map(|(r, c, v)| (r, c, Complex64::new(v, 0.0)))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    /// Sorted `(row, col, value)` triples.
    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    /// Entry lookup (zero when absent).
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match self
            .entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
        {
            Ok(i) => self.entries[i].2,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut entries = self.entries.clone();
        for e in &mut entries {
            e.2 *= factor;
        }
        entries.retain(|e| e.2 != Complex64::new(0.0, 0.0));
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        // Merge two sorted runs.
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() || j < other.entries.len() {
            let take_left = match (self.entries.get(i), other.entries.get(j)) {
                (Some(a), Some(b)) => (a.0, a.1) <= (b.0, b.1),
                (Some(_), None) => true,
                (None, _) => false,
            };
            if take_left {
                let a = self.entries[i];
                if j < other.entries.len() {
                    let b = other.entries[j];
                    if (a.0, a.1) == (b.0, b.1) {
                        let v = a.2 + b.2;
                        if v != Complex64::new(0.0, 0.0) {
                            entries.push((a.0, a.1, v));
                        }
                        i += 1;
                        j += 1;
                        continue;
                    }
                }
                entries.push(a);
                i += 1;
            } else {
                entries.push(other.entries[j]);
                j += 1;
            }
        }
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_re(-1.0))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        // Row pointer for `other` (entries are row-major sorted).
        let mut row_start = vec![0usize; other.dim + 1];
        {
            let mut k = 0;
            for r in 0..other.dim {
                while k < other.entries.len() && other.entries[k].0 == r {
                    k += 1;
                }
                row_start[r + 1] = k;
            }
        }
        let mut raw = Vec::new();
        for &(r, c, v) in &self.entries {
            for &(_, c2, v2) in &other.entries[row_start[c]..row_start[c + 1]] {
                raw.push((r, c2, v * v2));
            }
        }
        Self::from_entries(self.dim, raw)
    }

    /// Kronecker product; the right factor indexes the less significant bits.
    pub fn kron(&self, other: &Self) -> Self {
        let dim = self.dim * other.dim;
        let mut raw = Vec::with_capacity(self.entries.len() * other.entries.len());
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                raw.push((r1 * other.dim + r2, c1 * other.dim + c2, v1 * v2));
            }
        }
        Self::from_entries(dim, raw).expect("kron indices are in range by construction")
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, val) in &self.entries {
            out[r] += val * v[c];
        }
        Ok(out)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut col_sums = vec![0.0f64; self.dim];
        for &(_, c, v) in &self.entries {
            col_sums[c] += v.norm();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let mut row_sums = vec![0.0f64; self.dim];
        for &(r, _, v) in &self.entries {
            row_sums[r] += v.norm();
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        if self.dim > DENSE_DIM_GUARD {
            return Err(Error::GuardExceeded {
                what: "dense materialization",
                limit: DENSE_DIM_GUARD,
                requested: self.dim,
            });
        }
        let mut m = DenseOperator::zeros(self.dim);
        for &(r, c, v) in &self.entries {
            m.set(r, c, v);
        }
        Ok(m)
    }

    /// Frozen text export: one `row col re im` line per stored entry, in the
    /// sorted entry order. Floats use Rust's shortest round-trip formatting.
    pub fn export_text(&self) -> String {
        let mut s = String::new();
        for &(r, c, v) in &self.entries {
            s.push_str(&format!("{} {} {} {}\n", r, c, v.re, v.im));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn from_entries_sorts_merges_and_prunes() {
        let m = SparseOperator::from_entries(
            3,
            vec![
                (2, 1, c(1.0, 0.0)),
                (0, 0, c(2.0, 0.0)),
                (2, 1, c(-1.0, 0.0)), // cancels to exact zero
                (0, 2, c(0.5, -0.5)),
            ],
        )
        .unwrap();
        assert_eq!(m.entries(), &[(0, 0, c(2.0, 0.0)), (0, 2, c(0.5, -0.5))]);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let err = SparseOperator::from_real_entries(2, vec![(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 2, dim: 2 }));
    }

    #[test]
    fn add_sub_roundtrip() {
        let a = SparseOperator::from_real_entries(2, vec![(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        let b = SparseOperator::from_real_entries(2, vec![(0, 1, 0.5), (1, 1, 2.0)]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.get(0, 1), c(1.5, 0.0));
        let back = s.sub(&b).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn matmul_matches_hand_product() {
        // [[0,1],[0,0]] * [[0,0],[1,0]] = [[1,0],[0,0]]
        let up = SparseOperator::from_real_entries(2, vec![(0, 1, 1.0)]).unwrap();
        let dn = SparseOperator::from_real_entries(2, vec![(1, 0, 1.0)]).unwrap();
        let p = up.matmul(&dn).unwrap();
        assert_eq!(p.entries(), &[(0, 0, c(1.0, 0.0))]);
    }

    #[test]
    fn kron_block_structure() {
        let a = SparseOperator::from_real_entries(2, vec![(0, 1, 2.0)]).unwrap();
        let id = SparseOperator::identity(2);
        let k = a.kron(&id);
        assert_eq!(k.dim(), 4);
        assert_eq!(k.get(0, 2), c(2.0, 0.0));
        assert_eq!(k.get(1, 3), c(2.0, 0.0));
        assert_eq!(k.get(0, 3), c(0.0, 0.0));
    }

    #[test]
    fn adjoint_conjugates() {
        let a = SparseOperator::from_entries(2, vec![(0, 1, c(0.0, 1.0))]).unwrap();
        let ad = a.adjoint();
        assert_eq!(ad.get(1, 0), c(0.0, -1.0));
    }

    #[test]
    fn norms() {
        let a =
            SparseOperator::from_real_entries(2, vec![(0, 0, 3.0), (1, 0, -4.0), (0, 1, 1.0)])
                .unwrap();
        assert_eq!(a.one_norm(), 7.0);
        assert_eq!(a.inf_norm(), 4.0);
        assert_eq!(a.max_abs_entry(), 4.0);
    }

    #[test]
    fn export_text_is_sorted_rowmajor() {
        let a = SparseOperator::from_real_entries(2, vec![(1, 0, -0.5), (0, 1, 1.0)]).unwrap();
        assert_eq!(a.export_text(), "0 1 1 0\n1 0 -0.5 0\n");
    }
}
