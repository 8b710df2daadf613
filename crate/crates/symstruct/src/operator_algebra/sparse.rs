//! Compressed-sparse-row complex matrices.
//!
//! Joint system–environment Hamiltonians of the reference models have only a
//! handful of nonzeros per row, while the joint dimension reaches 2¹¹. Keeping
//! them in CSR form lets nested commutators run as sparse×dense products
//! instead of dense×dense ones.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{CMatrix, C64};
use crate::error::{Result, SymError};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_counts = vec![0usize; nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        // drop entries that cancelled to exactly zero
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        let mut pos = 0;
        for r in 0..nrows {
            let mut kept = 0;
            for _ in 0..row_counts[r] {
                if values[pos] != C64::new(0.0, 0.0) {
                    keep_idx.push(indices[pos]);
                    keep_val.push(values[pos]);
                    kept += 1;
                }
                pos += 1;
            }
            indptr[r + 1] = indptr[r] + kept;
        }
        SparseMatrix { nrows, ncols, indptr, indices: keep_idx, values: keep_val }
    }

    /// Converts a dense matrix, dropping entries with modulus ≤ `drop_tol`.
    pub fn from_dense(a: &CMatrix, drop_tol: f64) -> Self {
        let mut trip = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v.norm() > drop_tol {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), trip)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], values: vec![] }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|(c, _)| *c == j).map(|(_, v)| v).unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out.push((i, j, v));
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let trip = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().into_iter().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SymError::DimensionMismatch(format!(
                "sparse add {}x{} + {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut trip = self.triplets();
        trip.extend(other.triplets());
        Ok(Self::from_triplets(self.nrows, self.ncols, trip))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.triplets() {
            for (k, l, b) in other.triplets() {
                trip.push((i * other.nrows + k, j * other.ncols + l, a * b));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, trip)
    }

    pub fn mul_sparse(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(SymError::DimensionMismatch(format!(
                "sparse product {}x{} · {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut trip = Vec::new();
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut seen = vec![false; other.ncols];
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                trip.push((i, j, acc[j]));
                acc[j] = C64::new(0.0, 0.0);
                seen[j] = false;
            }
            touched.clear();
        }
        Ok(Self::from_triplets(self.nrows, other.ncols, trip))
    }

    /// Dense product `self · b`, parallel over the columns of `b`.
    pub fn mul_dense(&self, b: &CMatrix) -> Result<CMatrix> {
        if self.ncols != b.nrows() {
            return Err(SymError::DimensionMismatch(format!(
                "sparse·dense {}x{} · {}x{}",
                self.nrows,
                self.ncols,
                b.nrows(),
                b.ncols()
            )));
        }
        let mut out = CMatrix::zeros(self.nrows, b.ncols());
        let nr = self.nrows;
        let bs = b.as_slice();
        let bn = b.nrows();
        out.as_mut_slice().par_chunks_mut(nr.max(1)).enumerate().for_each(|(j, col)| {
            let bcol = &bs[j * bn..(j + 1) * bn];
            for (i, o) in col.iter_mut().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for p in self.indptr[i]..self.indptr[i + 1] {
                    s += self.values[p] * bcol[self.indices[p]];
                }
                *o = s;
            }
        });
        Ok(out)
    }

    /// Dense product `a · self`, parallel over the columns of the result.
    pub fn dense_mul(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.ncols() != self.nrows {
            return Err(SymError::DimensionMismatch(format!(
                "dense·sparse {}x{} · {}x{}",
                a.nrows(),
                a.ncols(),
                self.nrows,
                self.ncols
            )));
        }
        // rows of the transpose are the columns of self
        let t = self.transpose();
        let mut out = CMatrix::zeros(a.nrows(), self.ncols);
        let an = a.nrows();
        let asl = a.as_slice();
        out.as_mut_slice().par_chunks_mut(an.max(1)).enumerate().for_each(|(j, col)| {
            for (k, v) in t.row(j) {
                let acol = &asl[k * an..(k + 1) * an];
                for (o, x) in col.iter_mut().zip(acol) {
                    *o += v * x;
                }
            }
        });
        Ok(out)
    }

    /// `[self, y] = self·y − y·self`.
    pub fn commutator_dense(&self, y: &CMatrix) -> Result<CMatrix> {
        Ok(self.mul_dense(y)? - self.dense_mul(y)?)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).fold(C64::new(0.0, 0.0), |s, (j, v)| s + v * x[j]))
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†| over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.sub(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }
}
