//! Compressed-sparse-row operators and a sparse direct solver backed by faer.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Unordered `(row, col, value)` entries; duplicates are summed on finalize.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Copies `op` scaled by `scale` into the block starting at `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, op: &SparseOperator, scale: f64) {
        for (i, j, v) in op.iter() {
            self.add(r0 + i, c0 + j, scale * v);
        }
    }

    /// Like [`add_block`](Self::add_block) with the transpose of `op`.
    pub fn add_block_transposed(&mut self, r0: usize, c0: usize, op: &SparseOperator, scale: f64) {
        for (i, j, v) in op.iter() {
            self.add(r0 + j, c0 + i, scale * v);
        }
    }

    /// Sorts and merges duplicates. The summation order depends only on the
    /// insertion order, so identical assembly loops give identical matrices.
    pub fn finalize(mut self) -> SparseOperator {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Immutable CSR matrix with sorted, duplicate-free rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).finalize()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::with_capacity(n, n, n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.finalize()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `Aᵀ x`
    pub fn matvec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for (r, c, v) in self.iter() {
            y[c] += v * x[r];
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.iter() {
            b.add(c, r, v);
        }
        b.finalize()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s·other`
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        assert_eq!(self.shape(), other.shape());
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        b.add_block(0, 0, self, 1.0);
        b.add_block(0, 0, other, s);
        b.finalize()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// Symmetric elimination of homogeneous constraints: rows and columns of
    /// masked indices are cleared and the diagonal set to one.
    pub fn eliminate(&self, mask: &[bool]) -> Self {
        assert_eq!(self.nrows, self.ncols);
        assert_eq!(mask.len(), self.nrows);
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.iter() {
            if !mask[r] && !mask[c] {
                b.add(r, c, v);
            }
        }
        for (i, &m) in mask.iter().enumerate() {
            if m {
                b.add(i, i, 1.0);
            }
        }
        b.finalize()
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Solver(format!("cannot build sparse matrix: {e:?}")))
    }
}

/// Sparse LU factorization of a square operator.
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Solver(format!(
                "cannot factor a {}x{} matrix",
                a.nrows, a.ncols
            )));
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("matrix has non-finite entries".into()));
        }
        let lu = a
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(Self { n: a.nrows, lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Solver(format!(
                "rhs has length {}, expected {}",
                b.len(),
                self.n
            )));
        }
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(
                "solution is not finite (singular system?)".into(),
            ));
        }
        Ok(x)
    }
}

/// `‖A x − b‖₂ / max(‖b‖₂, tiny)`
pub fn relative_residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    r / nb.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_merged() {
        let mut b = TripletBuilder::new(2, 3);
        b.add(1, 2, 1.5);
        b.add(0, 0, 1.0);
        b.add(1, 2, 0.5);
        let a = b.finalize();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 2), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 2.0]), vec![1.0, 4.0]);
        assert_eq!(a.transpose().get(2, 1), 2.0);
        assert_eq!(a.matvec_transposed(&[1.0, 1.0]), vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn lu_solves_small_system() {
        let mut b = TripletBuilder::new(2, 2);
        b.add(0, 0, 2.0);
        b.add(0, 1, 1.0);
        b.add(1, 0, 5.0);
        b.add(1, 1, 7.0);
        let a = b.finalize();
        let x = SparseLu::factor(&a).unwrap().solve(&[11.0, 13.0]).unwrap();
        assert!((x[0] - 64.0 / 9.0).abs() < 1e-12);
        assert!((x[1] + 29.0 / 9.0).abs() < 1e-12);
        assert!(relative_residual(&a, &x, &[11.0, 13.0]) < 1e-14);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut b = TripletBuilder::new(2, 2);
        b.add(0, 0, 1.0);
        b.add(1, 0, 1.0);
        let a = b.finalize();
        let res = SparseLu::factor(&a).and_then(|lu| lu.solve(&[1.0, 1.0]));
        assert!(res.is_err());
    }

    #[test]
    fn elimination_keeps_symmetry() {
        let mut b = TripletBuilder::new(3, 3);
        for (i, j, v) in [(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)] {
            b.add(i, j, v);
        }
        let a = b.finalize().eliminate(&[false, true, false]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.get(1, 1), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(2, 1), 0.0);
    }
}
