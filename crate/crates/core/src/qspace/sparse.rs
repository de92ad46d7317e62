//! Square compressed-sparse-row matrices over `Complex64`.
//!
//! Row pointers plus sorted column indices; explicit zeros are never stored.
//! Every H, L and superoperator in the crate is carried by this type.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::QspaceError;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let triplets = diag.iter().enumerate().map(|(i, &v)| (i, i, v));
        Self::from_triplets(diag.len(), triplets)
    }

    /// `|row⟩⟨col|` on a `dim`-dimensional factor.
    pub fn ketbra(dim: usize, row: usize, col: usize) -> Self {
        Self::from_triplets(dim, [(row, col, C64::new(1.0, 0.0))])
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    ///
    /// Panics if an index is out of range; triplets are always produced by
    /// crate code that knows the dimension.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dim {dim}");
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut acc = C64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == c {
                    acc += row[k].1;
                    k += 1;
                }
                if acc != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(acc);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            dim,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self, QspaceError> {
        if m.nrows() != m.ncols() {
            return Err(QspaceError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    trip.push((i, j, v));
                }
            }
        }
        Ok(Self::from_triplets(n, trip))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn dagger(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj()));
        Self::from_triplets(self.dim, trip)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.dim);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_dim(&self, other: &Self) -> Result<(), QspaceError> {
        if self.dim != other.dim {
            return Err(QspaceError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, QspaceError> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.triplets().chain(other.triplets()),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, QspaceError> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.triplets()
                .chain(other.triplets().map(|(r, c, v)| (r, c, -v))),
        ))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self, QspaceError> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut touched = vec![false; n];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..n {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(acc[c]);
                }
                acc[c] = C64::new(0.0, 0.0);
                touched[c] = false;
            }
            cols.clear();
            indptr.push(indices.len());
        }
        Ok(Self {
            dim: n,
            indptr,
            indices,
            values,
        })
    }

    /// `out = self · x`.
    pub fn matvec_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.indptr[r]..self.indptr[r + 1];
            let mut s = C64::new(0.0, 0.0);
            for (c, v) in self.indices[span.clone()].iter().zip(&self.values[span]) {
                s += v * x[*c];
            }
            *o = s;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>, QspaceError> {
        if x.len() != self.dim {
            return Err(QspaceError::DimMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, QspaceError> {
        Ok(self
            .sub(other)?
            .values
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.norm())))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.dagger()).expect("same dim")
    }

    /// Principal submatrix on the given (sorted, distinct) basis indices.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let trip = keep.iter().enumerate().flat_map(|(new_r, &old_r)| {
            let map = &map;
            self.row(old_r).filter_map(move |(c, v)| {
                let nc = map[c];
                (nc != usize::MAX).then_some((new_r, nc, v))
            })
        });
        Self::from_triplets(keep.len(), trip.collect::<Vec<_>>())
    }
}

/// Kronecker product: entry `(i1·db + i2, j1·db + j2) = a[i1,j1] · b[i2,j2]`.
pub fn kron(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    let db = b.dim;
    let mut trip = Vec::with_capacity(a.nnz() * b.nnz());
    for (i1, j1, va) in a.triplets() {
        for (i2, j2, vb) in b.triplets() {
            trip.push((i1 * db + i2, j1 * db + j2, va * vb));
        }
    }
    SparseOperator::from_triplets(a.dim * db, trip)
}

/// Truncated annihilation operator with `(n−1, n) = √n`.
pub fn destroy(dim: usize) -> Result<SparseOperator, QspaceError> {
    if dim < 2 {
        return Err(QspaceError::FockDimTooSmall(dim));
    }
    let trip = (1..dim).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)));
    Ok(SparseOperator::from_triplets(dim, trip))
}
