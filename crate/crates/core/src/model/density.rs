use nalgebra::DMatrix;

use crate::qspace::{SparseOperator, C64};

use super::ModelError;

/// Dense density matrix. Column-major storage doubles as vec(ρ).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self, ModelError> {
        if m.nrows() != m.ncols() {
            return Err(ModelError::NotSquare);
        }
        Ok(Self { m })
    }

    pub fn pure(psi: &[C64]) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self {
            m: &v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    /// Rebuilds from a column-stacked vector of length dim².
    pub fn from_vec(dim: usize, v: &[C64]) -> Result<Self, ModelError> {
        if v.len() != dim * dim {
            return Err(ModelError::NotSquare);
        }
        Ok(Self {
            m: DMatrix::from_column_slice(dim, dim, v),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn as_vec(&self) -> &[C64] {
        self.m.as_slice()
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.m)
    }

    pub fn symmetrize(&mut self) {
        symmetrize(&mut self.m);
    }

    pub fn population(&self, i: usize) -> f64 {
        self.m[(i, i)].re
    }

    /// Tr(Aρ) for a sparse observable.
    pub fn expectation(&self, op: &SparseOperator) -> C64 {
        op.triplets().map(|(r, c, v)| v * self.m[(c, r)]).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mut h = self.m.clone();
        symmetrize(&mut h);
        h.symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn overlap(&self, psi: &[C64]) -> Result<f64, ModelError> {
        if psi.len() != self.dim() {
            return Err(ModelError::DimMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        Ok((v.adjoint() * &self.m * &v)[(0, 0)].re)
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut e = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            e = e.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    e
}

pub(crate) fn symmetrize(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
}

/// Symmetrizes a column-stacked dim×dim matrix in place.
pub(crate) fn symmetrize_vec(dim: usize, v: &mut [C64]) {
    for j in 0..dim {
        for i in 0..j {
            let a = v[i + j * dim];
            let b = v[j + i * dim];
            let avg = (a + b.conj()) * 0.5;
            v[i + j * dim] = avg;
            v[j + i * dim] = avg.conj();
        }
        v[j + j * dim].im = 0.0;
    }
}
