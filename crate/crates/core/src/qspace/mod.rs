//! Tensor-product bookkeeping for quartit ⊗ qutrits ⊗ mode₊ ⊗ mode₋.

mod sparse;

pub use sparse::{destroy, kron, SparseOperator, C64};

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QspaceError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("Fock dimension {0} too small, need at least 2")]
    FockDimTooSmall(usize),
    #[error("n_max must be at least 1, got {0}")]
    NMaxTooSmall(usize),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },
    #[error("basis index {index} out of range for dimension {dim}")]
    BasisOutOfRange { index: usize, dim: usize },
}

/// Quartit basis labels in storage order.
pub mod quartit {
    pub const G1: usize = 0;
    pub const G2: usize = 1;
    pub const E1: usize = 2;
    pub const E2: usize = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Quartit,
    Qutrit(usize),
    ModePlus,
    ModeMinus,
}

/// Ordered factor list: quartit, qutrits `1..=N`, mode₊, mode₋.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    n_qutrits: usize,
    n_max: usize,
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(n_qutrits: usize, n_max: usize) -> Result<Self, QspaceError> {
        if n_max < 1 {
            return Err(QspaceError::NMaxTooSmall(n_max));
        }
        let mut dims = Vec::with_capacity(n_qutrits + 3);
        dims.push(4);
        dims.extend(std::iter::repeat_n(3, n_qutrits));
        dims.push(n_max + 1);
        dims.push(n_max + 1);
        Ok(Self {
            n_qutrits,
            n_max,
            dims,
        })
    }

    pub fn n_qutrits(&self) -> usize {
        self.n_qutrits
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn subsystems(&self) -> Vec<Subsystem> {
        let mut out = vec![Subsystem::Quartit];
        out.extend((0..self.n_qutrits).map(Subsystem::Qutrit));
        out.push(Subsystem::ModePlus);
        out.push(Subsystem::ModeMinus);
        out
    }

    /// Factor position; qutrits are numbered from 0 here.
    pub fn index_of(&self, s: Subsystem) -> usize {
        match s {
            Subsystem::Quartit => 0,
            Subsystem::Qutrit(k) => 1 + k,
            Subsystem::ModePlus => 1 + self.n_qutrits,
            Subsystem::ModeMinus => 2 + self.n_qutrits,
        }
    }

    pub fn mode_plus(&self) -> usize {
        self.index_of(Subsystem::ModePlus)
    }

    pub fn mode_minus(&self) -> usize {
        self.index_of(Subsystem::ModeMinus)
    }

    /// Per-factor labels of a flat basis index (last factor fastest).
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (d, &dim) in digits.iter_mut().zip(&self.dims).rev() {
            *d = index % dim;
            index /= dim;
        }
        digits
    }

    pub fn encode(&self, digits: &[usize]) -> Result<usize, QspaceError> {
        if digits.len() != self.dims.len() {
            return Err(QspaceError::DimMismatch {
                left: self.dims.len(),
                right: digits.len(),
            });
        }
        let mut idx = 0;
        for (&d, &dim) in digits.iter().zip(&self.dims) {
            if d >= dim {
                return Err(QspaceError::BasisOutOfRange { index: d, dim });
            }
            idx = idx * dim + d;
        }
        Ok(idx)
    }

    /// Embeds a single-factor operator with identities on every other factor.
    pub fn lift(&self, index: usize, local: &SparseOperator) -> Result<SparseOperator, QspaceError> {
        let count = self.dims.len();
        if index >= count {
            return Err(QspaceError::SubsystemOutOfRange { index, count });
        }
        if local.dim() != self.dims[index] {
            return Err(QspaceError::DimMismatch {
                left: self.dims[index],
                right: local.dim(),
            });
        }
        let left: usize = self.dims[..index].iter().product();
        let right: usize = self.dims[index + 1..].iter().product();
        let inner = kron(local, &SparseOperator::identity(right));
        Ok(kron(&SparseOperator::identity(left), &inner))
    }
}

/// A coordinate subspace spanned by a subset of the product basis.
///
/// Used to evolve exactly inside the set of basis states that the
/// dynamics can ever populate from a given initial support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSubspace {
    full_dim: usize,
    indices: Vec<usize>,
}

impl BasisSubspace {
    pub fn full(dim: usize) -> Self {
        Self {
            full_dim: dim,
            indices: (0..dim).collect(),
        }
    }

    /// Smallest coordinate set containing `seeds` and closed under the
    /// column maps of every operator: if `j` is in the set and
    /// `op[i, j] ≠ 0` then `i` is too.
    ///
    /// For a Lindblad generator the pair (H − i/2 ΣL†L, {L}) suffices:
    /// ρ stays supported on S×S when every term maps S into S.
    pub fn reachable(dim: usize, seeds: &[usize], ops: &[&SparseOperator]) -> Self {
        let cols: Vec<SparseOperator> = ops.iter().map(|op| op.transpose()).collect();
        let mut set: BTreeSet<usize> = seeds.iter().copied().collect();
        let mut frontier: Vec<usize> = set.iter().copied().collect();
        while let Some(j) = frontier.pop() {
            for ct in &cols {
                for (i, _) in ct.row(j) {
                    if set.insert(i) {
                        frontier.push(i);
                    }
                }
            }
        }
        Self {
            full_dim: dim,
            indices: set.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn restrict(&self, op: &SparseOperator) -> SparseOperator {
        op.restrict(&self.indices)
    }

    pub fn restrict_vector(&self, v: &[C64]) -> Vec<C64> {
        self.indices.iter().map(|&i| v[i]).collect()
    }

    pub fn embed_vector(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.full_dim];
        for (&i, &x) in self.indices.iter().zip(v) {
            out[i] = x;
        }
        out
    }
}
