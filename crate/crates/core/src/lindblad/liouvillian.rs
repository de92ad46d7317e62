use crate::qspace::{kron, SparseOperator, C64};

use super::LindbladError;

/// Superoperator on column-stacked ρ, vec(AρB) = (Bᵀ⊗A)vec(ρ).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    hilbert_dim: usize,
    sup: SparseOperator,
}

/// H_nh = H − (i/2) Σ L†L.
pub fn no_jump(h: &SparseOperator, ls: &[SparseOperator]) -> Result<SparseOperator, LindbladError> {
    let mut decay = SparseOperator::zeros(h.dim());
    for l in ls {
        decay = decay.add(&l.dagger().mul(l)?)?;
    }
    Ok(h.sub(&decay.scale(C64::new(0.0, 0.5)))?)
}

/// 𝓛ρ = −i[H, ρ] + Σ_j (L_j ρ L_j† − ½{L_j†L_j, ρ}).
///
/// Assembled as I⊗(−iH_nh) + conj(H_nh)⊗(iI) + Σ_j conj(L_j)⊗L_j.
pub fn build_liouvillian(h: &SparseOperator, ls: &[SparseOperator]) -> Result<Liouvillian, LindbladError> {
    let d = h.dim();
    for l in ls {
        if l.dim() != d {
            return Err(LindbladError::DimMismatch { expected: d, got: l.dim() });
        }
    }
    if h.hermiticity_error() > 1e-10 * (1.0 + h.max_abs()) {
        return Err(LindbladError::NonHermitian(h.hermiticity_error()));
    }
    let hnh = no_jump(h, ls)?;
    let eye = SparseOperator::identity(d);
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    let minus_i = C64::new(0.0, -1.0);
    trip.extend(kron(&eye, &hnh.scale(minus_i)).triplets());
    trip.extend(kron(&hnh.conj(), &eye.scale(C64::new(0.0, 1.0))).triplets());
    for l in ls {
        trip.extend(kron(&l.conj(), l).triplets());
    }
    Ok(Liouvillian {
        hilbert_dim: d,
        sup: SparseOperator::from_triplets(d * d, trip),
    })
}

impl Liouvillian {
    #[cfg(test)]
    pub(crate) fn from_parts_for_test(hilbert_dim: usize, sup: SparseOperator) -> Self {
        Self { hilbert_dim, sup }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn dim(&self) -> usize {
        self.sup.dim()
    }

    pub fn superoperator(&self) -> &SparseOperator {
        &self.sup
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        self.sup.matvec_into(v, out);
    }

    /// max_j |⟨vec(I)|𝓛|j⟩|; zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.hilbert_dim;
        let mut cols = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..d {
            for (c, v) in self.sup.row(i + i * d) {
                cols[c] += v;
            }
        }
        cols.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense_kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        let (ra, ca) = a.shape();
        let (rb, cb) = b.shape();
        DMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
    }

    /// Dense oracle from the commutator/anticommutator form term by term.
    fn dense_superop(h: &DMatrix<C64>, ls: &[DMatrix<C64>]) -> DMatrix<C64> {
        let d = h.nrows();
        let eye = DMatrix::<C64>::identity(d, d);
        let i = C64::new(0.0, 1.0);
        let mut s = (dense_kron(&eye, h) - dense_kron(&h.transpose(), &eye)) * (-i);
        for l in ls {
            let ldl = l.adjoint() * l;
            s += dense_kron(&l.conjugate(), l);
            s -= dense_kron(&eye, &ldl) * C64::new(0.5, 0.0);
            s -= dense_kron(&ldl.transpose(), &eye) * C64::new(0.5, 0.0);
        }
        s
    }

    fn toy() -> (SparseOperator, Vec<SparseOperator>) {
        let h = SparseOperator::from_triplets(
            6,
            [
                (0, 0, C64::new(0.3, 0.0)),
                (1, 1, C64::new(-1.2, 0.0)),
                (0, 1, C64::new(0.5, 0.2)),
                (1, 0, C64::new(0.5, -0.2)),
                (2, 5, C64::new(0.0, 0.7)),
                (5, 2, C64::new(0.0, -0.7)),
                (4, 4, C64::new(2.0, 0.0)),
            ],
        );
        let l1 = SparseOperator::from_triplets(6, [(0, 3, C64::new(0.4, 0.0)), (1, 2, C64::new(0.0, 0.3))]);
        let l2 = SparseOperator::from_triplets(6, [(5, 4, C64::new(1.1, 0.0))]);
        (h, vec![l1, l2])
    }

    #[test]
    fn matches_dense_superoperator_oracle() {
        let (h, ls) = toy();
        let liou = build_liouvillian(&h, &ls).unwrap();
        let dense_ls: Vec<_> = ls.iter().map(|l| l.to_dense()).collect();
        let oracle = dense_superop(&h.to_dense(), &dense_ls);
        assert!((liou.superoperator().to_dense() - oracle).norm() < 1e-13);
        assert!(liou.trace_defect() < 1e-14);
    }

    #[test]
    fn rejects_mismatch_and_non_hermitian() {
        let (h, _) = toy();
        assert!(build_liouvillian(&h, &[SparseOperator::identity(2)]).is_err());
        let bad = SparseOperator::from_triplets(2, [(0, 1, C64::new(1.0, 0.0))]);
        assert!(matches!(build_liouvillian(&bad, &[]), Err(LindbladError::NonHermitian(_))));
    }
}
