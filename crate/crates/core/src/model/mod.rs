//! Rotating-frame Hamiltonian, jump operators, projectors and initial states.

mod density;
mod params;

pub use density::DensityMatrix;
pub(crate) use density::symmetrize_vec;
pub use params::{Derived, DriveRule, ParamSpec, SystemParams, Units, DEFAULT_N_QUTRITS};

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::qspace::{destroy, quartit, HilbertSpace, QspaceError, SparseOperator, C64};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("negative rate {name} = {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("parameter {0} is not finite")]
    NonFinite(&'static str),
    #[error("total qutrit decay gamma0 + gamma1 is zero")]
    ZeroGamma,
    #[error("n_max must be at least 1, got {0}")]
    NMaxTooSmall(usize),
    #[error("Delta_e1 = 0 but the effective drive Omega1*Omega2/(2 Delta_e1) was requested")]
    ZeroDeltaE1,
    #[error("conflicting keys: {0}")]
    Conflict(&'static str),
    #[error("missing parameter: {0}")]
    Missing(&'static str),
    #[error("config error: {0}")]
    Config(String),
    #[error("excitation number {n} out of range 0..={max}")]
    ExcitationOutOfRange { n: usize, max: usize },
    #[error("qutrit amplitudes: {0}")]
    Amplitudes(String),
    #[error("matrix is not square")]
    NotSquare,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Space(#[from] QspaceError),
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn sum(ops: impl IntoIterator<Item = SparseOperator>, dim: usize) -> SparseOperator {
    let trip: Vec<_> = ops.into_iter().flat_map(|o| o.triplets().collect::<Vec<_>>()).collect();
    SparseOperator::from_triplets(dim, trip)
}

fn plus_hc(op: SparseOperator) -> SparseOperator {
    let d = op.dagger();
    op.add(&d).expect("same dim")
}

pub fn space_for(params: &SystemParams) -> Result<HilbertSpace, ModelError> {
    Ok(HilbertSpace::new(params.n_qutrits, params.n_max)?)
}

fn check_space(params: &SystemParams, space: &HilbertSpace) -> Result<(), ModelError> {
    if space.n_qutrits() != params.n_qutrits {
        return Err(ModelError::DimMismatch {
            expected: params.n_qutrits,
            got: space.n_qutrits(),
        });
    }
    Ok(())
}

struct Ops {
    a_plus: SparseOperator,
    a_minus: SparseOperator,
}

fn mode_ops(space: &HilbertSpace) -> Result<Ops, ModelError> {
    let a = destroy(space.n_max() + 1)?;
    Ok(Ops {
        a_plus: space.lift(space.mode_plus(), &a)?,
        a_minus: space.lift(space.mode_minus(), &a)?,
    })
}

fn quartit_op(space: &HilbertSpace, row: usize, col: usize) -> Result<SparseOperator, ModelError> {
    Ok(space.lift(0, &SparseOperator::ketbra(4, row, col))?)
}

fn qutrit_op(space: &HilbertSpace, k: usize, row: usize, col: usize) -> Result<SparseOperator, ModelError> {
    Ok(space.lift(1 + k, &SparseOperator::ketbra(3, row, col))?)
}

/// Drive V = (Ω₁/2)|e1⟩⟨g1|.
pub fn build_drive(params: &SystemParams, space: &HilbertSpace) -> Result<SparseOperator, ModelError> {
    check_space(params, space)?;
    Ok(quartit_op(space, quartit::E1, quartit::G1)?.scale_re(params.omega1 / 2.0))
}

/// Undriven part H_e: every term except V + V†.
pub fn build_excited_hamiltonian(
    params: &SystemParams,
    space: &HilbertSpace,
) -> Result<SparseOperator, ModelError> {
    check_space(params, space)?;
    let dim = space.total_dim();
    let Ops { a_plus, a_minus } = mode_ops(space)?;
    let mut terms = Vec::new();

    let sym = a_plus.add(&a_minus)?;
    let anti = a_plus.sub(&a_minus)?;
    for k in 0..params.n_qutrits {
        terms.push(qutrit_op(space, k, 2, 2)?.scale_re(params.delta));
        let up = anti.mul(&qutrit_op(space, k, 2, 1)?)?;
        terms.push(plus_hc(up.scale_re(params.g_b * FRAC_1_SQRT_2)));
    }
    terms.push(quartit_op(space, quartit::E1, quartit::E1)?.scale_re(params.delta_e1));
    terms.push(quartit_op(space, quartit::E2, quartit::E2)?.scale_re(params.delta_e2));
    terms.push(a_plus.dagger().mul(&a_plus)?.scale_re(2.0 * params.j));
    let ga = sym.mul(&quartit_op(space, quartit::E2, quartit::G2)?)?;
    terms.push(plus_hc(ga.scale_re(params.g_a * FRAC_1_SQRT_2)));
    let om2 = quartit_op(space, quartit::E2, quartit::E1)?.scale_re(params.omega2 / 2.0);
    terms.push(plus_hc(om2));
    Ok(sum(terms, dim))
}

/// Full rotating-frame Hamiltonian H = H_e + V + V†.
pub fn build_hamiltonian(params: &SystemParams, space: &HilbertSpace) -> Result<SparseOperator, ModelError> {
    let he = build_excited_hamiltonian(params, space)?;
    let v = build_drive(params, space)?;
    Ok(he.add(&plus_hc(v))?)
}

/// Jump operator labels in the order returned by [`build_lindblads`].
pub fn lindblad_labels(n_qutrits: usize) -> Vec<String> {
    let mut out = vec![
        "kappa_plus".to_string(),
        "kappa_minus".to_string(),
        "g1".to_string(),
        "g2".to_string(),
    ];
    for k in 1..=n_qutrits {
        out.push(format!("q{k}_0"));
        out.push(format!("q{k}_1"));
    }
    out
}

/// √κ a₊, √κ a₋, √γ_g1|g1⟩⟨e1|, √γ_g2|g2⟩⟨e2|, then for each qutrit
/// √γ₀|0⟩⟨2| and √γ₁|1⟩⟨2|.
pub fn build_lindblads(params: &SystemParams, space: &HilbertSpace) -> Result<Vec<SparseOperator>, ModelError> {
    check_space(params, space)?;
    let Ops { a_plus, a_minus } = mode_ops(space)?;
    let sk = params.kappa.sqrt();
    let mut out = vec![
        a_plus.scale_re(sk),
        a_minus.scale_re(sk),
        quartit_op(space, quartit::G1, quartit::E1)?.scale_re(params.gamma_g1.sqrt()),
        quartit_op(space, quartit::G2, quartit::E2)?.scale_re(params.gamma_g2.sqrt()),
    ];
    for k in 0..params.n_qutrits {
        out.push(qutrit_op(space, k, 0, 2)?.scale_re(params.gamma0.sqrt()));
        out.push(qutrit_op(space, k, 1, 2)?.scale_re(params.gamma1.sqrt()));
    }
    Ok(out)
}

/// Projector onto basis states with exactly `n` qutrits in |1⟩ and none in
/// |2⟩; identity on the quartit and the modes.
pub fn excitation_projector(space: &HilbertSpace, n: usize) -> Result<SparseOperator, ModelError> {
    let nq = space.n_qutrits();
    if n > nq {
        return Err(ModelError::ExcitationOutOfRange { n, max: nq });
    }
    let diag: Vec<C64> = (0..space.total_dim())
        .map(|i| {
            let d = space.decode(i);
            let q = &d[1..1 + nq];
            let ok = q.iter().all(|&x| x < 2) && q.iter().filter(|&&x| x == 1).count() == n;
            re(if ok { 1.0 } else { 0.0 })
        })
        .collect();
    Ok(SparseOperator::diagonal(&diag))
}

/// Per-qutrit (|0⟩, |1⟩) amplitude pairs.
pub type QubitAmplitudes = Vec<[C64; 2]>;

pub fn uniform_amplitudes(n_qutrits: usize) -> QubitAmplitudes {
    vec![[re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]; n_qutrits]
}

fn check_amplitudes(amps: &[[C64; 2]], n: usize) -> Result<(), ModelError> {
    if amps.len() != n {
        return Err(ModelError::Amplitudes(format!("expected {n} pairs, got {}", amps.len())));
    }
    for (k, a) in amps.iter().enumerate() {
        let norm = a[0].norm_sqr() + a[1].norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(ModelError::Amplitudes(format!("qutrit {} has norm² {norm}", k + 1)));
        }
    }
    Ok(())
}

/// Product qubit register state over 2^N amplitudes, first qutrit most
/// significant.
pub fn qubit_register(amps: &[[C64; 2]]) -> Vec<C64> {
    let mut psi = vec![re(1.0)];
    for a in amps {
        psi = psi.iter().flat_map(|&x| [x * a[0], x * a[1]]).collect();
    }
    psi
}

/// |g1⟩ ⊗ (product qubit state) ⊗ |vac⟩ ⊗ |vac⟩ as a ket in the full space.
pub fn initial_ket(
    params: &SystemParams,
    space: &HilbertSpace,
    amplitudes: Option<&[[C64; 2]]>,
) -> Result<Vec<C64>, ModelError> {
    check_space(params, space)?;
    let n = params.n_qutrits;
    let default = uniform_amplitudes(n);
    let amps = amplitudes.unwrap_or(&default);
    check_amplitudes(amps, n)?;
    embed_register(space, quartit::G1, &qubit_register(amps))
}

/// Places a 2^N qubit-register ket into the full space with the given
/// quartit level and both modes in vacuum.
pub fn embed_register(space: &HilbertSpace, quartit_level: usize, reg: &[C64]) -> Result<Vec<C64>, ModelError> {
    let n = space.n_qutrits();
    if reg.len() != 1 << n {
        return Err(ModelError::DimMismatch { expected: 1 << n, got: reg.len() });
    }
    let mut psi = vec![re(0.0); space.total_dim()];
    for (b, &amp) in reg.iter().enumerate() {
        if amp == re(0.0) {
            continue;
        }
        let mut digits = vec![0; n + 3];
        digits[0] = quartit_level;
        for k in 0..n {
            digits[1 + k] = (b >> (n - 1 - k)) & 1;
        }
        psi[space.encode(&digits)?] = amp;
    }
    Ok(psi)
}

pub fn initial_state(
    params: &SystemParams,
    space: &HilbertSpace,
    amplitudes: Option<&[[C64; 2]]>,
) -> Result<DensityMatrix, ModelError> {
    Ok(DensityMatrix::pure(&initial_ket(params, space, amplitudes)?))
}
