//! Rates by direct inversion of the no-jump Hamiltonian on the
//! single-excitation block of each ground configuration.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};

use crate::model::SystemParams;
use crate::qspace::{SparseOperator, C64};

use super::{EffectiveError, Provenance, RateModel, RateOptions, RateSet};

/// Basis of the block reached from |g1⟩ ⊗ (config with `n` ones) by one
/// application of V: |e1⟩, |e2⟩, |g2⟩|1₊⟩, |g2⟩|1₋⟩, then |g2⟩ with each of
/// the `n` excited qutrits promoted to |2⟩.
#[derive(Debug, Clone)]
pub struct SingleExcitationBlock {
    pub labels: Vec<String>,
    pub h: SparseOperator,
}

pub const E1: usize = 0;
pub const E2: usize = 1;
pub const PLUS: usize = 2;
pub const MINUS: usize = 3;
pub const FIRST_QUTRIT: usize = 4;

/// H_NH = H_e − (i/2)ΣL†L restricted to the single-excitation block.
pub fn no_jump_hamiltonian(p: &SystemParams, n: usize) -> SingleExcitationBlock {
    let i = C64::new(0.0, 1.0);
    let r = |x: f64| C64::new(x, 0.0);
    let gamma = p.gamma();
    let ga = p.g_a * FRAC_1_SQRT_2;
    let gb = p.g_b * FRAC_1_SQRT_2;
    let mut t = vec![
        (E1, E1, r(p.delta_e1) - i * (p.gamma_g1 / 2.0)),
        (E2, E2, r(p.delta_e2) - i * (p.gamma_g2 / 2.0)),
        (PLUS, PLUS, r(2.0 * p.j) - i * (p.kappa / 2.0)),
        (MINUS, MINUS, -i * (p.kappa / 2.0)),
        (E1, E2, r(p.omega2 / 2.0)),
        (E2, E1, r(p.omega2 / 2.0)),
        (E2, PLUS, r(ga)),
        (PLUS, E2, r(ga)),
        (E2, MINUS, r(ga)),
        (MINUS, E2, r(ga)),
    ];
    let mut labels: Vec<String> = ["e1", "e2", "photon_plus", "photon_minus"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 0..n {
        let s = FIRST_QUTRIT + k;
        t.push((s, s, r(p.delta) - i * (gamma / 2.0)));
        t.push((PLUS, s, r(gb)));
        t.push((s, PLUS, r(gb)));
        t.push((MINUS, s, r(-gb)));
        t.push((s, MINUS, r(-gb)));
        labels.push(format!("qutrit_{}_in_2", k + 1));
    }
    SingleExcitationBlock {
        labels,
        h: SparseOperator::from_triplets(FIRST_QUTRIT + n, t),
    }
}

/// Solves H_NH x = V|g1, config⟩ and projects every jump operator.
#[derive(Debug, Default, Clone, Copy)]
pub struct NumericInversion;

impl RateModel for NumericInversion {
    fn name(&self) -> &'static str {
        "numeric"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Numeric
    }

    fn rates(&self, p: &SystemParams, n: usize, opts: &RateOptions) -> Result<RateSet, EffectiveError> {
        let block = no_jump_hamiltonian(p, n);
        let h: DMatrix<C64> = block.h.to_dense();
        let dim = h.nrows();
        let mut rhs = DVector::<C64>::zeros(dim);
        rhs[E1] = C64::new(p.omega1 / 2.0, 0.0);
        let lu = h.lu();
        let x = lu.solve(&rhs).ok_or(EffectiveError::Singular {
            n,
            what: "H_NH single-excitation block",
        })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EffectiveError::Singular {
                n,
                what: "H_NH single-excitation block",
            });
        }
        // V†H⁻¹V = (Ω₁/2) x_e1.
        let mut delta_n = -(p.omega1 / 2.0) * x[E1].re;
        if !opts.keep_constant_shift {
            delta_n -= super::constant_shift(p);
        }
        let sk = p.kappa.sqrt();
        let (r0, r1) = if n > 0 {
            let s = x[FIRST_QUTRIT];
            (s * p.gamma0.sqrt(), s * p.gamma1.sqrt())
        } else {
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        };
        Ok(RateSet::new(
            n,
            delta_n,
            [x[PLUS] * sk, x[MINUS] * sk, x[E1] * p.gamma_g1.sqrt(), x[E2] * p.gamma_g2.sqrt(), r0, r1],
        ))
    }
}
