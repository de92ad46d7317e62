//! Effective-operator reduction onto the ground manifold.
//!
//! With V = (Ω₁/2)|e1⟩⟨g1| the drive, each ground configuration with `n`
//! qutrits in |1⟩ acquires a Stark shift Δ_n = −Re⟨V†H_NH⁻¹V⟩ and jump
//! amplitudes r_j,n = ⟨L_j H_NH⁻¹ V⟩. Every channel except r_g1 sends the
//! quartit to |g2⟩, so only those enter the heralding loss Γ_n.

mod closed;
mod numeric;

pub use closed::{AppendixTaylor, ExactAppendix, Taylor};
pub use numeric::{no_jump_hamiltonian, NumericInversion, SingleExcitationBlock};

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{DensityMatrix, ModelError, SystemParams};
use crate::qspace::C64;
use crate::registry::{Registry, UnknownStrategy};

#[derive(Debug, Error)]
pub enum EffectiveError {
    #[error("{what} vanishes for n = {n}: resonance singularity, detune away")]
    Singular { n: usize, what: &'static str },
    #[error("gamma_g1 must be positive for the exact closed-form Stark shift")]
    NeedsGammaG1,
    #[error("state dimension {got} does not match 2^N = {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Complex detunings carrying the decay rates in their imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDetunings {
    /// δ/γ − i/2.
    pub delta_tilde: C64,
    /// Δ_e2/γ − iβ/2.
    pub delta_e2_tilde: C64,
    /// Δ_e1/γ − iγ_g1/(2γ).
    pub delta_e1_tilde: C64,
    /// 2J/κ − i/2.
    pub j_tilde: C64,
    /// Δ_e1 − iγ_g1/2.
    pub delta_e1_bar: C64,
    /// Δ_e2 − iγ_g2/2.
    pub delta_e2_bar: C64,
    /// δ − iγ/2.
    pub delta_bar: C64,
    /// 2J − iκ/2.
    pub j_bar: C64,
}

impl ComplexDetunings {
    pub fn new(p: &SystemParams) -> Self {
        let g = p.gamma();
        let bar = |re: f64, rate: f64| C64::new(re, -rate / 2.0);
        let delta_bar = bar(p.delta, g);
        let delta_e1_bar = bar(p.delta_e1, p.gamma_g1);
        let delta_e2_bar = bar(p.delta_e2, p.gamma_g2);
        let j_bar = bar(2.0 * p.j, p.kappa);
        Self {
            delta_tilde: delta_bar / g,
            delta_e2_tilde: delta_e2_bar / g,
            delta_e1_tilde: delta_e1_bar / g,
            j_tilde: j_bar / p.kappa,
            delta_e1_bar,
            delta_e2_bar,
            delta_bar,
            j_bar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Numeric,
    Exact,
    AppendixTaylor,
    Taylor,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Numeric => "numeric-inversion",
            Provenance::Exact => "exact-appendix",
            Provenance::AppendixTaylor => "appendix-taylor",
            Provenance::Taylor => "taylor",
        })
    }
}

/// Index of each channel in [`RateSet::r`].
pub mod channel {
    pub const PLUS: usize = 0;
    pub const MINUS: usize = 1;
    pub const G1: usize = 2;
    pub const G2: usize = 3;
    pub const Q0: usize = 4;
    pub const Q1: usize = 5;
    pub const NAMES: [&str; 6] = ["r_plus", "r_minus", "r_g1", "r_g2", "r_0", "r_1"];
}

/// Rates for one ground configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSet {
    pub n: usize,
    pub delta_n: f64,
    /// Amplitudes in the order of [`channel::NAMES`], units √γ.
    pub r: [C64; 6],
    pub gamma_n: f64,
}

impl RateSet {
    /// Fills Γ_n from the amplitudes.
    pub fn new(n: usize, delta_n: f64, r: [C64; 6]) -> Self {
        let gamma_n = rate_sum(n, &r);
        Self { n, delta_n, r, gamma_n }
    }

    pub fn r_plus(&self) -> C64 {
        self.r[channel::PLUS]
    }
    pub fn r_minus(&self) -> C64 {
        self.r[channel::MINUS]
    }
    pub fn r_g1(&self) -> C64 {
        self.r[channel::G1]
    }
    pub fn r_g2(&self) -> C64 {
        self.r[channel::G2]
    }
    pub fn r_0(&self) -> C64 {
        self.r[channel::Q0]
    }
    pub fn r_1(&self) -> C64 {
        self.r[channel::Q1]
    }
}

/// Γ_n = |r₊|² + |r₋|² + |r_g2|² + n(|r₀|² + |r₁|²).
pub fn rate_sum(n: usize, r: &[C64; 6]) -> f64 {
    r[channel::PLUS].norm_sqr()
        + r[channel::MINUS].norm_sqr()
        + r[channel::G2].norm_sqr()
        + n as f64 * (r[channel::Q0].norm_sqr() + r[channel::Q1].norm_sqr())
}

/// The overall shift −Ω₁²/(4Δ_e1), dropped unless requested.
pub fn constant_shift(p: &SystemParams) -> f64 {
    if p.delta_e1 == 0.0 {
        return 0.0;
    }
    -p.omega1 * p.omega1 / (4.0 * p.delta_e1)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RateOptions {
    /// Keep −Ω₁²/(4Δ_e1) in every Δ_n.
    pub keep_constant_shift: bool,
}

pub trait RateModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn provenance(&self) -> Provenance;
    fn rates(&self, p: &SystemParams, n: usize, opts: &RateOptions) -> Result<RateSet, EffectiveError>;

    fn model(&self, p: &SystemParams, opts: &RateOptions) -> Result<EffectiveModel, EffectiveError> {
        let rates = (0..=p.n_qutrits)
            .map(|n| self.rates(p, n, opts))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EffectiveModel {
            provenance: self.provenance(),
            rates,
            constant_shift_kept: opts.keep_constant_shift,
        })
    }
}

pub fn rate_models() -> Registry<dyn RateModel> {
    let mut r: Registry<dyn RateModel> = Registry::new("rate model");
    r.register("numeric", || Box::new(NumericInversion));
    r.register("exact", || Box::new(ExactAppendix));
    r.register("appendix-taylor", || Box::new(AppendixTaylor));
    r.register("taylor", || Box::new(Taylor));
    r
}

pub fn effective_numeric(p: &SystemParams) -> Result<EffectiveModel, EffectiveError> {
    NumericInversion.model(p, &RateOptions::default())
}

pub fn analytic_exact(p: &SystemParams) -> Result<EffectiveModel, EffectiveError> {
    ExactAppendix.model(p, &RateOptions::default())
}

pub fn analytic_taylor(p: &SystemParams) -> Result<EffectiveModel, EffectiveError> {
    Taylor.model(p, &RateOptions::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub provenance: Provenance,
    /// Indexed by n = 0..=N.
    pub rates: Vec<RateSet>,
    pub constant_shift_kept: bool,
}

impl EffectiveModel {
    pub fn n_qutrits(&self) -> usize {
        self.rates.len() - 1
    }

    pub fn stark(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.delta_n).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.gamma_n).collect()
    }

    /// Largest |Γ_n − Σ|r|²| relative to Γ_n.
    pub fn rate_sum_defect(&self) -> f64 {
        self.rates
            .iter()
            .map(|r| (r.gamma_n - rate_sum(r.n, &r.r)).abs() / r.gamma_n.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// max_n |Γ_n − Γ_0| / Γ_0.
    pub fn gamma_spread(&self) -> f64 {
        let g0 = self.rates[0].gamma_n;
        self.rates.iter().map(|r| (r.gamma_n - g0).abs() / g0).fold(0.0, f64::max)
    }

    /// Γ_n with every amplitude zeroed but Δ_n kept; used for lossless checks.
    pub fn without_losses(&self) -> Self {
        let mut m = self.clone();
        for r in &mut m.rates {
            r.r = [C64::new(0.0, 0.0); 6];
            r.gamma_n = 0.0;
        }
        m
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), EffectiveError> {
        writeln!(w, "# provenance: {}", self.provenance).map_err(csv::Error::from)?;
        writeln!(w, "# constant_shift_kept: {}", self.constant_shift_kept).map_err(csv::Error::from)?;
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["n".to_string(), "Delta_n".into(), "Gamma_n".into()];
        for name in channel::NAMES {
            header.push(format!("re_{name}"));
            header.push(format!("im_{name}"));
        }
        wr.write_record(&header)?;
        for r in &self.rates {
            let mut row = vec![r.n.to_string(), format!("{:.15e}", r.delta_n), format!("{:.15e}", r.gamma_n)];
            for a in r.r {
                row.push(format!("{:.15e}", a.re));
                row.push(format!("{:.15e}", a.im));
            }
            wr.write_record(&row)?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Number of ones in register index `b`.
pub fn excitations(b: usize) -> usize {
    b.count_ones() as usize
}

/// Closed-form ground-manifold evolution of a 2^N register state with the
/// quartit heralded in |g1⟩: coherences between sectors n, n' pick up
/// e^{−i(Δ_n−Δ_n')t − (Γ_n+Γ_n')t/2}. Returns (P, normalized state).
pub fn evolve_effective(
    rho0: &DensityMatrix,
    model: &EffectiveModel,
    t: f64,
) -> Result<(f64, DensityMatrix), EffectiveError> {
    let n = model.n_qutrits();
    let q = 1usize << n;
    if rho0.dim() != q {
        return Err(EffectiveError::DimMismatch { expected: q, got: rho0.dim() });
    }
    let factor: Vec<C64> = (0..q)
        .map(|b| {
            let r = &model.rates[excitations(b)];
            C64::from_polar((-r.gamma_n * t / 2.0).exp(), -r.delta_n * t)
        })
        .collect();
    let m0 = rho0.matrix();
    let mut m = DMatrix::<C64>::from_fn(q, q, |i, j| m0[(i, j)] * factor[i] * factor[j].conj());
    let p = m.trace().re;
    if !(p > 0.0) {
        return Err(EffectiveError::Model(ModelError::Config(format!(
            "heralding probability {p:e} vanished"
        ))));
    }
    m /= C64::new(p, 0.0);
    Ok((p, DensityMatrix::from_matrix(m)?))
}

/// P = Σ_n w_n e^{−Γ_n t} with w_n = Tr[P_n ρ₀].
pub fn herald_probability(weights: &[f64], model: &EffectiveModel, t: f64) -> f64 {
    weights
        .iter()
        .zip(&model.rates)
        .map(|(w, r)| w * (-r.gamma_n * t).exp())
        .sum()
}
