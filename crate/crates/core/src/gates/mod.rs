//! Heralded gate protocols: detuning tunings, pulse durations, correction
//! phases, and success/fidelity metrics from three engines.

mod cz;
mod sums;
mod toffoli;

pub use cz::{cz_metrics_analytic, cz_z_p, cz_z_p_limit, tune_cz};
pub use sums::{binomial_weighted_exp, ln_binomial, LogSum};
pub use toffoli::{toffoli_asymptotics, toffoli_metrics, toffoli_sums, tune_toffoli, ToffoliAsymptotics};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effective::{evolve_effective, excitations, rate_models, EffectiveError, EffectiveModel, RateOptions};
use crate::lindblad::{fidelity, Diagnostics, EvolveOptions, FullSystem, LindbladError};
use crate::model::{qubit_register, uniform_amplitudes, DensityMatrix, ModelError, QubitAmplitudes, SystemParams};
use crate::qspace::C64;
use crate::registry::{Registry, UnknownStrategy};

#[derive(Debug, Error)]
pub enum GateError {
    #[error("degenerate gate timing: {0}")]
    Degenerate(String),
    #[error("{kind} gate needs N = {expected}, got {got}")]
    WrongN { kind: GateKind, expected: usize, got: usize },
    #[error("{what} = {value} outside [0, 1]")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("unknown gate kind '{0}', expected toffoli or cz")]
    UnknownKind(String),
    #[error(transparent)]
    Effective(#[from] EffectiveError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Toffoli,
    Cz,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::Toffoli => "toffoli",
            GateKind::Cz => "cz",
        })
    }
}

impl FromStr for GateKind {
    type Err = GateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "toffoli" => Ok(GateKind::Toffoli),
            "cz" => Ok(GateKind::Cz),
            _ => Err(GateError::UnknownKind(s.to_string())),
        }
    }
}

/// Where a report's numbers come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportProvenance {
    #[serde(rename = "analytic-asymptotic")]
    AnalyticAsymptotic,
    #[serde(rename = "effective-closed-form")]
    EffectiveClosedForm,
    #[serde(rename = "full-ME")]
    FullMe,
}

impl fmt::Display for ReportProvenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportProvenance::AnalyticAsymptotic => "analytic-asymptotic",
            ReportProvenance::EffectiveClosedForm => "effective-closed-form",
            ReportProvenance::FullMe => "full-ME",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOptions {
    /// Rate model for Δ_n (durations, corrections) and Γ_n.
    pub rates: String,
    pub rate_options: RateOptions,
    /// Fock cutoff for full-ME runs; falls back to the parameter set.
    pub n_max: Option<usize>,
    pub evolve: EvolveOptions,
    /// Per-qubit input amplitudes; uniform superposition if absent.
    pub amplitudes: Option<QubitAmplitudes>,
    /// Rerun a full-ME point once at n_max + 1 when the top Fock level
    /// exceeds [`TOP_FOCK_THRESHOLD`].
    pub fock_rerun: bool,
}

impl Default for GateOptions {
    fn default() -> Self {
        Self {
            rates: "taylor".into(),
            rate_options: RateOptions::default(),
            n_max: None,
            evolve: EvolveOptions::default(),
            amplitudes: None,
            fock_rerun: true,
        }
    }
}

pub const TOP_FOCK_THRESHOLD: f64 = 1e-4;

/// Tuned protocol. `params` carries the retuned δ and Δ_e2.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub params: SystemParams,
    pub delta: f64,
    pub delta_e2: f64,
    /// R for Toffoli, D for CZ.
    pub shape: f64,
    pub duration: f64,
    /// Stark shifts Δ_n of the tuning model.
    pub stark: Vec<f64>,
    /// CZ only: phases of 𝓤|0⟩ and 𝓤|1⟩.
    pub correction_phases: Option<[f64; 2]>,
    pub model: EffectiveModel,
}

impl GateSpec {
    /// Diagonal of 𝓤^{⊗N} on the 2^N register, first qubit most significant.
    pub fn correction_diagonal(&self) -> Vec<C64> {
        let n = self.params.n_qutrits;
        let ph = self.correction_phases.unwrap_or([0.0, 0.0]);
        (0..1usize << n)
            .map(|b| {
                let phase: f64 = (0..n).map(|k| ph[(b >> (n - 1 - k)) & 1]).sum();
                C64::from_polar(1.0, phase)
            })
            .collect()
    }

    /// Index of the register state that picks up π.
    pub fn flipped_state(&self) -> usize {
        match self.kind {
            GateKind::Toffoli => 0,
            GateKind::Cz => (1 << self.params.n_qutrits) - 1,
        }
    }

    /// Ideal output for a register input, global phase dropped.
    pub fn target(&self, input: &[C64]) -> Vec<C64> {
        let f = self.flipped_state();
        input.iter().enumerate().map(|(b, &x)| if b == f { -x } else { x }).collect()
    }

    /// Phase acquired by each register state under effective evolution for
    /// the gate duration, corrections included.
    pub fn register_phases(&self, model: &EffectiveModel) -> Vec<f64> {
        let corr = self.correction_diagonal();
        (0..corr.len())
            .map(|b| -model.rates[excitations(b)].delta_n * self.duration + corr[b].arg())
            .collect()
    }

    /// Largest deviation (rad) of the relative phases from the ideal map.
    /// Toffoli references the all-ones state, CZ references |0…0⟩.
    pub fn phase_map_error(&self, model: &EffectiveModel) -> f64 {
        let ph = self.register_phases(model);
        let reference = match self.kind {
            GateKind::Toffoli => ph.len() - 1,
            GateKind::Cz => 0,
        };
        let f = self.flipped_state();
        ph.iter()
            .enumerate()
            .map(|(b, &x)| {
                let ideal = if b == f { PI } else { 0.0 };
                wrap(x - ph[reference] - ideal).abs()
            })
            .fold(0.0, f64::max)
    }

    fn rotate(&self, rho: &DensityMatrix) -> Result<DensityMatrix, GateError> {
        let u = self.correction_diagonal();
        let m = rho.matrix();
        let out = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| u[i] * m[(i, j)] * u[j].conj());
        Ok(DensityMatrix::from_matrix(out)?)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Analytic scaling factors and the corresponding leading-order metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    Toffoli(ToffoliAsymptotics),
    Cz { z_p: f64, success_probability: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub kind: GateKind,
    pub n_qutrits: usize,
    pub c_b: f64,
    pub lambda: f64,
    pub delta_e1: f64,
    pub success_probability: f64,
    pub conditional_fidelity: f64,
    pub duration: f64,
    pub provenance: ReportProvenance,
    pub scaling: Option<Scaling>,
    pub diagnostics: Option<Diagnostics>,
    /// Fock cutoff actually used by a full-ME run.
    pub n_max: Option<usize>,
}

const RANGE_SLACK: f64 = 1e-9;

impl GateReport {
    fn new(spec: &GateSpec, p: f64, f: f64, provenance: ReportProvenance) -> Result<Self, GateError> {
        for (what, v) in [("success probability", p), ("conditional fidelity", f)] {
            if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
                return Err(GateError::OutOfRange { what, value: v });
            }
        }
        let dv = spec.params.validate()?;
        Ok(Self {
            kind: spec.kind,
            n_qutrits: spec.params.n_qutrits,
            c_b: dv.c_b,
            lambda: dv.lambda,
            delta_e1: spec.params.delta_e1,
            success_probability: p,
            conditional_fidelity: f,
            duration: spec.duration,
            provenance,
            scaling: None,
            diagnostics: None,
            n_max: None,
        })
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.conditional_fidelity
    }

    pub const CSV_HEADER: [&'static str; 9] = ["kind", "N", "C_B", "lambda", "Delta_e1", "P", "F", "t", "provenance"];

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.kind.to_string(),
            self.n_qutrits.to_string(),
            format!("{:.10e}", self.c_b),
            format!("{:.10e}", self.lambda),
            format!("{:.10e}", self.delta_e1),
            format!("{:.12e}", self.success_probability),
            format!("{:.15e}", self.conditional_fidelity),
            format!("{:.10e}", self.duration),
            self.provenance.to_string(),
        ]
    }
}

/// Tuning for either protocol.
pub fn tune(kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateSpec, GateError> {
    match kind {
        GateKind::Toffoli => tune_toffoli(p, opts),
        GateKind::Cz => tune_cz(p, opts),
    }
}

fn tuning_model(p: &SystemParams, opts: &GateOptions) -> Result<EffectiveModel, GateError> {
    Ok(rate_models().create(&opts.rates)?.model(p, &opts.rate_options)?)
}

fn input_register(n: usize, opts: &GateOptions) -> Vec<C64> {
    match &opts.amplitudes {
        Some(a) => qubit_register(a),
        None => qubit_register(&uniform_amplitudes(n)),
    }
}

fn check_cz_n(p: &SystemParams) -> Result<(), GateError> {
    if p.n_qutrits != 2 {
        return Err(GateError::WrongN { kind: GateKind::Cz, expected: 2, got: p.n_qutrits });
    }
    Ok(())
}

/// Closed-form ground-manifold evolution (quartit heralded in |g1⟩) of the
/// input register for the gate duration, corrections applied.
pub fn effective_metrics(kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
    if kind == GateKind::Cz {
        check_cz_n(p)?;
    }
    let spec = tune(kind, p, opts)?;
    let psi = input_register(p.n_qutrits, opts);
    let (prob, rho) = evolve_effective(&DensityMatrix::pure(&psi), &spec.model, spec.duration)?;
    let f = fidelity(&spec.rotate(&rho)?, &spec.target(&psi))?;
    GateReport::new(&spec, prob, f, ReportProvenance::EffectiveClosedForm)
}

/// Full master-equation run on the reachable subspace, heralded and
/// corrected.
pub fn full_metrics(kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
    if kind == GateKind::Cz {
        check_cz_n(p)?;
    }
    let spec = tune(kind, p, opts)?;
    let mut tuned = spec.params.clone();
    tuned.n_max = opts.n_max.unwrap_or(p.n_max);
    let mut evolve = opts.evolve.clone();
    if evolve.max_step.is_none() && evolve.integrator != "propagator" {
        evolve.max_step = EvolveOptions::for_params(&tuned).max_step;
    }
    let psi = input_register(p.n_qutrits, opts);
    let mut rerun_left = opts.fock_rerun;
    loop {
        let sys = FullSystem::build(&tuned, opts.amplitudes.as_deref(), true)?;
        log::debug!(
            "full-ME {kind}: reduced dim {} of {}, t = {:.4}",
            sys.subspace.dim(),
            sys.subspace.full_dim(),
            spec.duration
        );
        let tr = sys.evolve(spec.duration, &evolve)?;
        let d = &tr.diagnostics;
        if d.max_top_fock > TOP_FOCK_THRESHOLD && rerun_left {
            log::warn!(
                "top Fock population {:.2e} at n_max = {}, rerunning at n_max = {}",
                d.max_top_fock,
                tuned.n_max,
                tuned.n_max + 1
            );
            tuned.n_max += 1;
            rerun_left = false;
            continue;
        }
        let (prob, rho) = sys.herald(&tr.final_state)?;
        let f = fidelity(&spec.rotate(&rho)?, &spec.target(&psi))?;
        let mut report = GateReport::new(&spec, prob, f, ReportProvenance::FullMe)?;
        report.diagnostics = Some(tr.diagnostics.clone());
        report.n_max = Some(tuned.n_max);
        return Ok(report);
    }
}

pub trait GateEngine: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError>;
}

/// Closed-form sums with asymptotic scaling factors attached.
pub struct AnalyticEngine;
pub struct EffectiveEngine;
pub struct FullEngine;

impl GateEngine for AnalyticEngine {
    fn name(&self) -> &'static str {
        "analytic"
    }
    fn run(&self, kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
        match kind {
            GateKind::Toffoli => toffoli_metrics(p, opts),
            GateKind::Cz => cz_metrics_analytic(p, opts),
        }
    }
}

impl GateEngine for EffectiveEngine {
    fn name(&self) -> &'static str {
        "effective"
    }
    fn run(&self, kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
        effective_metrics(kind, p, opts)
    }
}

impl GateEngine for FullEngine {
    fn name(&self) -> &'static str {
        "full"
    }
    fn run(&self, kind: GateKind, p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
        full_metrics(kind, p, opts)
    }
}

pub fn gate_engines() -> Registry<dyn GateEngine> {
    let mut r: Registry<dyn GateEngine> = Registry::new("gate engine");
    r.register("analytic", || Box::new(AnalyticEngine));
    r.register("effective", || Box::new(EffectiveEngine));
    r.register("full", || Box::new(FullEngine));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(-0.5) + 0.5).abs() < 1e-15);
        assert!(wrap(2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("CZ".parse::<GateKind>().unwrap(), GateKind::Cz);
        assert_eq!("toffoli".parse::<GateKind>().unwrap(), GateKind::Toffoli);
        assert!("ccnot".parse::<GateKind>().is_err());
    }

    #[test]
    fn engines_registered() {
        assert_eq!(gate_engines().names(), ["analytic", "effective", "full"]);
    }
}
