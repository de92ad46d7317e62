//! Full master-equation dynamics and heralded post-selection.

mod integrators;
mod liouvillian;

pub use integrators::{
    integrators, Dopri5, Integrator, Propagator, Rk4, StepHook, StepStats, PROPAGATOR_MAX_DIM, PROPAGATOR_STEP_RTOL,
};
pub use liouvillian::{build_liouvillian, no_jump, Liouvillian};

use std::io::Write;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{
    self, build_hamiltonian, build_lindblads, symmetrize_vec, DensityMatrix, ModelError,
    SystemParams,
};
use crate::qspace::{quartit, BasisSubspace, HilbertSpace, QspaceError, C64};
use crate::registry::UnknownStrategy;

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("Hamiltonian is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("trace drift {err:e} at t = {t} exceeds abort threshold {limit:e}")]
    TraceDrift { t: f64, err: f64, limit: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("heralding probability {0:e} too small to condition on")]
    Conditioning(f64),
    #[error("superoperator dimension {dim} exceeds dense propagator limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("invalid time {0}")]
    InvalidTime(f64),
    #[error("target state: {0}")]
    Target(String),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Space(#[from] QspaceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub integrator: String,
    pub rtol: f64,
    pub atol: f64,
    pub trace_tol: f64,
    /// Upper bound on adaptive steps.
    pub max_step: Option<f64>,
    /// Fixed step for rk4; optional sub-interval for propagator.
    pub step: Option<f64>,
    /// Number of equal output intervals on [0, t_final].
    pub samples: usize,
    /// Times at which full ρ snapshots are kept.
    pub snapshot_times: Vec<f64>,
    pub symmetrize: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            integrator: "dopri5".into(),
            rtol: 1e-8,
            atol: 1e-11,
            trace_tol: 1e-7,
            max_step: None,
            step: None,
            samples: 100,
            snapshot_times: Vec::new(),
            symmetrize: true,
        }
    }
}

impl EvolveOptions {
    /// Resolves the fastest rotating-frame scale: max step 0.05/max(|Δ_e1|, 2J).
    pub fn for_params(params: &SystemParams) -> Self {
        let fast = params.delta_e1.abs().max(2.0 * params.j);
        Self {
            max_step: (fast > 0.0).then(|| 0.05 / fast),
            ..Self::default()
        }
    }

    pub fn abort_limit(&self) -> f64 {
        100.0 * self.trace_tol
    }
}

/// Diagonal observables, each a weight vector over the evolved basis.
#[derive(Debug, Clone, Default)]
pub struct ObservableSet {
    pub names: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    /// Index of the heralding probability, monitored for monotonicity.
    pub herald: Option<usize>,
    /// Weights of the top Fock level of either mode.
    pub top_fock: Option<Vec<f64>>,
}

impl ObservableSet {
    /// `P_herald, pop_g1, pop_g2, n_plus, n_minus` on the given basis states.
    pub fn standard(space: &HilbertSpace, basis: &[usize]) -> Self {
        let n = space.n_qutrits();
        let (mp, mm) = (space.mode_plus(), space.mode_minus());
        let top = space.n_max();
        let digits: Vec<Vec<usize>> = basis.iter().map(|&i| space.decode(i)).collect();
        let col = |f: &dyn Fn(&[usize]) -> f64| digits.iter().map(|d| f(d)).collect::<Vec<f64>>();
        let weights = vec![
            col(&|d| {
                let ok = d[0] == quartit::G1 && d[1..1 + n].iter().all(|&x| x < 2);
                if ok { 1.0 } else { 0.0 }
            }),
            col(&|d| if d[0] == quartit::G1 { 1.0 } else { 0.0 }),
            col(&|d| if d[0] == quartit::G2 { 1.0 } else { 0.0 }),
            col(&|d| d[mp] as f64),
            col(&|d| d[mm] as f64),
        ];
        Self {
            names: ["P_herald", "pop_g1", "pop_g2", "n_plus", "n_minus"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            weights,
            herald: Some(0),
            top_fock: Some(col(&|d| if d[mp] == top || d[mm] == top { 1.0 } else { 0.0 })),
        }
    }

    fn eval(w: &[f64], dim: usize, v: &[C64]) -> f64 {
        w.iter().enumerate().map(|(i, &x)| if x != 0.0 { x * v[i + i * dim].re } else { 0.0 }).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub max_trace_err: f64,
    pub max_hermiticity_err: f64,
    pub max_top_fock: f64,
    /// Largest single-step increase of the heralding probability.
    pub max_herald_increase: f64,
    pub stats: StepStats,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `values[k][i]` is observable `k` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    pub trace_err: Vec<f64>,
    pub snapshots: Vec<(f64, DensityMatrix)>,
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|k| self.values[k].as_slice())
    }

    /// CSV with columns `t_gamma`, the observables, `trace_err`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t_gamma".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("trace_err".into());
        wr.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.10e}")];
            row.extend(self.values.iter().map(|c| format!("{:.12e}", c[i])));
            row.push(format!("{:.3e}", self.trace_err[i]));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn trace_err(dim: usize, v: &[C64]) -> f64 {
    ((0..dim).map(|i| v[i + i * dim]).sum::<C64>() - C64::new(1.0, 0.0)).norm()
}

fn herm_err_vec(dim: usize, v: &[C64]) -> f64 {
    let mut e = 0.0_f64;
    for j in 0..dim {
        for i in 0..=j {
            e = e.max((v[i + j * dim] - v[j + i * dim].conj()).norm());
        }
    }
    e
}

/// Integrates ρ from 0 to `t_final`, sampling observables on a uniform grid.
pub fn evolve(
    rho0: &DensityMatrix,
    liou: &Liouvillian,
    t_final: f64,
    opts: &EvolveOptions,
    observables: &ObservableSet,
) -> Result<Trajectory, LindbladError> {
    let d = liou.hilbert_dim();
    if rho0.dim() != d {
        return Err(LindbladError::DimMismatch { expected: d, got: rho0.dim() });
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(LindbladError::InvalidTime(t_final));
    }
    let mut engine = integrators().create(&opts.integrator)?;
    let samples = opts.samples.max(1);
    let grid: Vec<f64> = if t_final == 0.0 {
        vec![0.0]
    } else {
        let mut g: Vec<f64> = (0..=samples).map(|i| t_final * i as f64 / samples as f64).collect();
        for &s in &opts.snapshot_times {
            if s > 0.0 && s < t_final {
                g.push(s);
            }
        }
        g.sort_by(|a, b| a.partial_cmp(b).unwrap());
        g.dedup();
        g
    };

    let mut y = rho0.as_vec().to_vec();
    let mut diag = Diagnostics::default();
    let limit = opts.abort_limit();
    let herald_w = observables.herald.map(|k| observables.weights[k].clone());
    let mut last_p = herald_w.as_ref().map(|w| ObservableSet::eval(w, d, &y));
    let top_w = observables.top_fock.clone();

    let mut times = Vec::with_capacity(grid.len());
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); observables.names.len()];
    let mut traces = Vec::with_capacity(grid.len());
    let mut snapshots = Vec::new();

    let record = |t: f64,
                  y: &[C64],
                  times: &mut Vec<f64>,
                  values: &mut Vec<Vec<f64>>,
                  traces: &mut Vec<f64>,
                  snapshots: &mut Vec<(f64, DensityMatrix)>| {
        times.push(t);
        for (k, w) in observables.weights.iter().enumerate() {
            values[k].push(ObservableSet::eval(w, d, y));
        }
        traces.push(trace_err(d, y));
        if opts.snapshot_times.iter().any(|&s| (s - t).abs() <= 1e-12 * t_final.max(1.0)) {
            snapshots.push((t, DensityMatrix::from_vec(d, y).expect("square")));
        }
    };
    record(0.0, &y, &mut times, &mut values, &mut traces, &mut snapshots);
    diag.max_trace_err = traces[0];

    let mut stats = StepStats::default();
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mut hook = |t: f64, v: &mut [C64]| -> Result<(), LindbladError> {
            // Recorded before symmetrizing so the raw integrator drift shows.
            diag.max_hermiticity_err = diag.max_hermiticity_err.max(herm_err_vec(d, v));
            if opts.symmetrize {
                symmetrize_vec(d, v);
            }
            let te = trace_err(d, v);
            if !te.is_finite() {
                return Err(LindbladError::NonFinite { t });
            }
            diag.max_trace_err = diag.max_trace_err.max(te);
            if te > limit {
                return Err(LindbladError::TraceDrift { t, err: te, limit });
            }
            if let (Some(w), Some(p_old)) = (&herald_w, last_p.as_mut()) {
                let p = ObservableSet::eval(w, d, v);
                diag.max_herald_increase = diag.max_herald_increase.max(p - *p_old);
                *p_old = p;
            }
            if let Some(tw) = &top_w {
                diag.max_top_fock = diag.max_top_fock.max(ObservableSet::eval(tw, d, v));
            }
            Ok(())
        };
        engine.advance(liou, &mut y, t0, t1, opts, &mut hook, &mut stats)?;
        record(t1, &y, &mut times, &mut values, &mut traces, &mut snapshots);
    }
    diag.stats = stats;
    let final_state = DensityMatrix::from_vec(d, &y).expect("square");
    diag.max_hermiticity_err = diag.max_hermiticity_err.max(final_state.hermiticity_error());
    if diag.max_trace_err > opts.trace_tol {
        log::warn!("trace drift {:.3e} exceeded tolerance {:.1e}", diag.max_trace_err, opts.trace_tol);
    }
    Ok(Trajectory {
        times,
        names: observables.names.clone(),
        values,
        trace_err: traces,
        snapshots,
        final_state,
        diagnostics: diag,
    })
}

/// Smallest heralding probability that still allows conditioning.
pub const MIN_HERALD_PROBABILITY: f64 = 1e-12;

/// Heralded probability and normalized qubit-register state, given ρ on
/// the listed basis states (`basis[i]` is the product-basis index of row i).
pub fn heralded_extract_on(
    rho: &DMatrix<C64>,
    space: &HilbertSpace,
    basis: &[usize],
) -> Result<(f64, DensityMatrix), LindbladError> {
    if rho.nrows() != basis.len() {
        return Err(LindbladError::DimMismatch { expected: basis.len(), got: rho.nrows() });
    }
    let n = space.n_qutrits();
    let nm = space.n_max() + 1;
    // (register index, mode index) for rows inside the heralded manifold.
    let tags: Vec<Option<(usize, usize)>> = basis
        .iter()
        .map(|&i| {
            let d = space.decode(i);
            if d[0] != quartit::G1 || d[1..1 + n].iter().any(|&x| x > 1) {
                return None;
            }
            let reg = d[1..1 + n].iter().fold(0, |acc, &x| (acc << 1) | x);
            Some((reg, d[1 + n] * nm + d[2 + n]))
        })
        .collect();
    let q = 1 << n;
    let mut out = DMatrix::<C64>::zeros(q, q);
    for (j, tj) in tags.iter().enumerate() {
        let Some((bj, mj)) = tj else { continue };
        for (i, ti) in tags.iter().enumerate() {
            let Some((bi, mi)) = ti else { continue };
            if mi == mj {
                out[(*bi, *bj)] += rho[(i, j)];
            }
        }
    }
    let p = out.trace().re;
    if !(p >= MIN_HERALD_PROBABILITY) {
        return Err(LindbladError::Conditioning(p));
    }
    out /= C64::new(p, 0.0);
    Ok((p, DensityMatrix::from_matrix(out)?))
}

/// P = Tr[(|g1⟩⟨g1| ⊗ Σ_n P_n ⊗ 𝟙) ρ] and ρ_qubits = Tr_modes⟨g1|ρ|g1⟩/P
/// restricted to the qubit levels.
pub fn heralded_extract(rho: &DensityMatrix, space: &HilbertSpace) -> Result<(f64, DensityMatrix), LindbladError> {
    let basis: Vec<usize> = (0..space.total_dim()).collect();
    heralded_extract_on(rho.matrix(), space, &basis)
}

/// ⟨ψ|ρ|ψ⟩ for a normalized target.
pub fn fidelity(rho: &DensityMatrix, target: &[C64]) -> Result<f64, LindbladError> {
    if target.len() != rho.dim() {
        return Err(LindbladError::DimMismatch { expected: rho.dim(), got: target.len() });
    }
    let norm: f64 = target.iter().map(|x| x.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(LindbladError::Target(format!("norm² = {norm}")));
    }
    Ok(rho.overlap(target)?)
}

/// Full-system setup: Liouvillian on the dynamically reachable subspace.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub space: HilbertSpace,
    pub subspace: BasisSubspace,
    pub liouvillian: Liouvillian,
    pub rho0: DensityMatrix,
    pub observables: ObservableSet,
}

impl FullSystem {
    /// With `reduce`, keeps only the basis states reachable from the initial
    /// support under H_nh and the jump operators. The reduction is exact:
    /// every term of the generator maps operators supported on S×S into S×S.
    pub fn build(
        params: &SystemParams,
        amplitudes: Option<&[[C64; 2]]>,
        reduce: bool,
    ) -> Result<Self, LindbladError> {
        params.validate()?;
        let space = model::space_for(params)?;
        let h = build_hamiltonian(params, &space)?;
        let ls = build_lindblads(params, &space)?;
        let psi = model::initial_ket(params, &space, amplitudes)?;
        let dim = space.total_dim();
        let subspace = if reduce {
            let hnh = no_jump(&h, &ls)?;
            let seeds: Vec<usize> = (0..dim).filter(|&i| psi[i].norm() > 0.0).collect();
            let mut ops: Vec<&crate::qspace::SparseOperator> = vec![&hnh];
            ops.extend(ls.iter());
            BasisSubspace::reachable(dim, &seeds, &ops)
        } else {
            BasisSubspace::full(dim)
        };
        let hr = subspace.restrict(&h);
        let lr: Vec<_> = ls.iter().map(|l| subspace.restrict(l)).collect();
        let liouvillian = build_liouvillian(&hr, &lr)?;
        let rho0 = DensityMatrix::pure(&subspace.restrict_vector(&psi));
        let observables = ObservableSet::standard(&space, subspace.indices());
        Ok(Self {
            space,
            subspace,
            liouvillian,
            rho0,
            observables,
        })
    }

    pub fn evolve(&self, t_final: f64, opts: &EvolveOptions) -> Result<Trajectory, LindbladError> {
        evolve(&self.rho0, &self.liouvillian, t_final, opts, &self.observables)
    }

    pub fn herald(&self, rho: &DensityMatrix) -> Result<(f64, DensityMatrix), LindbladError> {
        heralded_extract_on(rho.matrix(), &self.space, self.subspace.indices())
    }

    /// Embeds a reduced-basis ρ in the full product space.
    pub fn embed(&self, rho: &DensityMatrix) -> DensityMatrix {
        let n = self.subspace.full_dim();
        let idx = self.subspace.indices();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(i, j)] = rho.matrix()[(a, b)];
            }
        }
        DensityMatrix::from_matrix(m).expect("square")
    }
}
