//! N-controlled phase gate: π on the all-zeros register state only.

use std::f64::consts::{LN_2, PI};

use crate::model::SystemParams;

use super::sums::{binomial_weighted_exp, ln_binomial, neumaier};
use super::{tuning_model, GateError, GateKind, GateOptions, GateReport, GateSpec, ReportProvenance, Scaling};

/// δ = 0, Δ_e2 = γαC_B(R + 1/G) with R = √(½(1/G² + β/(αC_B) + 1/C_B)),
/// pulse t = π/|Δ_1|.
pub fn tune_toffoli(p: &SystemParams, opts: &GateOptions) -> Result<GateSpec, GateError> {
    let dv = p.validate()?;
    if p.n_qutrits == 0 {
        return Err(GateError::WrongN { kind: GateKind::Toffoli, expected: 1, got: 0 });
    }
    let r = (0.5 * (1.0 / (dv.g * dv.g) + dv.beta / (dv.alpha * dv.c_b) + 1.0 / dv.c_b)).sqrt();
    let mut tuned = p.clone();
    tuned.delta = 0.0;
    tuned.delta_e2 = dv.gamma * dv.alpha * dv.c_b * (r + 1.0 / dv.g);
    let model = tuning_model(&tuned, opts)?;
    let d1 = model.rates[1].delta_n;
    if !(d1.abs() >= 1e-14 * dv.gamma) {
        return Err(GateError::Degenerate(format!("|Δ_1| = {:e}", d1.abs())));
    }
    Ok(GateSpec {
        kind: GateKind::Toffoli,
        delta: tuned.delta,
        delta_e2: tuned.delta_e2,
        params: tuned,
        shape: r,
        duration: PI / d1.abs(),
        stark: model.stark(),
        correction_phases: None,
        model,
    })
}

/// Leading-order large-C_B behaviour: P ≈ 1 − T_p π/√C_B and
/// 1 − F ≈ T_f π²/C_B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToffoliAsymptotics {
    pub t_p: f64,
    pub t_f: f64,
    pub success_probability: f64,
    pub infidelity: f64,
}

pub fn toffoli_asymptotics(n: usize, lambda: f64, alpha: f64, beta: f64, c_b: f64) -> ToffoliAsymptotics {
    let r = ((1.0 / (lambda * lambda) + beta / alpha + 1.0) / 2.0).sqrt();
    let s = |x: f64| neumaier((1..=n).map(|k| (ln_binomial(n, k) - x * (k as f64).ln()).exp()));
    let half_n = n as f64 * LN_2;
    // 2^{-N}(1 + S_x), kept in log space before the final exponent.
    let a1 = ((1.0 + s(1.0)).ln() - half_n).exp();
    let a2 = ((1.0 + s(2.0)).ln() - half_n).exp();
    let t_p = 2.0 * r + (a1 - 1.0) / r;
    let t_f = (a2 - a1 * a1) / (4.0 * r * r);
    ToffoliAsymptotics {
        t_p,
        t_f,
        success_probability: 1.0 - t_p * PI / c_b.sqrt(),
        infidelity: t_f * PI * PI / c_b,
    }
}

/// P = 2^{−N} Σ C(N,n) e^{−Γ_n t}, F = [Σ C(N,n) e^{−Γ_n t/2}]²/(4^N P) for
/// the uniform input, plus the asymptotic forms.
pub fn toffoli_metrics(p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
    let spec = tune_toffoli(p, opts)?;
    let (prob, f) = toffoli_sums(&spec.model.gammas(), spec.duration);
    let mut report = GateReport::new(&spec, prob, f, ReportProvenance::AnalyticAsymptotic)?;
    let dv = spec.params.validate()?;
    report.scaling = Some(Scaling::Toffoli(toffoli_asymptotics(
        p.n_qutrits,
        dv.lambda,
        dv.alpha,
        dv.beta,
        dv.c_b,
    )));
    Ok(report)
}

/// (P, F) from Γ_0..Γ_N and the pulse length.
pub fn toffoli_sums(gammas: &[f64], t: f64) -> (f64, f64) {
    let n = gammas.len() - 1;
    let ln2n = n as f64 * LN_2;
    let ln_p = binomial_weighted_exp(n, |k| -gammas[k] * t) - ln2n;
    let ln_s = binomial_weighted_exp(n, |k| -gammas[k] * t / 2.0);
    (ln_p.exp(), (2.0 * ln_s - 2.0 * ln2n - ln_p).exp())
}
