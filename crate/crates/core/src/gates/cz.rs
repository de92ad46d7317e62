//! Two-qubit controlled-Z: π on |11⟩ after single-qubit phase corrections.

use std::f64::consts::PI;

use crate::effective::evolve_effective;
use crate::lindblad::fidelity;
use crate::model::{DensityMatrix, SystemParams};

use super::{
    check_cz_n, input_register, tuning_model, GateError, GateKind, GateOptions, GateReport, GateSpec,
    ReportProvenance, Scaling,
};

/// δ/γ = 1/(2(2D + 1/G)), Δ_e2/γ = αC_B(D + 1/G) with
/// D = √((1/G² + β/(αC_B))/2); pulse t = π/|Δ_2 − 2Δ_1 + Δ_0|.
pub fn tune_cz(p: &SystemParams, opts: &GateOptions) -> Result<GateSpec, GateError> {
    let dv = p.validate()?;
    if p.n_qutrits < 2 {
        return Err(GateError::WrongN { kind: GateKind::Cz, expected: 2, got: p.n_qutrits });
    }
    let d = ((1.0 / (dv.g * dv.g) + dv.beta / (dv.alpha * dv.c_b)) / 2.0).sqrt();
    let mut tuned = p.clone();
    tuned.delta = dv.gamma / (2.0 * (2.0 * d + 1.0 / dv.g));
    tuned.delta_e2 = dv.gamma * dv.alpha * dv.c_b * (d + 1.0 / dv.g);
    let model = tuning_model(&tuned, opts)?;
    let s = model.stark();
    let curvature = s[2] - 2.0 * s[1] + s[0];
    if !(curvature.abs() >= 1e-14 * dv.gamma) {
        return Err(GateError::Degenerate(format!("|Δ_2 − 2Δ_1 + Δ_0| = {:e}", curvature.abs())));
    }
    let t = PI / curvature.abs();
    Ok(GateSpec {
        kind: GateKind::Cz,
        delta: tuned.delta,
        delta_e2: tuned.delta_e2,
        params: tuned,
        shape: d,
        duration: t,
        correction_phases: Some([s[0] * t / 2.0, (2.0 * s[1] - s[0]) * t / 2.0]),
        stark: s,
        model,
    })
}

/// Z_p = 2d + 3/(2(2d + 1/λ)) + 1/(4d(2d + 1/λ)²), d = √((1/λ² + β/α)/2).
pub fn cz_z_p(lambda: f64, alpha: f64, beta: f64) -> f64 {
    let d = ((1.0 / (lambda * lambda) + beta / alpha) / 2.0).sqrt();
    let u = 2.0 * d + 1.0 / lambda;
    2.0 * d + 3.0 / (2.0 * u) + 1.0 / (4.0 * d * u * u)
}

/// λ → ∞ limit: 2d + 3/(4d) + 1/(16d³).
pub fn cz_z_p_limit(alpha: f64, beta: f64) -> f64 {
    let d = (beta / (2.0 * alpha)).sqrt();
    2.0 * d + 3.0 / (4.0 * d) + 1.0 / (16.0 * d.powi(3))
}

/// P = exp(−Γ_0 t_CZ) with the asymptotic 1 − Z_p π/√C_B attached; the
/// fidelity is that of the corrected effective evolution.
pub fn cz_metrics_analytic(p: &SystemParams, opts: &GateOptions) -> Result<GateReport, GateError> {
    check_cz_n(p)?;
    let spec = tune_cz(p, opts)?;
    let prob = (-spec.model.rates[0].gamma_n * spec.duration).exp();
    let psi = input_register(p.n_qutrits, opts);
    let (_, rho) = evolve_effective(&DensityMatrix::pure(&psi), &spec.model, spec.duration)?;
    let f = fidelity(&spec.rotate(&rho)?, &spec.target(&psi))?;
    let mut report = GateReport::new(&spec, prob, f, ReportProvenance::AnalyticAsymptotic)?;
    let dv = spec.params.validate()?;
    let z_p = cz_z_p(dv.lambda, dv.alpha, dv.beta);
    report.scaling = Some(Scaling::Cz { z_p, success_probability: 1.0 - z_p * PI / dv.c_b.sqrt() });
    Ok(report)
}
