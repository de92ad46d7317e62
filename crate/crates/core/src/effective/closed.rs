//! Closed-form effective rates.
//!
//! Three variants ordered by approximation level: the exact inversion (with
//! auxiliary X_n and Z), its expansion in Ω₂/Δ_e1 (auxiliary Y_n), and the
//! further κ ≪ J simplification (auxiliary 𝒵_n).

use crate::model::SystemParams;
use crate::qspace::C64;

use super::{ComplexDetunings, EffectiveError, Provenance, RateModel, RateOptions, RateSet};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn nonzero(z: C64, n: usize, what: &'static str) -> Result<C64, EffectiveError> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(EffectiveError::Singular { n, what });
    }
    Ok(z)
}

struct Groups {
    gamma: f64,
    c_a: f64,
    c_b: f64,
    alpha: f64,
    beta: f64,
    g: f64,
    d: ComplexDetunings,
}

fn groups(p: &SystemParams) -> Result<Groups, EffectiveError> {
    let dv = p.validate()?;
    Ok(Groups {
        gamma: dv.gamma,
        c_a: dv.c_a,
        c_b: dv.c_b,
        alpha: dv.alpha,
        beta: dv.beta,
        g: dv.g,
        d: ComplexDetunings::new(p),
    })
}

/// Exact inversion in closed form. Stark shift from
/// Δ_n = −(Ω₁/(2√γ_g1)) Re r_g1,n.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactAppendix;

impl RateModel for ExactAppendix {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Exact
    }

    fn rates(&self, p: &SystemParams, n: usize, opts: &RateOptions) -> Result<RateSet, EffectiveError> {
        if p.gamma_g1 <= 0.0 {
            return Err(EffectiveError::NeedsGammaG1);
        }
        let Groups { gamma, c_a, c_b, d, .. } = groups(p)?;
        let nf = n as f64;
        let (dt, d1, d2, jt) = (d.delta_tilde, d.delta_e1_tilde, d.delta_e2_tilde, d.j_tilde);
        let om = p.omega2 / gamma;
        let z = d1 * d2 - c((om / 2.0).powi(2));
        let q = c(1.0) - I / (jt * 2.0);
        let x = I * z * dt + (dt * d1 * c_a + z * (nf * c_b)) * q - d1 * (2.0 * nf * c_a * c_b) / jt;
        let x = nonzero(x, n, "X_n")?;
        let o1 = p.omega1;
        let s2g = (2.0 * gamma).sqrt();
        let r_plus = (I * dt + c(2.0 * nf * c_b)) * (o1 * om * c_a.sqrt()) / (jt * x * 4.0 * s2g);
        let r_minus = -(dt - c(nf * c_b) / jt) * (o1 * om * c_a.sqrt()) / (x * 2.0 * s2g);
        let y = I * dt * d2 + (dt * c_a + d2 * (nf * c_b)) * q - c(2.0 * nf * c_a * c_b) / jt;
        let r_g1 = y * (o1 * p.gamma_g1.sqrt()) / (x * 2.0 * gamma);
        let w = I * dt + q * (nf * c_b);
        let r_g2 = -w * (o1 * om * p.gamma_g2.sqrt()) / (x * 4.0 * gamma);
        let qk = (c(1.0) + I / (jt * 2.0)) * (o1 * om * (c_a * c_b).sqrt()) / (x * 4.0 * gamma);
        let (r0, r1) = if n > 0 {
            (-qk * p.gamma0.sqrt(), -qk * p.gamma1.sqrt())
        } else {
            (c(0.0), c(0.0))
        };
        let mut delta_n = -(o1 / (2.0 * p.gamma_g1.sqrt())) * r_g1.re;
        if !opts.keep_constant_shift {
            delta_n -= super::constant_shift(p);
        }
        Ok(RateSet::new(n, delta_n, [r_plus, r_minus, r_g1, r_g2, r0, r1]))
    }
}

/// Leading order in Ω₂/Δ_e1 with finite κ/J.
#[derive(Debug, Default, Clone, Copy)]
pub struct AppendixTaylor;

impl RateModel for AppendixTaylor {
    fn name(&self) -> &'static str {
        "appendix-taylor"
    }

    fn provenance(&self) -> Provenance {
        Provenance::AppendixTaylor
    }

    fn rates(&self, p: &SystemParams, n: usize, opts: &RateOptions) -> Result<RateSet, EffectiveError> {
        let Groups { gamma, c_a, c_b, d, .. } = groups(p)?;
        let omt = p.omega_tilde()?;
        let nf = n as f64;
        let (dt, d2, jt) = (d.delta_tilde, d.delta_e2_tilde, d.j_tilde);
        let q = c(1.0) - I / (jt * 2.0);
        let w = I * dt + q * (nf * c_b);
        let y = I * dt * d2 + (dt * c_a + d2 * (nf * c_b)) * q - c(2.0 * nf * c_a * c_b) / jt;
        let y = nonzero(y, n, "Y_n")?;
        let s2g = (2.0 * gamma).sqrt();
        let mut delta_n = -(omt * omt / (4.0 * gamma)) * (w / y).re;
        if opts.keep_constant_shift {
            delta_n += super::constant_shift(p);
        }
        let r_plus = (I * dt + c(2.0 * nf * c_b)) * (omt * c_a.sqrt()) / (jt * y * 2.0 * s2g);
        let r_minus = -(dt - c(nf * c_b) / jt) * (omt * c_a.sqrt()) / (y * s2g);
        let g1_tilde = p.gamma_g1 * p.omega2 * p.omega2 / (4.0 * p.delta_e1 * p.delta_e1);
        let r_g1 = c(p.omega1 * p.gamma_g1.sqrt() / (2.0 * p.delta_e1)) + w * (omt * g1_tilde.sqrt()) / (y * 2.0 * gamma);
        let r_g2 = -w * (omt * p.gamma_g2.sqrt()) / (y * 2.0 * gamma);
        let qk = (c(1.0) + I / (jt * 2.0)) * (omt * (c_a * c_b).sqrt()) / (y * 2.0 * gamma);
        let (r0, r1) = if n > 0 {
            (-qk * p.gamma0.sqrt(), -qk * p.gamma1.sqrt())
        } else {
            (c(0.0), c(0.0))
        };
        Ok(RateSet::new(n, delta_n, [r_plus, r_minus, r_g1, r_g2, r0, r1]))
    }
}

/// Leading order in Ω₂/Δ_e1 and κ/J; the default for gate tuning.
#[derive(Debug, Default, Clone, Copy)]
pub struct Taylor;

impl RateModel for Taylor {
    fn name(&self) -> &'static str {
        "taylor"
    }

    fn provenance(&self) -> Provenance {
        Provenance::Taylor
    }

    fn rates(&self, p: &SystemParams, n: usize, opts: &RateOptions) -> Result<RateSet, EffectiveError> {
        let Groups { gamma, c_b, alpha, beta, g, d, .. } = groups(p)?;
        let omt = p.omega_tilde()?;
        let nf = n as f64;
        let (dt, d2) = (d.delta_tilde, d.delta_e2_tilde);
        let zn = I * dt * d2 + (dt * alpha + d2 * nf) * c_b - c(nf * alpha * c_b * c_b / g);
        let zn = nonzero(zn, n, "Z_n")?;
        let s2g = (2.0 * gamma).sqrt();
        let mut delta_n = -(omt * omt / (4.0 * gamma)) * ((I * dt + c(nf * c_b)) / zn).re;
        if opts.keep_constant_shift {
            delta_n += super::constant_shift(p);
        }
        let ac = (alpha * c_b).sqrt();
        let r_plus = (I * dt + c(2.0 * nf * c_b)) * (omt * ac) / (zn * (4.0 * g * s2g));
        let r_minus = -(dt - c(nf * c_b / (2.0 * g))) * (omt * ac) / (zn * s2g);
        let r_g1 = c(p.omega1 * p.gamma_g1.sqrt() / (2.0 * p.delta_e1));
        let r_g2 = -(I * dt + c(nf * c_b)) * (omt * beta.sqrt()) / (zn * (2.0 * gamma.sqrt()));
        let (r0, r1) = if n > 0 {
            let k = |gx: f64| -c(omt * (alpha * gx).sqrt() * c_b / (2.0 * gamma)) / zn;
            (k(p.gamma0), k(p.gamma1))
        } else {
            (c(0.0), c(0.0))
        };
        Ok(RateSet::new(n, delta_n, [r_plus, r_minus, r_g1, r_g2, r0, r1]))
    }
}
