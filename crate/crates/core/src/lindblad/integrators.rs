//! Time-stepping engines for the linear system dρ/dt = 𝓛ρ.


use nalgebra::{DMatrix, DVector};

use crate::qspace::C64;
use crate::registry::Registry;

use super::{EvolveOptions, LindbladError, Liouvillian};

/// Per-step callback: receives the time and the state after each accepted
/// step and may adjust the state in place (symmetrization) or abort.
pub type StepHook<'a> = dyn FnMut(f64, &mut [C64]) -> Result<(), LindbladError> + 'a;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

pub trait Integrator: Send {
    fn name(&self) -> &'static str;

    /// Advances `y` from `t0` to exactly `t1`.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        liou: &Liouvillian,
        y: &mut Vec<C64>,
        t0: f64,
        t1: f64,
        opts: &EvolveOptions,
        hook: &mut StepHook<'_>,
        stats: &mut StepStats,
    ) -> Result<(), LindbladError>;
}

pub fn integrators() -> Registry<dyn Integrator> {
    let mut r: Registry<dyn Integrator> = Registry::new("integrator");
    r.register("dopri5", || Box::new(Dopri5::default()));
    r.register("rk4", || Box::new(Rk4));
    r.register("propagator", || Box::new(Propagator::default()));
    r
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut s = C64::new(0.0, 0.0);
        for (c, k) in terms {
            if *c != 0.0 {
                s += k[i] * *c;
            }
        }
        out[i] = y[i] + s * h;
    }
}

/// Dormand–Prince 5(4) with PI step-size control.
#[derive(Debug, Default)]
pub struct Dopri5 {
    h: Option<f64>,
    err_old: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl Dopri5 {
    fn scaled_norm(v: &[C64], y: &[C64], y2: &[C64], opts: &EvolveOptions) -> f64 {
        let mut s = 0.0;
        for i in 0..v.len() {
            let sc = opts.atol + opts.rtol * y[i].norm().max(y2[i].norm());
            s += (v[i].norm() / sc).powi(2);
        }
        (s / v.len() as f64).sqrt()
    }

    fn initial_step(liou: &Liouvillian, y: &[C64], opts: &EvolveOptions) -> f64 {
        let mut f = vec![C64::new(0.0, 0.0); y.len()];
        liou.apply_into(y, &mut f);
        let d0 = Self::scaled_norm(y, y, y, opts);
        let d1 = Self::scaled_norm(&f, y, y, opts);
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        match opts.max_step {
            Some(m) => h.min(m),
            None => h,
        }
    }
}

impl Integrator for Dopri5 {
    fn name(&self) -> &'static str {
        "dopri5"
    }

    fn advance(
        &mut self,
        liou: &Liouvillian,
        y: &mut Vec<C64>,
        t0: f64,
        t1: f64,
        opts: &EvolveOptions,
        hook: &mut StepHook<'_>,
        stats: &mut StepStats,
    ) -> Result<(), LindbladError> {
        let n = y.len();
        let z = C64::new(0.0, 0.0);
        let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![z; n]).collect();
        let mut tmp = vec![z; n];
        let mut ynew = vec![z; n];
        let mut err = vec![z; n];
        let mut t = t0;
        let mut h = self.h.unwrap_or_else(|| Self::initial_step(liou, y, opts));
        if self.err_old == 0.0 {
            self.err_old = 1e-4;
        }
        liou.apply_into(y, &mut k[0]);
        stats.rhs_evals += 1;
        let mut rejected_last = false;
        while t < t1 {
            if let Some(m) = opts.max_step {
                h = h.min(m);
            }
            let last = t + h >= t1 || (t1 - (t + h)) < 1e-12 * t1.abs().max(1.0);
            let h_step = if last { t1 - t } else { h };
            if h_step <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(LindbladError::StepUnderflow { t, h: h_step });
            }
            {
                let (k0, rest) = k.split_at_mut(1);
                axpy_into(&mut tmp, y, h_step, &[(A21, &k0[0])]);
                liou.apply_into(&tmp, &mut rest[0]);
            }
            axpy_into(&mut tmp, y, h_step, &[(A31, &k[0]), (A32, &k[1])]);
            liou.apply_into(&tmp, &mut k[2]);
            axpy_into(&mut tmp, y, h_step, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
            liou.apply_into(&tmp, &mut k[3]);
            axpy_into(
                &mut tmp,
                y,
                h_step,
                &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])],
            );
            liou.apply_into(&tmp, &mut k[4]);
            axpy_into(
                &mut tmp,
                y,
                h_step,
                &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])],
            );
            liou.apply_into(&tmp, &mut k[5]);
            axpy_into(
                &mut ynew,
                y,
                h_step,
                &[(A71, &k[0]), (A73, &k[2]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])],
            );
            liou.apply_into(&ynew, &mut k[6]);
            stats.rhs_evals += 6;
            for i in 0..n {
                err[i] = (k[0][i] * E1
                    + k[2][i] * E3
                    + k[3][i] * E4
                    + k[4][i] * E5
                    + k[5][i] * E6
                    + k[6][i] * E7)
                    * h_step;
            }
            let e = Self::scaled_norm(&err, y, &ynew, opts);
            if !e.is_finite() {
                return Err(LindbladError::NonFinite { t });
            }
            if e <= 1.0 {
                t = if last { t1 } else { t + h_step };
                std::mem::swap(y, &mut ynew);
                hook(t, y)?;
                // The hook may have modified y; refresh the FSAL slope.
                liou.apply_into(y, &mut k[0]);
                stats.rhs_evals += 1;
                stats.accepted += 1;
                let e_c = e.max(1e-10);
                let mut fac = 0.9 * e_c.powf(-0.14) * self.err_old.powf(0.08);
                fac = fac.clamp(0.2, 10.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                self.err_old = e_c.max(1e-4);
                if !last {
                    h = h_step * fac;
                }
                rejected_last = false;
            } else {
                stats.rejected += 1;
                let fac = (0.9 * e.powf(-0.2)).max(0.2);
                h = h_step * fac;
                rejected_last = true;
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(LindbladError::StepUnderflow { t, h });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

/// Classical fixed-step fourth-order Runge–Kutta.
#[derive(Debug, Default)]
pub struct Rk4;

impl Integrator for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn advance(
        &mut self,
        liou: &Liouvillian,
        y: &mut Vec<C64>,
        t0: f64,
        t1: f64,
        opts: &EvolveOptions,
        hook: &mut StepHook<'_>,
        stats: &mut StepStats,
    ) -> Result<(), LindbladError> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let h_req = opts.step.or(opts.max_step).unwrap_or(1e-3);
        if h_req <= 0.0 {
            return Err(LindbladError::StepUnderflow { t: t0, h: h_req });
        }
        let steps = (span / h_req).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let n = y.len();
        let z = C64::new(0.0, 0.0);
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![z; n], vec![z; n], vec![z; n], vec![z; n], vec![z; n]);
        for s in 0..steps {
            liou.apply_into(y, &mut k1);
            axpy_into(&mut tmp, y, 0.5 * h, &[(1.0, &k1)]);
            liou.apply_into(&tmp, &mut k2);
            axpy_into(&mut tmp, y, 0.5 * h, &[(1.0, &k2)]);
            liou.apply_into(&tmp, &mut k3);
            axpy_into(&mut tmp, y, h, &[(1.0, &k3)]);
            liou.apply_into(&tmp, &mut k4);
            for i in 0..n {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            stats.rhs_evals += 4;
            stats.accepted += 1;
            let t = if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * h };
            hook(t, y)?;
        }
        Ok(())
    }
}

/// Largest superoperator dimension accepted by [`Propagator`].
pub const PROPAGATOR_MAX_DIM: usize = 4096;

/// Exact stepping with the dense propagator exp(𝓛h), one matrix
/// exponential per distinct interval length.
#[derive(Debug, Default)]
pub struct Propagator {
    dense: Option<DMatrix<C64>>,
    /// exp(𝓛h) by step length. Uniform output grids produce step lengths
    /// that differ only in the last bits, so lookups match within
    /// [`PROPAGATOR_STEP_RTOL`].
    cache: Vec<(f64, DMatrix<C64>)>,
}

pub const PROPAGATOR_STEP_RTOL: f64 = 1e-12;

impl Integrator for Propagator {
    fn name(&self) -> &'static str {
        "propagator"
    }

    fn advance(
        &mut self,
        liou: &Liouvillian,
        y: &mut Vec<C64>,
        t0: f64,
        t1: f64,
        opts: &EvolveOptions,
        hook: &mut StepHook<'_>,
        stats: &mut StepStats,
    ) -> Result<(), LindbladError> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        if liou.dim() > PROPAGATOR_MAX_DIM {
            return Err(LindbladError::TooLarge {
                dim: liou.dim(),
                max: PROPAGATOR_MAX_DIM,
            });
        }
        let dense = self
            .dense
            .get_or_insert_with(|| liou.superoperator().to_dense());
        // Split long intervals only when a step cap is requested.
        let steps = match opts.step {
            Some(h) if h > 0.0 => (span / h).ceil().max(1.0) as usize,
            _ => 1,
        };
        let h = span / steps as f64;
        let k = match self.cache.iter().position(|(hc, _)| (hc - h).abs() <= PROPAGATOR_STEP_RTOL * h) {
            Some(k) => k,
            None => {
                self.cache.push((h, (&*dense * C64::new(h, 0.0)).exp()));
                self.cache.len() - 1
            }
        };
        let prop = &self.cache[k].1;
        for s in 0..steps {
            let v = DVector::from_column_slice(y);
            let out = prop * v;
            y.copy_from_slice(out.as_slice());
            stats.accepted += 1;
            let t = if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * h };
            hook(t, y)?;
        }
        Ok(())
    }
}
