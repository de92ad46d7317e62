#![allow(dead_code)]

use heralded_gates::model::SystemParams;
use rand::Rng;

/// Random parameter set inside the weak-drive regime.
pub fn random_params<R: Rng>(rng: &mut R) -> SystemParams {
    let gamma0 = rng.gen_range(0.2..1.0);
    let gamma1 = rng.gen_range(0.2..1.0);
    let gamma = gamma0 + gamma1;
    let kappa = rng.gen_range(0.5..20.0);
    let c_b: f64 = 10f64.powf(rng.gen_range(0.7..2.7));
    let alpha: f64 = rng.gen_range(0.5..2.0);
    let lambda = rng.gen_range(0.5..5.0);
    let g_b = (c_b * kappa * gamma).sqrt();
    let mag = rng.gen_range(20.0..500.0);
    let delta_e1 = if rng.gen_bool(0.5) { mag } else { -mag };
    SystemParams {
        n_qutrits: rng.gen_range(1..=4),
        gamma0,
        gamma1,
        gamma_g1: rng.gen_range(0.2..2.0),
        gamma_g2: rng.gen_range(0.2..2.0),
        kappa,
        g_a: alpha.sqrt() * g_b,
        g_b,
        j: lambda * kappa * c_b.sqrt(),
        omega1: rng.gen_range(0.01..0.15) * mag,
        omega2: rng.gen_range(0.01..0.15) * mag,
        delta: rng.gen_range(-2.0..2.0),
        delta_e1,
        delta_e2: rng.gen_range(-50.0..50.0),
        n_max: 2,
        gamma_mhz: None,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
