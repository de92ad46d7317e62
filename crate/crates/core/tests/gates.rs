mod common;

use std::f64::consts::PI;

use heralded_gates::effective::{effective_numeric, rate_models, RateModel, Taylor};
use heralded_gates::gates::{
    cz_metrics_analytic, cz_z_p, cz_z_p_limit, effective_metrics, gate_engines, toffoli_asymptotics, toffoli_metrics,
    tune_cz, tune_toffoli, GateError, GateKind, GateOptions, Scaling,
};
use heralded_gates::model::SystemParams;
use proptest::prelude::*;

fn toffoli_point(c_b: f64, lambda: f64, n: usize) -> SystemParams {
    let mut p = SystemParams::caption(c_b, lambda, 100.0);
    p.n_qutrits = n;
    p
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn toffoli_twenty_qubit_headline() {
    let r = toffoli_metrics(&toffoli_point(1e3, 5.0, 20), &GateOptions::default()).unwrap();
    assert!((r.success_probability - 0.9).abs() / 0.9 < 0.1);
    assert!((r.infidelity() - 2.0e-6).abs() / 2.0e-6 < 0.1);
    // Independent reimplementation of the same sums gave these values.
    assert!((r.success_probability - 0.89332).abs() < 1e-4);
    assert!((r.infidelity() - 2.0623e-6).abs() < 1e-9);
}

#[test]
fn toffoli_exact_sums_approach_asymptotics() {
    let r = toffoli_metrics(&toffoli_point(1e4, 5.0, 5), &GateOptions::default()).unwrap();
    let Some(Scaling::Toffoli(a)) = r.scaling else { panic!("missing scaling") };
    assert!((r.success_probability - a.success_probability).abs() / r.success_probability < 0.01);
    assert!((r.infidelity() - a.infidelity).abs() / r.infidelity() < 0.01);
}

#[test]
fn toffoli_error_scaling_exponents() {
    let grid: Vec<f64> = (0..25).map(|i| 10f64.powf(2.0 + 2.0 * i as f64 / 24.0)).collect();
    let (mut loss, mut err) = (Vec::new(), Vec::new());
    for &c_b in &grid {
        let r = toffoli_metrics(&toffoli_point(c_b, 5.0, 5), &GateOptions::default()).unwrap();
        loss.push(1.0 - r.success_probability);
        err.push(r.infidelity());
    }
    let sp = loglog_slope(&grid, &loss);
    let sf = loglog_slope(&grid, &err);
    assert!((sp + 0.5).abs() < 0.05, "1-P slope {sp}");
    assert!((sf + 1.0).abs() < 0.05, "1-F slope {sf}");
}

#[test]
fn toffoli_large_n_stays_finite() {
    let r = toffoli_metrics(&toffoli_point(1e3, 5.0, 30), &GateOptions::default()).unwrap();
    assert!(r.success_probability.is_finite() && r.success_probability > 0.0);
    assert!(r.infidelity().is_finite() && r.infidelity() > 0.0);
}

#[test]
fn toffoli_shape_factor_identity() {
    // R√C_B is exactly the asymptotic r once G = λ√C_B.
    for c_b in [1e2, 1e4] {
        let spec = tune_toffoli(&toffoli_point(c_b, 5.0, 3), &GateOptions::default()).unwrap();
        let r = ((1.0 / 25.0 + 2.0_f64) / 2.0).sqrt();
        assert!((spec.shape * c_b.sqrt() - r).abs() < 1e-12);
        let expect = c_b * (spec.shape + 1.0 / (5.0 * c_b.sqrt()));
        assert!((spec.delta_e2 - expect).abs() < 1e-9 * expect);
    }
}

#[test]
fn toffoli_decay_rates_equalize() {
    // Γ_0 = Γ_1 = Ω̃²/(2γαC_B) to leading order in 1/C_B.
    let mut last = f64::INFINITY;
    for c_b in [1e3, 1e5, 1e7] {
        let spec = tune_toffoli(&toffoli_point(c_b, 5.0, 5), &GateOptions::default()).unwrap();
        let om = spec.params.omega_tilde().unwrap();
        let pred = om * om / (2.0 * c_b);
        let g = spec.model.gammas();
        let dev = g[..2].iter().map(|x| (x / pred - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev < 3.0 / c_b, "C_B={c_b}: {dev}");
        assert!(dev < last);
        last = dev;
    }
}

#[test]
fn toffoli_phase_map_asymptotic() {
    // Δ_0/Δ_1 = O(1/C_B), so the truth table sharpens with cooperativity.
    let err = |c_b: f64| {
        let spec = tune_toffoli(&toffoli_point(c_b, 5.0, 5), &GateOptions::default()).unwrap();
        spec.phase_map_error(&spec.model)
    };
    let (e3, e5) = (err(1e3), err(1e5));
    assert!((e3 / e5 - 100.0).abs() < 5.0);
    assert!(err(1e9) < 1e-6);
}

#[test]
fn cz_phase_map_exact_with_corrections() {
    for c_b in [20.0, 170.0, 1e4] {
        let p = SystemParams::caption(c_b, 1.84, 420.0);
        let spec = tune_cz(&p, &GateOptions::default()).unwrap();
        assert!(spec.phase_map_error(&spec.model) < 1e-9);
        // The numeric Δ_n give their own t and corrections; still exact.
        let opts = GateOptions { rates: "numeric".into(), ..GateOptions::default() };
        let spec = tune_cz(&p, &opts).unwrap();
        assert!(spec.phase_map_error(&spec.model) < 1e-9);
    }
}

#[test]
fn cz_unit_fidelity_when_decay_is_uniform() {
    let p = SystemParams::caption(1e4, 1.84, 1e3);
    let r = cz_metrics_analytic(&p, &GateOptions::default()).unwrap();
    assert!((1.0 - r.conditional_fidelity).abs() < 1e-9);
    // At realistic cooperativity the residual Γ_n spread is visible.
    let r = cz_metrics_analytic(&SystemParams::caption(200.0, 1.84, 420.0), &GateOptions::default()).unwrap();
    assert!(r.infidelity() > 0.0 && r.infidelity() < 1e-5);
}

#[test]
fn cz_gamma_degeneracy_bound() {
    for c_b in [50.0, 200.0] {
        let p = SystemParams::caption(c_b, 1.84, 420.0);
        let spec = tune_cz(&p, &GateOptions::default()).unwrap();
        let dv = spec.params.validate().unwrap();
        let bound = 5.0 / (dv.g * dv.g).min(dv.c_b);
        assert!(spec.model.gamma_spread() < bound);
        assert!(effective_numeric(&spec.params).unwrap().gamma_spread() < bound);
    }
}

#[test]
fn cz_shape_arithmetic() {
    let spec = tune_cz(&SystemParams::caption(170.0, 1.84, 420.0), &GateOptions::default()).unwrap();
    let g = 1.84 * 170f64.sqrt();
    let d = ((1.0 / (g * g) + 1.0 / 170.0) / 2.0).sqrt();
    assert!((spec.shape - d).abs() < 1e-12);
    assert!((spec.delta_e2 - 170.0 * (d + 1.0 / g)).abs() < 1e-9);
    let s = &spec.stark;
    assert!((spec.duration * (s[2] - 2.0 * s[1] + s[0]).abs() - PI).abs() < 1e-9);
}

#[test]
fn cz_z_p_saturates_in_lambda() {
    let limit = cz_z_p_limit(1.0, 1.0);
    assert!((limit - 2.652).abs() < 5e-4);
    let gap = |lambda: f64| (cz_z_p(lambda, 1.0, 1.0) - limit).abs() / limit;
    // The approach is first order in 1/λ: about 1.8% at λ = 20, under 1%
    // from λ ≈ 37 on.
    assert!((gap(20.0) - 0.0182).abs() < 5e-4, "gap(20) = {}", gap(20.0));
    for lambda in [40.0, 100.0, 1000.0] {
        assert!(gap(lambda) < 0.01);
    }
    let ratio = gap(100.0) / gap(200.0);
    assert!((ratio - 2.0).abs() < 0.05);
    assert!(gap(2.0) > 0.05);
}

#[test]
fn cz_pulse_shortest_near_lambda_1_84() {
    for c_b in [100.0, 170.0, 1000.0] {
        let mut best = (0.0, f64::INFINITY);
        for i in 0..=300 {
            let lambda = 1.0 + i as f64 * 0.01;
            let t = tune_cz(&SystemParams::caption(c_b, lambda, 420.0), &GateOptions::default())
                .unwrap()
                .duration;
            if t < best.1 {
                best = (lambda, t);
            }
        }
        assert!((1.7..=2.0).contains(&best.0), "C_B={c_b}: minimizer {}", best.0);
    }
}

#[test]
fn cz_requires_two_qubits() {
    let mut p = SystemParams::caption(50.0, 1.84, 420.0);
    p.n_qutrits = 3;
    assert!(matches!(
        cz_metrics_analytic(&p, &GateOptions::default()),
        Err(GateError::WrongN { kind: GateKind::Cz, .. })
    ));
}

#[test]
fn effective_engine_agrees_with_exact_sums() {
    // Uniform input: the closed-form evolution reproduces the binomial sums
    // for P. The sums assume ideal phases; the residual Δ_0 and the spread
    // of Δ_{n>0} cost a little fidelity that vanishes at large C_B.
    let p = toffoli_point(500.0, 3.0, 6);
    let a = toffoli_metrics(&p, &GateOptions::default()).unwrap();
    let e = effective_metrics(GateKind::Toffoli, &p, &GateOptions::default()).unwrap();
    assert!((a.success_probability - e.success_probability).abs() < 1e-12);
    assert!(e.conditional_fidelity < a.conditional_fidelity);
    let p = toffoli_point(1e7, 3.0, 6);
    let a = toffoli_metrics(&p, &GateOptions::default()).unwrap();
    let e = effective_metrics(GateKind::Toffoli, &p, &GateOptions::default()).unwrap();
    assert!((a.conditional_fidelity - e.conditional_fidelity).abs() < 1e-12);
    // CZ: P = exp(−Γ_0 t) is exact only for uniform Γ_n.
    let p = SystemParams::caption(200.0, 1.84, 420.0);
    let a = cz_metrics_analytic(&p, &GateOptions::default()).unwrap();
    let e = gate_engines().create("effective").unwrap().run(GateKind::Cz, &p, &GateOptions::default()).unwrap();
    assert!((a.success_probability - e.success_probability).abs() < 0.01);
    assert!((a.conditional_fidelity - e.conditional_fidelity).abs() < 1e-12);
}

#[test]
fn asymptotic_factor_limits() {
    // N → ∞: 2^{−N}(1 + S_1) → 0, so T_p → 2r − 1/r.
    let a = toffoli_asymptotics(200, 5.0, 1.0, 1.0, 1e3);
    let r = ((0.04 + 2.0_f64) / 2.0).sqrt();
    assert!((a.t_p - (2.0 * r - 1.0 / r)).abs() < 0.02);
    assert!(a.t_f > 0.0);
}

fn drive_invariance(c_b: f64, lambda: f64, n: usize, scale: f64) -> (f64, f64, f64, f64) {
    let mut p = toffoli_point(c_b, lambda, n);
    let a = toffoli_metrics(&p, &GateOptions::default()).unwrap();
    p.omega1 *= scale;
    let b = toffoli_metrics(&p, &GateOptions::default()).unwrap();
    (a.success_probability, b.success_probability, a.infidelity(), b.infidelity())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn toffoli_metrics_independent_of_drive(
        log_cb in 1.0f64..4.0,
        lambda in 0.5f64..10.0,
        n in 1usize..12,
        scale in 0.1f64..4.0,
    ) {
        // Γ_n and Δ_n are both ∝ Ω̃², so Γ_n t_Toff is drive independent.
        let (pa, pb, fa, fb) = drive_invariance(10f64.powf(log_cb), lambda, n, scale);
        prop_assert!((pa - pb).abs() < 1e-12);
        // F sits next to 1, so its infidelity carries a few ulp of 1 in rounding.
        prop_assert!((fa - fb).abs() < 64.0 * f64::EPSILON);
    }

    #[test]
    fn reports_are_probabilities(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut p = common::random_params(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        p.n_qutrits = 2;
        for engine in ["analytic", "effective"] {
            for kind in [GateKind::Toffoli, GateKind::Cz] {
                let e = gate_engines().create(engine).unwrap();
                if let Ok(r) = e.run(kind, &p, &GateOptions::default()) {
                    prop_assert!((0.0..=1.0 + 1e-9).contains(&r.success_probability));
                    prop_assert!((0.0..=1.0 + 1e-9).contains(&r.conditional_fidelity));
                    prop_assert!(r.duration > 0.0);
                }
            }
        }
    }

    #[test]
    fn cz_corrections_are_unitary(log_cb in 1.0f64..4.0, lambda in 0.5f64..10.0) {
        let spec = tune_cz(&SystemParams::caption(10f64.powf(log_cb), lambda, 420.0), &GateOptions::default()).unwrap();
        for u in spec.correction_diagonal() {
            prop_assert!((u.norm() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn tuning_uses_selected_rate_model() {
    let p = SystemParams::caption(170.0, 1.84, 420.0);
    let taylor = tune_cz(&p, &GateOptions::default()).unwrap();
    let numeric = tune_cz(&p, &GateOptions { rates: "numeric".into(), ..GateOptions::default() }).unwrap();
    assert_eq!(taylor.model, Taylor.model(&taylor.params, &Default::default()).unwrap());
    let direct = rate_models().create("numeric").unwrap().model(&numeric.params, &Default::default()).unwrap();
    assert_eq!(numeric.model, direct);
    assert!((taylor.duration - numeric.duration).abs() / taylor.duration < 0.05);
}

