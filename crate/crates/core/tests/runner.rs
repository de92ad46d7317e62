use std::process::Command;

use heralded_gates::gates::{gate_engines, GateKind};
use heralded_gates::runner::{compare_engines, preset, run_sweep, AxisSpec, SweepConfig, PRESETS};

fn config(name: &str) -> SweepConfig {
    SweepConfig::from_toml(preset(name).unwrap()).unwrap()
}

fn csv_without_wall(bytes: &[u8]) -> Vec<Vec<String>> {
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rd.headers().unwrap().clone();
    let wall = headers.iter().position(|h| h == "wall_s");
    rd.records()
        .map(|r| {
            r.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != wall)
                .map(|(_, f)| f.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn presets_parse_and_validate() {
    assert_eq!(PRESETS.len(), 9);
    for (name, _) in PRESETS {
        let c = config(name);
        let mut engines = vec![c.engine.clone()];
        engines.extend(c.compare.iter().cloned());
        let points = c.validate(&engines).unwrap();
        assert!(!points.is_empty(), "{name}");
        assert!(points.iter().all(|p| p.params.is_ok()), "{name}");
        assert!(points.len() <= 100, "{name}");
    }
}

#[test]
fn maximal_figure_pairs_share_grids() {
    for (a, b) in [("fig3a", "fig4a"), ("fig3b", "fig4b"), ("fig5a", "fig6a"), ("fig5b", "fig6b")] {
        let (ca, cb) = (config(a), config(b));
        assert_eq!(ca.points().unwrap().len(), cb.points().unwrap().len());
        assert_eq!(ca.base, cb.base);
    }
}

#[test]
fn toffoli_cooperativity_sweep_trends() {
    let res = run_sweep(&config("fig3a")).unwrap();
    assert_eq!(res.failures(), 0);
    assert_eq!(res.rows.len(), 100);
    for series in res.rows.chunks(25) {
        let reps: Vec<_> = series.iter().map(|r| r.outcome.as_ref().unwrap()).collect();
        for w in reps.windows(2) {
            assert!(w[1].success_probability > w[0].success_probability);
            assert!(w[1].infidelity() < w[0].infidelity());
        }
    }
    // Larger registers herald more reliably: the n = 0 weight 2^-N that
    // dominates the loss term shrinks, so both P and F grow with N.
    for i in 0..25 {
        let reps: Vec<_> = (0..4).map(|s| res.rows[s * 25 + i].outcome.as_ref().unwrap()).collect();
        for w in reps.windows(2) {
            assert!(w[1].success_probability > w[0].success_probability, "point {i}");
            assert!(w[1].infidelity() < w[0].infidelity(), "point {i}");
        }
    }
}

#[test]
fn toffoli_lambda_sweep_is_finite() {
    let res = run_sweep(&config("fig3b")).unwrap();
    assert_eq!(res.failures(), 0);
    for r in &res.rows {
        let rep = r.outcome.as_ref().unwrap();
        assert!(rep.success_probability > 0.0 && rep.success_probability < 1.0);
        assert!(rep.infidelity() >= 0.0 && rep.infidelity() < 1.0);
    }
}

#[test]
fn cz_sweeps_with_analytic_engine() {
    for name in ["fig5a", "fig5b"] {
        let mut c = config(name);
        c.engine = "analytic".into();
        let res = run_sweep(&c).unwrap();
        assert_eq!(res.failures(), 0, "{name}");
        assert_eq!(res.rows.len(), 40);
    }
}

#[test]
fn cz_lambda_preset_single_full_point() {
    let mut c = config("fig5b");
    c.series = Some(AxisSpec::from_values(c.series.unwrap().axis, vec![50.0]));
    c.sweep = AxisSpec::from_values(c.sweep.axis, vec![5.0]);
    let res = compare_engines(&c).unwrap();
    assert_eq!(res.failures(), 0);
    let (dp, _) = res.deviation(0, 0).unwrap();
    assert!(dp < 0.05, "dP = {dp}");
}

#[test]
fn csv_is_deterministic_apart_from_wall_time() {
    let c = config("fig3a");
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_sweep(&c).unwrap().write_csv(&mut a).unwrap();
    run_sweep(&SweepConfig { workers: Some(3), ..c }).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(csv_without_wall(&a), csv_without_wall(&b));
}

#[test]
fn csv_echoes_config() {
    let c = config("fig3b");
    let mut out = Vec::new();
    run_sweep(&c).unwrap().write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let echo: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| !l.starts_with("engine = "))
        .collect::<Vec<_>>()
        .join("\n");
    assert_eq!(SweepConfig::from_toml(&echo).unwrap(), c);
}

#[test]
fn single_point_grid_matches_direct_evaluation() {
    let mut c = config("fig3a");
    c.series = None;
    c.base.n_qutrits = Some(7);
    c.sweep = AxisSpec::from_values(c.sweep.axis, vec![321.0]);
    let res = run_sweep(&c).unwrap();
    let got = res.rows[0].outcome.as_ref().unwrap();

    let p = res.rows[0].point.params.clone().unwrap();
    let direct = gate_engines()
        .create("analytic")
        .unwrap()
        .run(GateKind::Toffoli, &p, &c.gate_options())
        .unwrap();
    assert_eq!(got, &direct);
    assert_eq!(got.n_qutrits, 7);
    assert!((got.c_b - 321.0).abs() < 1e-9);
}

#[test]
fn effective_full_gap_shrinks_quadratically_with_drive() {
    let gap = |omega1: f64| {
        let c = SweepConfig::from_toml(&format!(
            "kind = \"cz\"\nengine = \"full\"\ncompare = [\"effective\"]\nrates = \"numeric\"\n\
             [base]\nN = 2\nlambda = 1.84\nDelta_e1 = 200.0\nOmega1 = {omega1}\nOmega2 = 10.0\n\
             [sweep]\naxis = \"C_B\"\nvalues = [50.0]\n[integrator]\nname = \"propagator\""
        ))
        .unwrap();
        compare_engines(&c).unwrap().deviation(0, 0).unwrap()
    };
    let (p1, f1) = gap(20.0);
    let (p2, f2) = gap(10.0);
    let ratio = p1 / p2;
    assert!((3.0..5.0).contains(&ratio), "dP {p1:e} -> {p2:e}");
    assert!(f2 < f1 / 4.0, "dF {f1:e} -> {f2:e}");
}

fn heralded(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_heralded")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    assert_eq!(heralded(&["presets"]).status.code(), Some(0));
    assert_eq!(heralded(&["sweep", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(heralded(&["sweep", "fig3a", "--engine", "bogus"]).status.code(), Some(1));
    assert_eq!(heralded(&["sweep", "fig5a", "--rates", "bogus"]).status.code(), Some(1));
    assert_eq!(heralded(&["gate", "cz"]).status.code(), Some(1));

    let dir = std::env::temp_dir().join(format!("heralded-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let unknown = dir.join("unknown.toml");
    std::fs::write(&unknown, "kind = \"cz\"\nspeed = 3\n[sweep]\naxis = \"C_B\"\nvalues = [1.0]\n").unwrap();
    assert_eq!(heralded(&["sweep", unknown.to_str().unwrap()]).status.code(), Some(1));

    // A negative cooperativity fails at the point level only.
    let bad = dir.join("bad.toml");
    std::fs::write(
        &bad,
        "kind = \"toffoli\"\n[base]\nN = 3\nlambda = 5.0\ndrive_rule = \"caption\"\n\
         [sweep]\naxis = \"C_B\"\nvalues = [-5.0, 100.0]\n",
    )
    .unwrap();
    let out_csv = dir.join("bad.csv");
    let out = heralded(&["sweep", bad.to_str().unwrap(), "--out", out_csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rows = csv_without_wall(&std::fs::read(&out_csv).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows[0].last().unwrap().starts_with("error"));
    assert_eq!(rows[1].last().unwrap(), "ok");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cli_gate_and_rates() {
    let out = heralded(&[
        "gate", "toffoli", "--set", "N=20", "--set", "C_B=1000", "--set", "lambda=5", "--set", "drive_rule=caption",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_without_wall(&out.stdout);
    let p: f64 = rows[0][5].parse().unwrap();
    let f: f64 = rows[0][6].parse().unwrap();
    assert!((p - 0.9).abs() < 0.09, "P = {p}");
    assert!(((1.0 - f) / 2.0e-6 - 1.0).abs() < 0.1, "1-F = {}", 1.0 - f);

    let out = heralded(&[
        "rates", "--set", "N=3", "--set", "C_B=100", "--set", "lambda=2", "--set", "drive_rule=caption", "--rates", "numeric",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_without_wall(&out.stdout).len(), 4);
}
