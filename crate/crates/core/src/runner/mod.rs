//! Sweep configuration, parallel evaluation and CSV emission.

mod presets;

pub use presets::{preset, PRESETS};

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{gate_engines, GateKind, GateOptions, GateReport};
use crate::lindblad::EvolveOptions;
use crate::model::{ModelError, ParamSpec, SystemParams};
use crate::registry::UnknownStrategy;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config: {0}")]
    Config(String),
    #[error("guardrail: {0}")]
    Guardrail(String),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Largest qutrit count the full-ME engine accepts in a sweep.
pub const FULL_ENGINE_MAX_N: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "C_B")]
    CB,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "Delta_e1")]
    DeltaE1,
    N,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::CB => "C_B",
            Axis::Lambda => "lambda",
            Axis::DeltaE1 => "Delta_e1",
            Axis::N => "N",
        }
    }

    fn apply(self, spec: &mut ParamSpec, v: f64) {
        match self {
            Axis::CB => spec.c_b = Some(v),
            Axis::Lambda => spec.lambda = Some(v),
            Axis::DeltaE1 => spec.delta_e1 = Some(v),
            Axis::N => spec.n_qutrits = Some(v as usize),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// One sweep axis: explicit `values`, or a `linear` / `log` span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub axis: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<Span>,
}

impl AxisSpec {
    pub fn from_values(axis: Axis, values: Vec<f64>) -> Self {
        Self { axis, values: Some(values), linear: None, log: None }
    }

    pub fn grid(&self) -> Result<Vec<f64>, RunnerError> {
        let label = self.axis.label();
        let g = match (&self.values, &self.linear, &self.log) {
            (Some(v), None, None) => v.clone(),
            (None, Some(s), None) => span(s, label, |a, b, f| a + (b - a) * f)?,
            (None, None, Some(s)) => {
                if !(s.start > 0.0 && s.stop > 0.0) {
                    return Err(RunnerError::Config(format!("{label}: log span needs positive ends")));
                }
                span(s, label, |a, b, f| (a.ln() + (b.ln() - a.ln()) * f).exp())?
            }
            _ => {
                return Err(RunnerError::Config(format!(
                    "{label}: give exactly one of values, linear, log"
                )))
            }
        };
        if g.is_empty() {
            return Err(RunnerError::Config(format!("{label}: empty grid")));
        }
        if g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RunnerError::Config(format!("{label}: grid must be finite and strictly increasing")));
        }
        if self.axis == Axis::N && g.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
            return Err(RunnerError::Config("N: grid values must be positive integers".into()));
        }
        Ok(g)
    }
}

fn span(s: &Span, label: &str, f: impl Fn(f64, f64, f64) -> f64) -> Result<Vec<f64>, RunnerError> {
    match s.points {
        0 => Err(RunnerError::Config(format!("{label}: span needs at least one point"))),
        1 => Ok(vec![s.start]),
        n => Ok((0..n).map(|i| f(s.start, s.stop, i as f64 / (n - 1) as f64)).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_integrator")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

fn default_integrator() -> String {
    "dopri5".into()
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            name: default_integrator(),
            rtol: None,
            atol: None,
            max_step: None,
            step: None,
            samples: None,
            trace_tol: None,
            n_max: None,
        }
    }
}

impl IntegratorConfig {
    pub fn evolve_options(&self) -> EvolveOptions {
        let d = EvolveOptions::default();
        EvolveOptions {
            integrator: self.name.clone(),
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            trace_tol: self.trace_tol.unwrap_or(d.trace_tol),
            max_step: self.max_step,
            step: self.step,
            samples: self.samples.unwrap_or(d.samples),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: GateKind,
    #[serde(default = "default_engine")]
    pub engine: String,
    /// Engines evaluated by `compare`; the full-ME engine is the reference.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<String>,
    #[serde(default = "default_rates")]
    pub rates: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub base: ParamSpec,
    pub sweep: AxisSpec,
    /// Optional outer axis, one curve per value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<AxisSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

fn default_engine() -> String {
    "analytic".into()
}

fn default_rates() -> String {
    "taylor".into()
}

/// One grid point: (series value, axis value) and its parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub series: Option<f64>,
    pub value: f64,
    /// Requested qutrit count, known even when resolution fails.
    pub n_qutrits: usize,
    pub params: Result<SystemParams, String>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunnerError> {
        toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn gate_options(&self) -> GateOptions {
        GateOptions {
            rates: self.rates.clone(),
            n_max: self.integrator.n_max,
            evolve: self.integrator.evolve_options(),
            ..GateOptions::default()
        }
    }

    /// Grid points in output order: series outer, sweep axis inner.
    pub fn points(&self) -> Result<Vec<GridPoint>, RunnerError> {
        let inner = self.sweep.grid()?;
        let outer: Vec<Option<f64>> = match &self.series {
            Some(s) => {
                if s.axis == self.sweep.axis {
                    return Err(RunnerError::Config("series and sweep share an axis".into()));
                }
                s.grid()?.into_iter().map(Some).collect()
            }
            None => vec![None],
        };
        let mut out = Vec::with_capacity(inner.len() * outer.len());
        for s in &outer {
            for &v in &inner {
                let mut spec = self.base.clone();
                if let (Some(sv), Some(sa)) = (s, &self.series) {
                    sa.axis.apply(&mut spec, *sv);
                }
                self.sweep.axis.apply(&mut spec, v);
                out.push(GridPoint {
                    index: out.len(),
                    series: *s,
                    value: v,
                    n_qutrits: spec.n_qutrits.unwrap_or(crate::model::DEFAULT_N_QUTRITS),
                    params: spec.resolve().map_err(|e| e.to_string()),
                });
            }
        }
        Ok(out)
    }

    /// Structural checks: registered strategies, grids, and the full-ME
    /// qutrit-count guardrail.
    pub fn validate(&self, engines: &[String]) -> Result<Vec<GridPoint>, RunnerError> {
        let reg = gate_engines();
        for e in engines {
            reg.create(e)?;
        }
        crate::effective::rate_models().create(&self.rates)?;
        crate::lindblad::integrators().create(&self.integrator.name)?;
        let points = self.points()?;
        if engines.iter().any(|e| e == "full") {
            if let Some(p) = points.iter().find(|p| p.n_qutrits > FULL_ENGINE_MAX_N) {
                return Err(RunnerError::Guardrail(format!(
                    "full engine limited to N <= {FULL_ENGINE_MAX_N}, point {} has N = {}",
                    p.index, p.n_qutrits
                )));
            }
        }
        Ok(points)
    }

    fn worker_count(&self, points: usize) -> usize {
        let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        self.workers.unwrap_or(avail).clamp(1, points.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: GridPoint,
    pub outcome: Result<GateReport, String>,
    pub wall_seconds: f64,
}

impl PointResult {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub engine: String,
    pub rows: Vec<PointResult>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// CSV with `#`-prefixed config echo, then one row per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), RunnerError> {
        write_echo(&mut w, &self.config, std::slice::from_ref(&self.engine))?;
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = GateReport::CSV_HEADER.to_vec();
        header.extend(["one_minus_F", "t_us", "wall_s", "status"]);
        wr.write_record(&header)?;
        for r in &self.rows {
            let mut row = match &r.outcome {
                Ok(rep) => rep.csv_fields(),
                Err(_) => point_fields(&self.config, &r.point),
            };
            let (inf, tus, status) = match &r.outcome {
                Ok(rep) => (
                    format!("{:.6e}", rep.infidelity()),
                    r.point
                        .params
                        .as_ref()
                        .ok()
                        .and_then(|p| p.microseconds(rep.duration))
                        .map(|x| format!("{x:.6}"))
                        .unwrap_or_default(),
                    "ok".to_string(),
                ),
                Err(e) => (String::new(), String::new(), format!("error: {e}")),
            };
            row.extend([inf, tus, format!("{:.3}", r.wall_seconds), status]);
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn write_echo<W: Write>(w: &mut W, config: &SweepConfig, engines: &[String]) -> Result<(), RunnerError> {
    let mut echo = String::new();
    let _ = writeln!(echo, "engine = {:?}", engines.join(","));
    echo.push_str(&config.to_toml());
    for line in echo.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Leading CSV fields for a point whose evaluation failed.
fn point_fields(config: &SweepConfig, point: &GridPoint) -> Vec<String> {
    let mut v = vec![config.kind.to_string()];
    match &point.params {
        Ok(p) => {
            let dv = p.validate().ok();
            v.push(p.n_qutrits.to_string());
            v.push(dv.as_ref().map(|d| format!("{:.10e}", d.c_b)).unwrap_or_default());
            v.push(dv.as_ref().map(|d| format!("{:.10e}", d.lambda)).unwrap_or_default());
            v.push(format!("{:.10e}", p.delta_e1));
        }
        Err(_) => v.extend([String::new(), String::new(), String::new(), String::new()]),
    }
    v.resize(GateReport::CSV_HEADER.len(), String::new());
    v
}

fn evaluate(kind: GateKind, engine: &str, opts: &GateOptions, point: &GridPoint) -> PointResult {
    let start = Instant::now();
    if let Ok(d) = point.params.as_ref().map(|p| p.validate()) {
        for w in d.map(|d| d.warnings).unwrap_or_default() {
            log::warn!("point {}: {w}", point.index);
        }
    }
    let outcome = match &point.params {
        Err(e) => Err(e.clone()),
        Ok(p) => gate_engines()
            .create(engine)
            .map_err(|e| e.to_string())
            .and_then(|e| e.run(kind, p, opts).map_err(|e| e.to_string())),
    };
    if let Err(e) = &outcome {
        log::warn!("point {} failed: {e}", point.index);
    }
    PointResult {
        point: point.clone(),
        outcome,
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}

fn run_points(config: &SweepConfig, engine: &str, points: &[GridPoint]) -> Result<Vec<PointResult>, RunnerError> {
    let opts = config.gate_options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count(points.len()))
        .build()
        .map_err(|e| RunnerError::Config(e.to_string()))?;
    // Indexed collect keeps grid order whatever the completion order.
    Ok(pool.install(|| points.par_iter().map(|p| evaluate(config.kind, engine, &opts, p)).collect()))
}

/// Evaluates every grid point with the configured engine. Point failures
/// become error rows; only config problems abort.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, RunnerError> {
    let engine = config.engine.clone();
    let points = config.validate(std::slice::from_ref(&engine))?;
    let rows = run_points(config, &engine, &points)?;
    Ok(SweepResult { config: config.clone(), engine, rows })
}

pub const REFERENCE_ENGINE: &str = "full";

#[derive(Debug, Clone)]
pub struct CompareResult {
    pub config: SweepConfig,
    /// Engines in column order; the reference comes last.
    pub engines: Vec<String>,
    /// `results[e][i]` is engine `e` at grid point `i`.
    pub results: Vec<Vec<PointResult>>,
}

impl CompareResult {
    fn reference(&self) -> &[PointResult] {
        self.results.last().expect("reference engine")
    }

    /// |P_e − P_ref| and |F_e − F_ref| for engine `e` at point `i`.
    pub fn deviation(&self, e: usize, i: usize) -> Option<(f64, f64)> {
        let a = self.results[e][i].outcome.as_ref().ok()?;
        let b = self.reference()[i].outcome.as_ref().ok()?;
        Some((
            (a.success_probability - b.success_probability).abs(),
            (a.conditional_fidelity - b.conditional_fidelity).abs(),
        ))
    }

    /// Largest deviations per non-reference engine over the points where
    /// both engines succeeded.
    pub fn max_deviation(&self) -> Vec<(String, f64, f64)> {
        (0..self.engines.len() - 1)
            .map(|e| {
                let (mut dp, mut df) = (0.0_f64, 0.0_f64);
                for i in 0..self.reference().len() {
                    if let Some((a, b)) = self.deviation(e, i) {
                        dp = dp.max(a);
                        df = df.max(b);
                    }
                }
                (self.engines[e].clone(), dp, df)
            })
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.results.iter().flatten().filter(|r| !r.is_ok()).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), RunnerError> {
        write_echo(&mut w, &self.config, &self.engines)?;
        let mut wr = csv::Writer::from_writer(&mut w);
        let mut header: Vec<String> = GateReport::CSV_HEADER[..5].iter().map(|s| s.to_string()).collect();
        for e in &self.engines {
            header.push(format!("P_{e}"));
            header.push(format!("F_{e}"));
        }
        for e in &self.engines[..self.engines.len() - 1] {
            header.push(format!("dP_{e}"));
            header.push(format!("dF_{e}"));
        }
        header.push("status".into());
        wr.write_record(&header)?;
        let reference = self.reference();
        for i in 0..reference.len() {
            let mut row = point_fields(&self.config, &reference[i].point);
            row.truncate(5);
            let mut errors = Vec::new();
            for (e, res) in self.results.iter().enumerate() {
                match &res[i].outcome {
                    Ok(r) => {
                        row.push(format!("{:.12e}", r.success_probability));
                        row.push(format!("{:.15e}", r.conditional_fidelity));
                    }
                    Err(msg) => {
                        row.extend([String::new(), String::new()]);
                        errors.push(format!("{}: {msg}", self.engines[e]));
                    }
                }
            }
            for e in 0..self.engines.len() - 1 {
                match self.deviation(e, i) {
                    Some((dp, df)) => row.extend([format!("{dp:.6e}"), format!("{df:.6e}")]),
                    None => row.extend([String::new(), String::new()]),
                }
            }
            row.push(if errors.is_empty() { "ok".into() } else { format!("error: {}", errors.join("; ")) });
            wr.write_record(&row)?;
        }
        wr.flush()?;
        drop(wr);
        for (e, dp, df) in self.max_deviation() {
            writeln!(w, "# max |dP| {e} vs {REFERENCE_ENGINE}: {dp:.6e}, max |dF|: {df:.6e}")?;
        }
        Ok(())
    }
}

/// Runs every engine in `config.compare` (default analytic) against the
/// full-ME reference on the same grid.
pub fn compare_engines(config: &SweepConfig) -> Result<CompareResult, RunnerError> {
    let mut engines: Vec<String> = if config.compare.is_empty() {
        vec!["analytic".into()]
    } else {
        config.compare.clone()
    };
    engines.retain(|e| e != REFERENCE_ENGINE);
    engines.dedup();
    if !engines.iter().any(|e| e == "analytic" || e == "effective") {
        return Err(RunnerError::Config("compare needs analytic or effective besides full".into()));
    }
    engines.push(REFERENCE_ENGINE.into());
    let points = config.validate(&engines)?;
    let results = engines
        .iter()
        .map(|e| run_points(config, e, &points))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompareResult { config: config.clone(), engines, results })
}
