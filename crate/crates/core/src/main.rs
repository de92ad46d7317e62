use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use heralded_gates::effective::{rate_models, RateOptions};
use heralded_gates::gates::{gate_engines, GateKind, GateReport};
use heralded_gates::model::ParamSpec;
use heralded_gates::runner::{compare_engines, preset, run_sweep, SweepConfig, PRESETS};

#[derive(Parser)]
#[command(name = "heralded", version, about = "Heralded controlled-phase gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the effective model (Δ_n, Γ_n, jump amplitudes) as CSV.
    Rates {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "taylor")]
        rates: String,
        /// Keep the n-independent −Ω₁²/(4Δ_e1) shift in every Δ_n.
        #[arg(long)]
        keep_constant_shift: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune and evaluate one gate.
    Gate {
        #[arg(value_enum)]
        kind: KindArg,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a sweep from a config file or preset name.
    Sweep {
        config: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare engines against the full master equation on a sweep grid.
    Compare {
        config: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Toffoli,
    Cz,
}

impl From<KindArg> for GateKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Toffoli => GateKind::Toffoli,
            KindArg::Cz => GateKind::Cz,
        }
    }
}

#[derive(Args)]
struct ParamArgs {
    /// TOML file with parameter keys (C_B, lambda, Delta_e1, ...).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Parameter override, e.g. --set C_B=170 --set drive_rule=caption.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    rates: Option<String>,
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config problems exit 1, point-level failures exit 2.
enum Failure {
    Config(String),
    Points(usize),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Points(n)) => {
            eprintln!("{n} point(s) failed; see the status column");
            ExitCode::from(2)
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn param_spec(args: &ParamArgs) -> Result<ParamSpec, Failure> {
    let mut spec = match &args.params {
        Some(path) => ParamSpec::from_toml(&std::fs::read_to_string(path)?)?,
        None => ParamSpec::default(),
    };
    for kv in &args.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Failure::Config(format!("override '{kv}' is not KEY=VALUE")));
        };
        let v = v.trim();
        // Bare words are strings in the override syntax.
        let value = if v.parse::<f64>().is_ok() { v.to_string() } else { format!("{v:?}") };
        spec = spec.merged(&ParamSpec::from_toml(&format!("{} = {value}", k.trim()))?);
    }
    Ok(spec)
}

fn load_config(name: &str, run: &RunArgs) -> Result<SweepConfig, Failure> {
    let text = match std::fs::read_to_string(name) {
        Ok(t) => t,
        Err(e) => match preset(name) {
            Some(t) => t.to_string(),
            None => return Err(Failure::Config(format!("{name}: {e} (and no preset of that name)"))),
        },
    };
    Ok(load_overrides(SweepConfig::from_toml(&text)?, run))
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Rates { params, rates, keep_constant_shift, out } => {
            let p = param_spec(&params)?.resolve()?;
            let opts = RateOptions { keep_constant_shift };
            let model = rate_models().create(&rates)?.model(&p, &opts)?;
            model.write_csv(sink(out.as_deref())?)?;
            Ok(())
        }
        Command::Gate { kind, params, run } => {
            let kind = GateKind::from(kind);
            let p = param_spec(&params)?.resolve()?;
            for w in p.validate()?.warnings {
                log::warn!("{w}");
            }
            let mut config = SweepConfig::from_toml(&format!("kind = \"{kind}\"\n[sweep]\naxis = \"C_B\"\nvalues = [1.0]"))?;
            config = load_overrides(config, &run);
            let engine = gate_engines().create(&config.engine)?;
            let mut w = sink(run.out.as_deref())?;
            let mut wr = csv::Writer::from_writer(&mut w);
            let mut header: Vec<&str> = GateReport::CSV_HEADER.to_vec();
            header.extend(["one_minus_F", "t_us"]);
            match engine.run(kind, &p, &config.gate_options()) {
                Ok(r) => {
                    wr.write_record(&header)?;
                    let mut row = r.csv_fields();
                    row.push(format!("{:.6e}", r.infidelity()));
                    row.push(p.microseconds(r.duration).map(|x| format!("{x:.6}")).unwrap_or_default());
                    wr.write_record(&row)?;
                    wr.flush()?;
                    Ok(())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Err(Failure::Points(1))
                }
            }
        }
        Command::Sweep { config, run } => {
            let c = load_config(&config, &run)?;
            let result = run_sweep(&c)?;
            let out = run.out.clone().or_else(|| c.output.clone());
            result.write_csv(sink(out.as_deref())?)?;
            match result.failures() {
                0 => Ok(()),
                n => Err(Failure::Points(n)),
            }
        }
        Command::Compare { config, run } => {
            let c = load_config(&config, &run)?;
            let result = compare_engines(&c)?;
            result.write_csv(sink(run.out.as_deref())?)?;
            for (e, dp, df) in result.max_deviation() {
                eprintln!("{e} vs full: max |dP| = {dp:.3e}, max |dF| = {df:.3e}");
            }
            match result.failures() {
                0 => Ok(()),
                n => Err(Failure::Points(n)),
            }
        }
        Command::Presets { name } => {
            match name {
                Some(n) => print!("{}", preset(&n).ok_or_else(|| Failure::Config(format!("no preset '{n}'")))?),
                None => {
                    for (n, _) in PRESETS {
                        println!("{n}");
                    }
                }
            }
            Ok(())
        }
    }
}

fn load_overrides(mut c: SweepConfig, run: &RunArgs) -> SweepConfig {
    if let Some(e) = &run.engine {
        c.engine = e.clone();
    }
    if let Some(r) = &run.rates {
        c.rates = r.clone();
    }
    if let Some(i) = &run.integrator {
        c.integrator.name = i.clone();
    }
    if run.n_max.is_some() {
        c.integrator.n_max = run.n_max;
    }
    if run.rtol.is_some() {
        c.integrator.rtol = run.rtol;
    }
    c
}
