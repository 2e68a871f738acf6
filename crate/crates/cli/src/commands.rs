//! Subcommands and their dispatch. Every command renders one report string;
//! `main` decides where it goes.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qlab_core::equality::BatteryConfig;
use qlab_core::functions::FunctionSpec;
use qlab_core::json::ext_real_value;
use qlab_core::metrics::{chi2_divergence, monotone_metric, monotone_metric_quadrature};
use qlab_core::quadrature::QuadConfig;
use qlab_core::quasi::quasi_entropy;
use qlab_core::structure::{detect_tensor_embed, factorize_embed_partial_trace};

use crate::examples::{fixture, run_example, Example};
use crate::input::{self, read_json, read_matrix, read_state};
use crate::sweep::{run_sweep, SweepConfig, SweepKind};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qlab", version, about = "Quasi-entropies, monotone metrics and equality batteries")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Relative tolerance of equality checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub quad_rel_tol: f64,
    #[arg(long, global = true, default_value_t = 40)]
    pub quad_max_depth: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasi-entropy S_f^K(rho||sigma).
    Entropy {
        #[arg(long = "f")]
        f: String,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        /// Reference operator; identity when absent.
        #[arg(long = "K", alias = "k")]
        k: Option<PathBuf>,
    },
    /// Monotone metric gamma(X, Y) at invertible feet.
    Metric {
        #[arg(long = "h")]
        h: String,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long = "x")]
        x: PathBuf,
        #[arg(long = "y")]
        y: Option<PathBuf>,
        /// Evaluate through the integral representation.
        #[arg(long)]
        quadrature: bool,
    },
    /// chi^2-divergence for a normalized operator monotone decreasing k.
    Chi2 {
        #[arg(long = "k")]
        k: String,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Equality-condition battery on an instance file or on separate input files.
    Battery {
        /// Instance file holding channel, rho, sigma and K.
        #[arg(long, conflicts_with_all = ["channel", "rho", "sigma", "k"], required_unless_present_all = ["channel", "rho", "sigma", "k"])]
        input: Option<PathBuf>,
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long)]
        rho: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long = "K", alias = "k")]
        k: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
    },
    /// Factorization certificate of a channel.
    Detect {
        #[arg(long)]
        channel: PathBuf,
        /// Invertible probe state; selects tensor-embed detection.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Worked scenarios: entangled, pure-state, qubit, composite.
    Examples {
        which: String,
        /// Print the scenario's instance file instead of running it.
        #[arg(long)]
        emit_fixture: bool,
    },
    /// Seeded property sweep.
    Sweep {
        /// dpi, superop, convexity, battery, oracle, metric or structure.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn spec(s: &str) -> Result<FunctionSpec, CliError> {
    Ok(FunctionSpec::parse(s)?)
}

fn battery_config(run: &RunConfig, alpha: f64, beta: f64) -> BatteryConfig {
    BatteryConfig { tol: run.tol, alpha, beta, seed: run.seed, ..BatteryConfig::default() }
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let run = &cli.run;
    let csv_only = |what: &str| -> Result<(), CliError> {
        if run.format == Format::Csv {
            return Err(CliError::Core(qlab_core::error::Error::ParameterOutOfRange(format!(
                "csv output is only available for sweeps, not {what}"
            ))));
        }
        Ok(())
    };
    match &cli.command {
        Command::Entropy { f, rho, sigma, k } => {
            csv_only("entropy")?;
            let f = spec(f)?.build()?;
            let rho = read_state(rho)?;
            let sigma = read_state(sigma)?;
            let k = match k {
                Some(p) => read_matrix(p)?,
                None => qlab_core::linalg::identity(rho.dim()),
            };
            let v = quasi_entropy(&f, &rho, &sigma, &k)?;
            let mut out = to_value(&v);
            out["f"] = json!(f.spec().to_string());
            Ok(render(&out))
        }
        Command::Metric { h, rho, sigma, x, y, quadrature } => {
            csv_only("metric")?;
            let h = spec(h)?.build()?;
            let rho = read_state(rho)?;
            let sigma = read_state(sigma)?;
            let x = read_matrix(x)?;
            let y = match y {
                Some(p) => read_matrix(p)?,
                None => x.clone(),
            };
            let v = if *quadrature {
                let quad = QuadConfig { rel_tol: run.quad_rel_tol, max_depth: run.quad_max_depth };
                monotone_metric_quadrature(&h, &rho, &sigma, &x, &y, &quad)?
            } else {
                monotone_metric(&h, &rho, &sigma, &x, &y)?
            };
            Ok(render(&json!({ "h": h.spec().to_string(), "value": v.re, "imag": v.im })))
        }
        Command::Chi2 { k, rho, sigma } => {
            csv_only("chi2")?;
            let k = spec(k)?.build()?;
            let v = chi2_divergence(&k, &read_state(rho)?, &read_state(sigma)?)?;
            let mut out = to_value(&v);
            out["value"] = ext_real_value(v.value);
            Ok(render(&out))
        }
        Command::Battery { input: path, channel, rho, sigma, k, alpha, beta } => {
            csv_only("battery")?;
            let inst = match (path, channel, rho, sigma, k) {
                (Some(p), ..) => input::instance(&read_json(p)?)?,
                (None, Some(c), Some(r), Some(s), Some(k)) => {
                    let doc = read_json(c)?;
                    input::Instance {
                        phi: input::channel(doc.get("channel").unwrap_or(&doc))?,
                        rho: read_state(r)?,
                        sigma: read_state(s)?,
                        k: read_matrix(k)?,
                    }
                }
                _ => return Err(CliError::Core(qlab_core::Error::Parse("battery needs --input or all of --channel, --rho, --sigma, --K".into()))),
            };
            let rep = qlab_core::equality::run_battery(&inst.phi, &inst.rho, &inst.sigma, &inst.k, &battery_config(run, *alpha, *beta))?;
            Ok(render(&to_value(&rep)))
        }
        Command::Detect { channel, sigma } => {
            csv_only("detect")?;
            let doc = read_json(channel)?;
            let phi = input::channel(doc.get("channel").unwrap_or(&doc))?;
            let probe = match sigma {
                Some(p) => Some(read_state(p)?),
                None => doc.get("sigma").map(input::state).transpose()?,
            };
            let cert = match probe {
                Some(s) => detect_tensor_embed(&phi, &s)?,
                None => factorize_embed_partial_trace(&phi)?,
            };
            Ok(render(&cert.to_json()))
        }
        Command::Examples { which, emit_fixture } => {
            csv_only("examples")?;
            let ex = Example::parse(which)?;
            let v = if *emit_fixture { fixture(ex, run.seed)? } else { run_example(ex, run.seed, &battery_config(run, 0.5, 1.5))? };
            Ok(render(&v))
        }
        Command::Sweep { kind, n, dim } => {
            let cfg = SweepConfig { tol: run.tol, ..SweepConfig::new(SweepKind::parse(kind)?, *n, *dim, run.seed) };
            let rep = run_sweep(&cfg)?;
            Ok(match run.format {
                Format::Csv => rep.to_csv(),
                Format::Json => render(&rep.to_json()),
            })
        }
    }
}
