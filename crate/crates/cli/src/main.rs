use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use warpcheck::catalog;
use warpcheck::dynamics::{completeness_probe, geodesic, GeodesicOptions};
use warpcheck::geometry::{MetricField, MetricSpec};
use warpcheck::run::{self, ConfigError, Format, RunConfig, RunOptions};
use warpcheck::sampling::SamplingPlan;
use warpcheck::verify::default_tolerance;
use warpcheck::warped::{WarpedProduct, WarpedProductSpec};

#[derive(Parser)]
#[command(
    name = "warpcheck",
    version,
    about = "Verify curvature identities and soliton systems on warped products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Browse the built-in instances.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Run a single check request (or a whole run configuration).
    Check(CheckArgs),
    /// Geodesic and completeness probes.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Run every job of a configuration.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum CatalogCommand {
    List {
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    Emit {
        name: String,
        /// JSON object overriding the entry's default parameters.
        #[arg(long)]
        params: Option<String>,
    },
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Number of jobs evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Integrate a geodesic and report its status.
    Geodesic {
        /// Catalog name or path to a metric, warped-product or entry JSON.
        #[arg(long)]
        metric: String,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        p0: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        v0: Option<Vec<f64>>,
        #[arg(long = "T")]
        horizon: Option<f64>,
        /// Include the trajectory dump in the output.
        #[arg(long)]
        trajectory: bool,
    },
    /// Parallel-gradient incompleteness probe of a warped product.
    Completeness {
        /// Catalog name or path to a warped-product or entry JSON.
        #[arg(long)]
        wp: String,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        p0: Option<Vec<f64>>,
        /// Tolerance on the base Hessian of h.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Text => Format::Text,
        }
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Catalog(c) => catalog_command(c),
        Command::Check(a) => run_command(&a.config, a.format, 1, true),
        Command::Run(a) => run_command(&a.config, a.format, a.jobs, false),
        Command::Probe(p) => probe_command(p),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit_out(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    emit_out(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn catalog_command(c: CatalogCommand) -> Result<u8, Failure> {
    match c {
        CatalogCommand::List { format } => {
            let entries = catalog::list();
            match format {
                OutputFormat::Json => print_json(&entries)?,
                OutputFormat::Text => {
                    let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
                    let text: String = entries
                        .iter()
                        .map(|e| format!("{:<width$}  {}\n", e.name, e.description))
                        .collect();
                    emit_out(&text)?;
                }
            }
        }
        CatalogCommand::Emit { name, params } => {
            let params: Option<Value> = params
                .map(|p| serde_json::from_str(&p).map_err(|e| Failure::Config(format!("--params: {e}"))))
                .transpose()?;
            let doc = catalog::emit(&name, params.as_ref()).map_err(|e| Failure::Config(e.to_string()))?;
            print_json(&doc)?;
        }
    }
    Ok(0)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// `check` accepts a single job object as well as a full configuration.
fn load_config(src: &str, single: bool) -> Result<RunConfig, ConfigError> {
    if single {
        let v: Value = serde_json::from_str(src).map_err(|e| ConfigError::global(format!("invalid JSON: {e}")))?;
        if v.get("jobs").is_none() {
            let wrapped = serde_json::json!({ "jobs": [v] });
            return run::parse_config(&wrapped.to_string());
        }
    }
    run::parse_config(src)
}

fn run_command(path: &Path, format: Option<OutputFormat>, jobs: usize, single: bool) -> Result<u8, Failure> {
    let config = load_config(&read(path)?, single)?;
    let opts = RunOptions {
        jobs,
        seed_override: run::seed_from_env()?,
        ..RunOptions::default()
    };
    let report = run::run(&config, &opts)?;
    let format = format.map(Format::from).or(config.format).unwrap_or_default();
    match format {
        Format::Json => print_json(&report)?,
        Format::Text => emit_out(&run::render_text(&report))?,
    }
    Ok(report.exit_code() as u8)
}

/// A catalog name, or a JSON file holding an entry document, a warped
/// product or a plain metric.
enum Source {
    Entry(Box<catalog::CatalogEntry>),
    Warped(WarpedProduct),
    Metric(MetricField),
}

fn resolve(arg: &str) -> Result<Source, Failure> {
    if catalog::names().contains(&arg) {
        return Ok(Source::Entry(Box::new(
            catalog::build(arg, None).map_err(|e| Failure::Config(e.to_string()))?,
        )));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::Config(format!(
            "`{arg}` is neither a catalog entry nor a file"
        )));
    }
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| Failure::Config(format!("{arg}: {e}")))?;
    let config = |e: warpcheck::Error| Failure::Config(format!("{arg}: {e}"));
    if let Some(name) = v
        .get("name")
        .and_then(Value::as_str)
        .filter(|_| v.get("checks").is_some())
    {
        // An emitted entry: rebuild it with its parameters.
        let entry = catalog::build(name, v.get("params")).map_err(config)?;
        return Ok(Source::Entry(Box::new(entry)));
    }
    if v.get("base").is_some() {
        let spec: WarpedProductSpec = serde_json::from_value(v).map_err(|e| Failure::Config(format!("{arg}: {e}")))?;
        return Ok(Source::Warped(spec.build().map_err(config)?));
    }
    let spec: MetricSpec = serde_json::from_value(v).map_err(|e| Failure::Config(format!("{arg}: {e}")))?;
    Ok(Source::Metric(MetricField::from_spec(&spec).map_err(config)?))
}

fn probe_command(p: ProbeCommand) -> Result<u8, Failure> {
    match p {
        ProbeCommand::Geodesic {
            metric,
            p0,
            v0,
            horizon,
            trajectory,
        } => {
            let (g, seed) = match resolve(&metric)? {
                Source::Entry(e) => (e.metric.clone(), e.geodesic.clone()),
                Source::Warped(w) => (w.product_metric().clone(), None),
                Source::Metric(m) => (m, None),
            };
            let p0 = p0
                .or_else(|| seed.as_ref().map(|s| s.p0.clone()))
                .ok_or_else(|| Failure::Config("--p0 is required".into()))?;
            let v0 = v0
                .or_else(|| seed.as_ref().map(|s| s.v0.clone()))
                .ok_or_else(|| Failure::Config("--v0 is required".into()))?;
            let horizon = horizon
                .or_else(|| seed.as_ref().map(|s| s.horizon))
                .ok_or_else(|| Failure::Config("--T is required".into()))?;
            let mut r = geodesic(&g, &p0, &v0, horizon, &GeodesicOptions::default())
                .map_err(|e| Failure::Config(e.to_string()))?;
            if !trajectory {
                r.trajectory.clear();
            }
            print_json(&r)?;
            Ok(0)
        }
        ProbeCommand::Completeness { wp, p0, tolerance } => {
            let (wp, seed_p0, plan) = match resolve(&wp)? {
                Source::Entry(e) => {
                    let w = e
                        .warped
                        .clone()
                        .ok_or_else(|| Failure::Config(format!("`{}` is not a warped product", e.name)))?;
                    (w, e.completeness.as_ref().map(|c| c.p0.clone()), e.sampling.clone())
                }
                Source::Warped(w) => {
                    let dim = w.product_metric().dim();
                    (w, None, SamplingPlan::new(vec![[-1.0, 1.0]; dim]))
                }
                Source::Metric(_) => return Err(anyhow!("completeness probes need a warped product").into()),
            };
            let p0 = p0.or(seed_p0).unwrap_or_else(|| vec![0.0; wp.base_dim()]);
            let tol = tolerance.unwrap_or_else(|| default_tolerance(catalog::CheckKind::Completeness));
            if !(tol > 0.0) {
                return Err(Failure::Config("--tolerance must be positive".into()));
            }
            let report = completeness_probe(&wp, &p0, &plan, tol).map_err(|e| Failure::Config(e.to_string()))?;
            print_json(&report)?;
            Ok(0)
        }
    }
}
