//! The `finsler` command line.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::averaging::Measure;
use crate::error::{Error, Result};
use crate::homotopy::{GaugeOptions, GaugeVariant};
use crate::indicatrix::SphereGrid;
use crate::metric::FinslerMetric;
use crate::report::{self, DEFAULT_TOLERANCE};
use crate::transport::Curve;

/// Environment variable naming a JSON config file whose values sit under the flags.
pub const CONFIG_ENV: &str = "FINSLER_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Coupled,
    Independent,
}

#[derive(Debug, Parser)]
#[command(name = "finsler", version, about = "Finsler geometry analyses from JSON metric specs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tensors at a point, structure-equation residuals and classification.
    Analyze(Opts),
    /// Averaged metric and both Levi-Civita pipelines.
    Average(Opts),
    /// Gauge solve and invariance report for the interpolating family.
    Homotopy(Opts),
    /// Parallel transport along the spec's curve.
    Transport(Opts),
    /// Volume-derivative identity along each coordinate direction.
    Baoshen(Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Average(_) => "average",
            Command::Homotopy(_) => "homotopy",
            Command::Transport(_) => "transport",
            Command::Baoshen(_) => "baoshen",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Analyze(o)
            | Command::Average(o)
            | Command::Homotopy(o)
            | Command::Transport(o)
            | Command::Baoshen(o) => o,
        }
    }
}

#[derive(Debug, Clone, Args, Default)]
struct Opts {
    /// Metric spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Base point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    /// Tangent vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    /// Sphere grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// RK4 steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Homotopy parameters, comma separated.
    #[arg(long = "t-list", value_delimiter = ',')]
    t_list: Option<Vec<f64>>,
    /// Classification tolerance, or gauge tolerance for `homotopy`.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Measure expression in x and y; defaults to the spec's, else 1.
    #[arg(long)]
    measure: Option<String>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Finite-difference step of the volume derivative.
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Config file contents; every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub t_list: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub measure: Option<String>,
    pub variant: Option<VariantArg>,
    pub max_iter: Option<usize>,
    pub fd_step: Option<f64>,
}

/// Flags merged over config merged over defaults.
#[derive(Debug, Clone)]
struct Settings {
    x: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
    grid: usize,
    steps: usize,
    t_list: Vec<f64>,
    tol: Option<f64>,
    workers: Option<usize>,
    format: Format,
    measure: Option<String>,
    variant: GaugeVariant,
    max_iter: usize,
    fd_step: f64,
}

impl Settings {
    fn merge(flags: &Opts, config: Config) -> Self {
        let variant = match flags.variant.or(config.variant) {
            Some(VariantArg::Independent) => GaugeVariant::Independent,
            _ => GaugeVariant::Coupled,
        };
        Settings {
            x: flags.x.clone().or(config.x),
            y: flags.y.clone().or(config.y),
            grid: flags.grid.or(config.grid).unwrap_or(256),
            steps: flags.steps.or(config.steps).unwrap_or(1000),
            t_list: flags
                .t_list
                .clone()
                .or(config.t_list)
                .unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            tol: flags.tol.or(config.tol),
            workers: flags.workers.or(config.workers),
            format: flags.format.or(config.format).unwrap_or(Format::Json),
            measure: flags.measure.clone().or(config.measure),
            variant,
            max_iter: flags.max_iter.or(config.max_iter).unwrap_or(GaugeOptions::default().max_iter),
            fd_step: flags.fd_step.or(config.fd_step).unwrap_or(1e-4),
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Io(format!("file not found: {}", path.display())),
        _ => Error::Io(format!("cannot read {}: {e}", path.display())),
    })
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Json(format!("{}: {e}", path.display())))
}

fn point(value: Option<Vec<f64>>, n: usize, name: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    let v = value.unwrap_or(default);
    if v.len() != n {
        return Err(Error::Argument(format!("--{name} needs {n} components, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument(format!("--{name} has a non-finite component")));
    }
    Ok(v)
}

/// A rendered report and whether it carries a numerical failure.
struct Output {
    body: String,
    failed: Option<String>,
}

fn render<T: Serialize>(report: &T, format: Format, csv: Option<String>) -> Result<String> {
    match format {
        Format::Json => report::to_json(report),
        Format::Text => Ok(report::render_text(&serde_json::to_value(report)?)),
        Format::Csv => csv.ok_or_else(|| Error::Argument("csv output is available for `transport` and `homotopy`".into())),
    }
}

fn execute(command: &Command, s: &Settings) -> Result<Output> {
    let opts = command.opts();
    let metric = FinslerMetric::from_json(&read_file(&opts.spec)?)?;
    let n = metric.dimension();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let x = point(s.x.clone(), n, "x", vec![0.0; n])?;
    let measure = match &s.measure {
        Some(src) => Measure::parse(&metric, src)?,
        None => Measure::from_metric(&metric)?,
    };
    let grid = || SphereGrid::build(n, s.grid);
    let mut failed = None;
    let body = match command {
        Command::Analyze(_) => {
            let y = point(s.y.clone(), n, "y", e1)?;
            let r = report::analyze(&metric, &x, &y, s.tol.unwrap_or(DEFAULT_TOLERANCE))?;
            render(&r, s.format, None)?
        }
        Command::Average(_) => {
            let r = report::average(&metric, &measure, &x, &grid()?)?;
            render(&r, s.format, None)?
        }
        Command::Homotopy(_) => {
            let options = GaugeOptions {
                tol: s.tol.unwrap_or(GaugeOptions::default().tol),
                max_iter: s.max_iter,
                variant: s.variant,
            };
            let r = report::homotopy(&metric, &measure, &x, &s.t_list, &grid()?, &options)?;
            if !r.invariance.all_converged {
                failed = Some("gauge iteration did not converge for every t; see the report".to_string());
            }
            render(&r, s.format, Some(r.to_csv()))?
        }
        Command::Transport(_) => {
            let curve = Curve::from_metric(&metric)?
                .ok_or_else(|| Error::InvalidSpec("`transport` needs a `curve` section in the spec".into()))?;
            let y = point(s.y.clone(), n, "y", e1)?;
            let r = report::transport(&metric, &curve, &y, s.steps)?;
            render(&r, s.format, Some(r.transport.to_csv()))?
        }
        Command::Baoshen(_) => {
            let r = report::baoshen(&metric, &x, &grid()?, s.fd_step)?;
            render(&r, s.format, None)?
        }
    };
    Ok(Output { body, failed })
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_NUMERICAL
    }
}

/// Runs the CLI with an explicit config path.
pub fn run_with_config<I, T>(args: I, config: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = (|| -> Result<Output> {
        let cfg = match &config {
            Some(p) => load_config(p)?,
            None => Config::default(),
        };
        let settings = Settings::merge(cli.command.opts(), cfg);
        match settings.workers {
            Some(0) => Err(Error::Argument("--workers must be positive".into())),
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Argument(format!("cannot start {w} workers: {e}")))?
                .install(|| execute(&cli.command, &settings)),
            None => execute(&cli.command, &settings),
        }
    })();
    match result {
        Ok(output) => {
            let written = match &cli.command.opts().output {
                Some(path) => std::fs::write(path, &output.body)
                    .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display()))),
                None => out.write_all(output.body.as_bytes()).map_err(|e| Error::Io(e.to_string())),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INPUT;
            }
            match output.failed {
                Some(msg) => {
                    let _ = writeln!(err, "error: {} {msg}", cli.command.name());
                    EXIT_NUMERICAL
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs the CLI, reading the config path from `FINSLER_CONFIG`.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_config(args, config, &mut stdout.lock(), &mut stderr.lock())
}
