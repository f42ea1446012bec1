//! Command-line front end: model files, subcommands and reports.
//!
//! ```text
//! jetmoments <moments|invariants|verify|sample> <model> [flags]
//! jetmoments hilbert --n N --k K
//! ```
//!
//! Exit codes: 0 success, 1 a residual above its tolerance, 2 usage, parse
//! or domain error.

pub mod commands;
pub mod grammar;
pub mod model;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CommandError, Options};
use model::parse_model;
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "jetmoments", version, about = "Affine differential invariants of measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Central moments σ_k at a point.
    Moments(ModelArgs),
    /// Scalar invariants at a point (thermodynamic invariants for gases).
    Invariants(ModelArgs),
    /// Counting tables: H_k, s_k, jet dimensions, Poincaré series.
    Hilbert(HilbertArgs),
    /// Check relations, syzygies and invariance at a point.
    Verify(ModelArgs),
    /// Monte Carlo estimates of σ_k for an ensemble.
    Sample(ModelArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiplies every tolerance; reports with a scale other than 1 are non-normative.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Args, Debug)]
struct ModelArgs {
    model: PathBuf,
    /// Comma-separated coordinates: λ for ensembles and potentials, T,p for gases.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    point: Option<Vec<f64>>,
    /// Jet order of the chart.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = commands::DEFAULT_KMAX)]
    kmax: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct HilbertArgs {
    /// A model whose dimension is used when --n is absent.
    model: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn error(msg: impl std::fmt::Display) -> CliOutput {
    CliOutput { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") }
}

fn load(path: &PathBuf) -> Result<model::ModelFile, CliOutput> {
    let bytes = std::fs::read(path).map_err(|e| error(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|_| error(format!("{}: not valid UTF-8", path.display())))?;
    parse_model(&text).map_err(|e| error(format!("{}:{e}", path.display())))
}

fn options(a: &ModelArgs) -> Options {
    Options {
        point: a.point.clone(),
        order: a.order,
        kmax: a.kmax,
        seed: a.common.seed,
        samples: a.samples,
        tol_scale: a.common.tol_scale,
    }
}

fn finish(result: Result<Report, CommandError>, format: Format) -> CliOutput {
    let report = match result {
        Ok(r) => r,
        Err(e) => return error(e.0),
    };
    let stdout = match format {
        Format::Table => report.render_table(),
        Format::Json => report.render_json(),
    };
    let failures = report.failures();
    if failures.is_empty() {
        return CliOutput { code: 0, stdout, stderr: String::new() };
    }
    let mut stderr = format!("{} check(s) failed:\n", failures.len());
    for (name, r) in failures {
        stderr.push_str(&format!("  {name}: residual {} exceeds tolerance {}\n", grammar::fmt_num(r.residual), grammar::fmt_num(r.tol)));
    }
    CliOutput { code: 1, stdout, stderr }
}

/// Runs the tool on `args` (including the program name) without touching
/// the process's streams.
pub fn run_cli<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput { code: 2, stdout: String::new(), stderr: text }
            } else {
                CliOutput { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match cli.command {
        Command::Hilbert(a) => {
            let n = match (a.n, &a.model) {
                (Some(n), _) => n,
                (None, Some(path)) => match load(path) {
                    Ok(m) => m.dim(),
                    Err(out) => return out,
                },
                (None, None) => return error("hilbert needs --n or a model file"),
            };
            let opts = Options { seed: a.common.seed, tol_scale: a.common.tol_scale, ..Options::default() };
            finish(commands::hilbert_table(n, a.k, &opts), a.common.format)
        }
        Command::Moments(a) | Command::Invariants(a) | Command::Verify(a) | Command::Sample(a)
            if !(a.common.tol_scale.is_finite() && a.common.tol_scale > 0.0) =>
        {
            error("--tol-scale must be a positive number")
        }
        cmd => {
            let (run, a): (fn(&model::ModelFile, &Options) -> Result<Report, CommandError>, ModelArgs) = match cmd {
                Command::Moments(a) => (commands::moments, a),
                Command::Invariants(a) => (commands::invariants, a),
                Command::Verify(a) => (commands::verify, a),
                Command::Sample(a) => (commands::sample, a),
                Command::Hilbert(_) => unreachable!(),
            };
            let m = match load(&a.model) {
                Ok(m) => m,
                Err(out) => return out,
            };
            finish(run(&m, &options(&a)), a.common.format)
        }
    }
}
