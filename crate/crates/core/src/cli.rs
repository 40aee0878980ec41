//! `flsa solve | simulate | bench`.
//!
//! Exit codes: 0 converged (or success), 1 bad input or configuration,
//! 2 iteration limit reached, 3 the iterates diverged.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::FlsaError;
use crate::experiments::{
    run_experiment1, run_experiment2, run_experiment4, run_scaling, Experiment1Config, Experiment2Config,
    Experiment4Config,
};
use crate::loss::LossModel;
use crate::simulate::{generate, NoiseModel, SignalSpec};
use crate::solver::{solve, AlmConfig, AugmentationMode, SolveReport, Termination};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

pub const SIDECAR_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "flsa", version, about = "Fused lasso signal approximation by augmented Lagrangian")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a signal read from a file (one value per line, or CSV with a header).
    Solve(SolveArgs),
    /// Write a simulated piecewise-constant signal as `truth,noisy` CSV.
    Simulate(SimulateArgs),
    /// Run one of the benchmark experiments (1, 2 or 4) into a directory.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Quadratic,
    Lad,
    Huber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Singly,
    Doubly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    StudentT,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    /// Column to read when the input is CSV with a header.
    #[arg(long, default_value = "y")]
    pub column: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 5.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Quadratic)]
    pub loss: LossArg,
    #[arg(long)]
    pub huber_delta: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long = "inner-T", default_value_t = 1)]
    pub inner_t: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Doubly)]
    pub mode: ModeArg,
    /// Accepted for uniformity; solving uses no randomness.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave the per-iteration traces out of the JSON sidecar.
    #[arg(long)]
    pub no_trace: bool,
    /// Output CSV; the JSON sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 0.1)]
    pub variance: f64,
    #[arg(long, default_value_t = 2.0)]
    pub df: f64,
    #[arg(long, default_value_t = 0.3)]
    pub scale: f64,
    #[arg(long)]
    pub min_block: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub experiment: u32,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Experiment 1 replicate seeds per (T, n) cell.
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    /// Experiment 1 signal lengths.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Signal length for experiments 2 and 4.
    #[arg(long)]
    pub n: Option<usize>,
    /// Experiment 2 lengths for the iteration/time scaling table.
    #[arg(long, value_delimiter = ',')]
    pub scaling_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Diverged(String),
}

impl From<FlsaError> for CliError {
    fn from(e: FlsaError) -> Self {
        match e {
            FlsaError::Diverged { .. } => Self::Diverged(e.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Simulate(a) => cmd_simulate(&a).map(|()| EXIT_OK),
        Command::Bench(a) => cmd_bench(&a).map(|()| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(CliError::Diverged(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DIVERGED
        }
    }
}

/// Reads one real per line, or a CSV whose header has the named column.
/// Blank lines are skipped in the plain format.
pub fn parse_signal(text: &str, column: &str) -> Result<Vec<f64>, String> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    let Some(first) = first else {
        return Err("input is empty".into());
    };
    let plain = first.parse::<f64>().is_ok();
    let values = if plain {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| parse_value(l, k + 1))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        parse_csv_column(text, column)?
    };
    if values.len() < 2 {
        return Err(format!("need at least 2 observations, got {}", values.len()));
    }
    Ok(values)
}

fn parse_value(field: &str, line: usize) -> Result<f64, String> {
    let field = field.trim();
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("line {line}: value '{field}' is not finite")),
        Err(_) => Err(format!("line {line}: cannot parse '{field}' as a number")),
    }
}

fn parse_csv_column(text: &str, column: &str) -> Result<Vec<f64>, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| format!("line 1: {e}"))?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| format!("line 1: first line is neither a number nor a CSV header with a `{column}` column"))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            format!("line {line}: {e}")
        })?;
        let line = record.position().map_or(0, |p| p.line()) as usize;
        let field = record.get(col).ok_or_else(|| format!("line {line}: missing `{column}` field"))?;
        values.push(parse_value(field, line)?);
    }
    Ok(values)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))
}

fn write_rows<R>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), CliError>
where
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize)]
pub struct SolveSidecar {
    pub schema: u32,
    pub n: usize,
    pub loss: String,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c: f64,
    pub tol: f64,
    pub inner_t: usize,
    pub mode: AugmentationMode,
    pub iterations: usize,
    pub inner_sweeps: usize,
    pub terminated: Termination,
    pub final_objective: f64,
    pub final_dual_residual: f64,
    pub final_primal_residual: f64,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_residual_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primal_residual_trace: Option<Vec<f64>>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    if sidecar_path(&a.out) == a.out {
        return Err(CliError::Input(format!(
            "{}: output CSV must not have a .json extension",
            a.out.display()
        )));
    }
    let loss = match a.loss {
        LossArg::Quadratic => LossModel::Quadratic,
        LossArg::Lad => LossModel::LeastAbsoluteDeviation,
        LossArg::Huber => LossModel::huber(a.huber_delta.unwrap_or(crate::loss::DEFAULT_HUBER_DELTA))?,
    };
    let mode = match a.mode {
        ModeArg::Singly => AugmentationMode::SinglyAugmented,
        ModeArg::Doubly => AugmentationMode::DoublyAugmented,
    };
    let config = AlmConfig::new(a.lambda1, a.lambda2)
        .with_c(a.c)
        .with_tol(a.tol)
        .with_max_outer_iters(a.max_iters)
        .with_inner_t(a.inner_t)
        .with_mode(mode)
        .with_trace(!a.no_trace);
    config.validate(&loss)?;

    let text = fs::read_to_string(&a.input).map_err(|e| io_err(&a.input, e))?;
    let y = parse_signal(&text, &a.column).map_err(|msg| CliError::Input(format!("{}: {msg}", a.input.display())))?;

    let start = Instant::now();
    let report: SolveReport = solve(&y, &loss, &config, None)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;

    write_rows(
        &a.out,
        &["index", "y", "beta_hat"],
        y.iter()
            .zip(&report.beta_hat)
            .enumerate()
            .map(|(i, (yi, b))| [i.to_string(), yi.to_string(), b.to_string()]),
    )?;
    let trace = |v: &Vec<f64>| (!a.no_trace).then(|| v.clone());
    let sidecar = SolveSidecar {
        schema: SIDECAR_SCHEMA,
        n: y.len(),
        loss: loss.name().to_string(),
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        c: a.c,
        tol: a.tol,
        inner_t: a.inner_t,
        mode,
        iterations: report.iterations,
        inner_sweeps: report.inner_sweeps,
        terminated: report.terminated,
        final_objective: report.final_objective,
        final_dual_residual: report.final_dual_residual,
        final_primal_residual: report.final_primal_residual,
        wall_time_ms,
        objective_trace: trace(&report.objective_trace),
        dual_residual_trace: trace(&report.dual_residual_trace),
        primal_residual_trace: trace(&report.primal_residual_trace),
    };
    write_json(&sidecar_path(&a.out), &sidecar)?;

    Ok(match report.terminated {
        Termination::Converged => EXIT_OK,
        Termination::MaxIters => {
            eprintln!("warning: stopped at the iteration limit ({})", report.iterations);
            EXIT_MAX_ITERS
        }
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let noise = match a.noise {
        NoiseArg::Gaussian => NoiseModel::Gaussian { variance: a.variance },
        NoiseArg::StudentT => NoiseModel::StudentT {
            df: a.df,
            scale: a.scale,
        },
    };
    let mut spec = SignalSpec::new(a.n, a.seed, noise);
    spec.min_block_length = a.min_block;
    let s = generate(&spec)?;
    write_rows(
        &a.out,
        &["truth", "noisy"],
        s.truth.iter().zip(&s.noisy).map(|(t, y)| [t.to_string(), y.to_string()]),
    )
}

fn termination_name(t: Termination) -> String {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIters => "max_iters",
    }
    .to_string()
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    if ![1, 2, 4].contains(&a.experiment) {
        return Err(CliError::Input(format!(
            "unknown experiment {}; expected 1, 2 or 4",
            a.experiment
        )));
    }
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    let dir = &a.out;
    match a.experiment {
        1 => {
            let mut cfg = Experiment1Config {
                replicates: a.replicates,
                ..Experiment1Config::default()
            };
            if let Some(sizes) = &a.sizes {
                cfg.sizes = sizes.clone();
            }
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            let rows = run_experiment1(&cfg)?;
            write_rows(
                &dir.join("experiment1.csv"),
                &[
                    "T",
                    "n",
                    "replicates",
                    "mean_outer_iterations",
                    "mean_inner_sweeps",
                    "mean_wall_time_ms",
                ],
                rows.iter().map(|r| {
                    [
                        r.inner_t.to_string(),
                        r.n.to_string(),
                        r.replicates.to_string(),
                        r.mean_outer_iterations.to_string(),
                        r.mean_inner_sweeps.to_string(),
                        format!("{:.3}", r.mean_wall_time_ms),
                    ]
                }),
            )
        }
        2 => {
            let mut cfg = Experiment2Config::default();
            if let Some(n) = a.n {
                cfg.n = n;
            }
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            let traces = run_experiment2(&cfg)?;
            for t in &traces {
                write_rows(
                    &dir.join(format!("experiment2_trace_c{}.csv", t.c)),
                    &["iteration", "mse"],
                    t.mse.iter().enumerate().map(|(k, m)| [(k + 1).to_string(), m.to_string()]),
                )?;
            }
            write_rows(
                &dir.join("experiment2_summary.csv"),
                &["c", "iterations", "terminated", "final_mse", "settle_iteration"],
                traces.iter().map(|t| {
                    [
                        t.c.to_string(),
                        t.iterations.to_string(),
                        termination_name(t.terminated),
                        t.final_mse().to_string(),
                        t.settle_iteration().to_string(),
                    ]
                }),
            )?;
            let sizes = a.scaling_sizes.clone().unwrap_or_else(|| vec![100, 1000, 10_000]);
            let scaling = run_scaling(&cfg, 5.0, &sizes, 3)?;
            write_rows(
                &dir.join("experiment2_scaling.csv"),
                &["n", "iterations", "terminated", "wall_time_ms"],
                scaling.iter().map(|r| {
                    [
                        r.n.to_string(),
                        r.iterations.to_string(),
                        termination_name(r.terminated),
                        format!("{:.3}", r.wall_time_ms),
                    ]
                }),
            )
        }
        _ => {
            let mut cfg = Experiment4Config::default();
            if let Some(n) = a.n {
                cfg.n = n;
            }
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            let r = run_experiment4(&cfg)?;
            write_rows(
                &dir.join("experiment4_reconstruction.csv"),
                &["index", "truth", "noisy", "quadratic", "lad"],
                (0..r.truth.len()).map(|i| {
                    [
                        i.to_string(),
                        r.truth[i].to_string(),
                        r.noisy[i].to_string(),
                        r.quadratic.beta_hat[i].to_string(),
                        r.lad.beta_hat[i].to_string(),
                    ]
                }),
            )?;
            write_rows(
                &dir.join("experiment4_best.csv"),
                &["loss", "lambda1", "lambda2", "mse"],
                [("quadratic", &r.quadratic), ("lad", &r.lad)].map(|(name, b)| {
                    [
                        name.to_string(),
                        b.lambda1.to_string(),
                        b.lambda2.to_string(),
                        b.mse.to_string(),
                    ]
                }),
            )?;
            write_rows(
                &dir.join("experiment4_grid.csv"),
                &["loss", "lambda1", "lambda2", "mse", "terminated"],
                r.grid.iter().map(|g| {
                    [
                        g.loss.clone(),
                        g.lambda1.to_string(),
                        g.lambda2.to_string(),
                        g.mse.to_string(),
                        termination_name(g.terminated),
                    ]
                }),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_format() {
        assert_eq!(parse_signal("0\n4\n", "y").unwrap(), vec![0.0, 4.0]);
        assert_eq!(parse_signal("1.5\n\n-2e-3\n", "y").unwrap(), vec![1.5, -0.002]);
    }

    #[test]
    fn csv_format_with_extra_columns() {
        let v = parse_signal("index,y,w\n0,1.0,3\n1, 2.5 ,4\n", "y").unwrap();
        assert_eq!(v, vec![1.0, 2.5]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_signal("1\n2\nabc\n", "y").unwrap_err();
        assert!(e.starts_with("line 3:"), "{e}");
        let e = parse_signal("y\n1\nfoo\n", "y").unwrap_err();
        assert!(e.starts_with("line 3:"), "{e}");
        let e = parse_signal("a,b\n1,2\n", "y").unwrap_err();
        assert!(e.starts_with("line 1:"), "{e}");
        assert!(parse_signal("", "y").is_err());
        assert!(parse_signal("\n\n", "y").is_err());
        assert!(parse_signal("3\n", "y").is_err());
        assert!(parse_signal("1\ninf\n", "y").unwrap_err().contains("not finite"));
    }

    #[test]
    fn sidecar_next_to_csv() {
        assert_eq!(sidecar_path(Path::new("out/beta.csv")), PathBuf::from("out/beta.json"));
        assert_eq!(sidecar_path(Path::new("beta")), PathBuf::from("beta.json"));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["flsa"]), EXIT_INPUT);
        assert_eq!(run(["flsa", "solve"]), EXIT_INPUT);
        assert_eq!(run(["flsa", "bench", "--experiment", "x", "--out", "."]), EXIT_INPUT);
        assert_eq!(run(["flsa", "--help"]), EXIT_OK);
    }
}
