use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use mll_cli::config::ExperimentConfig;
use mll_cli::csvio::{fmt_float, CsvWriter, SCHEMA_LINE};
use mll_cli::sweep::run_sweep;
use mll_cli::CliError;
use mll_core::faadibruno::{series_compose, PowerSeries1, PowerSeries3};
use mll_core::multiindex::{enumerate_partitions, MultiIndex};
use mll_core::norms::analytic_norm;
use mll_core::num::BigRational;
use mll_core::snapshot;
use mll_core::spectral::SpectralField;
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "mll",
    version,
    about = "Low-Mach-number laboratory: pseudo-spectral Euler runs, analytic norms, and exact composition kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOverrides {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single Mach number from the configuration.
    Run {
        #[command(flatten)]
        overrides: RunOverrides,
        /// Mach number override (defaults to the first configured value).
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Integrate every configured Mach number and write a sweep summary.
    Sweep {
        #[command(flatten)]
        overrides: RunOverrides,
        /// Mach number list override.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Parallel worker slots.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate the analytic/Gevrey norm of a snapshot file.
    Norm {
        #[arg(long)]
        snapshot: PathBuf,
        /// Norm radius.
        #[arg(long)]
        tau: f64,
        /// Gevrey exponent (1 = analytic).
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Truncation order of the derivative sum.
        #[arg(long, default_value_t = 30)]
        mmax: usize,
        /// Time stamp written to the output row.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Exact combinatorics kernels.
    #[command(subcommand)]
    Fdb(FdbCommand),
    /// Snapshot file utilities.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Subcommand)]
enum FdbCommand {
    /// Enumerate the ordered derivative partitions of (i, beta).
    Partitions {
        /// Total multiplicity.
        #[arg(long)]
        i: u32,
        /// Target multi-index, comma separated (2 or 3 components).
        #[arg(long, value_delimiter = ',')]
        beta: Vec<u32>,
    },
    /// Compose a univariate series with a multivariate one and print the
    /// coefficients as CSV.
    Compose {
        /// Series description file (TOML).
        #[arg(long)]
        series: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Print the header and per-field norms of a snapshot file.
    Inspect { file: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { overrides, eps } => {
            let mut cfg = load_config(&overrides)?;
            let chosen = eps.unwrap_or(cfg.run.eps[0]);
            cfg.run.eps = vec![chosen];
            cfg.validate()?;
            execute_sweep(&cfg)
        }
        Command::Sweep {
            overrides,
            eps,
            jobs,
        } => {
            let mut cfg = load_config(&overrides)?;
            if let Some(list) = eps {
                cfg.run.eps = list;
            }
            if let Some(n) = jobs {
                cfg.run.jobs = n;
            }
            cfg.validate()?;
            execute_sweep(&cfg)
        }
        Command::Norm {
            snapshot,
            tau,
            sigma,
            mmax,
            t,
        } => norm_command(&snapshot, tau, sigma, mmax, t),
        Command::Fdb(cmd) => match cmd {
            FdbCommand::Partitions { i, beta } => partitions_command(i, &beta),
            FdbCommand::Compose { series, out } => compose_command(&series, out.as_deref()),
        },
        Command::Snapshot(SnapshotCommand::Inspect { file }) => inspect_command(&file),
    }
}

fn load_config(overrides: &RunOverrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&overrides.config)?;
    if let Some(dir) = &overrides.out {
        cfg.run.out_dir = dir.clone();
    }
    if let Some(seed) = overrides.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn execute_sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let result = run_sweep(cfg)?;
    for run in &result.runs {
        match &run.outcome {
            Ok(stats) => println!(
                "eps={:e} status=ok steps={} sup_analytic={:.6e} wall={:.2}s",
                run.mach, stats.steps, stats.sup_analytic, run.wall_seconds
            ),
            Err(msg) => println!(
                "eps={:e} status=aborted wall={:.2}s reason: {msg}",
                run.mach, run.wall_seconds
            ),
        }
    }
    println!("summary: {}", result.summary_path.display());
    if result.all_ok() {
        Ok(())
    } else {
        Err(CliError::runtime("at least one run aborted"))
    }
}

fn norm_command(path: &PathBuf, tau: f64, sigma: f64, mmax: usize, t: f64) -> Result<(), CliError> {
    let snap = snapshot::read_file(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let (_, fields) = snap
        .into_fields::<f64>()
        .map_err(|e| CliError::usage(format!("bad snapshot: {e}")))?;
    if fields.is_empty() {
        return Err(CliError::usage("snapshot holds no fields"));
    }
    let stacked: Vec<&SpectralField<f64>> = fields.iter().map(|(_, f)| f).collect();
    let report = analytic_norm(&stacked, tau, sigma, mmax).map_err(CliError::usage)?;

    let stdout = std::io::stdout();
    let mut columns = vec![
        "t".to_string(),
        "tau".to_string(),
        "value".to_string(),
        "tail_bound".to_string(),
    ];
    columns.extend((0..=mmax).map(|m| format!("per_{m}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = CsvWriter::new(stdout.lock(), &column_refs).map_err(CliError::runtime)?;
    let mut cells = vec![
        fmt_float(t),
        fmt_float(tau),
        fmt_float(report.value),
        fmt_float(report.tail_bound),
    ];
    cells.extend(report.per_order.iter().map(|&x| fmt_float(x)));
    csv.row(&cells).map_err(CliError::runtime)?;
    csv.flush().map_err(CliError::runtime)?;
    Ok(())
}

fn partitions_command(i: u32, beta: &[u32]) -> Result<(), CliError> {
    let beta = MultiIndex::new(beta).map_err(CliError::usage)?;
    let sets = enumerate_partitions(i, &beta).map_err(CliError::usage)?;
    println!("# partitions of beta={beta} with total multiplicity i={i}");
    let mut total = 0usize;
    for s in 1..=sets.max_size() {
        for tuple in sets.of_size(s) {
            let body = tuple
                .pairs()
                .iter()
                .map(|(k, lambda)| format!("(k={k}, lambda={lambda})"))
                .collect::<Vec<_>>()
                .join(" ");
            println!("s={s}: {body}");
            total += 1;
        }
    }
    println!("total {total}");
    Ok(())
}

/// Input for `fdb compose`: truncation order, outer coefficients
/// `a_0..a_N`, and sparse inner terms, all as exact rational strings.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposeInput {
    dim: usize,
    order: u32,
    outer: Vec<String>,
    #[serde(default)]
    inner: Vec<ComposeTerm>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposeTerm {
    index: Vec<u32>,
    coeff: String,
}

fn parse_rational(text: &str) -> Result<BigRational, CliError> {
    BigRational::from_str(text.trim())
        .map_err(|e| CliError::usage(format!("bad rational '{text}': {e}")))
}

fn compose_command(series: &PathBuf, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(series)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", series.display())))?;
    let input: ComposeInput =
        toml::from_str(&text).map_err(|e| CliError::usage(format!("series parse error: {e}")))?;

    let outer_coeffs: Vec<BigRational> = input
        .outer
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<_, _>>()?;
    let outer = PowerSeries1::new(outer_coeffs).map_err(CliError::usage)?;
    let mut inner = PowerSeries3::zero_constant(input.dim, input.order).map_err(CliError::usage)?;
    for term in &input.inner {
        let idx = MultiIndex::new(&term.index).map_err(CliError::usage)?;
        inner
            .set(&idx, parse_rational(&term.coeff)?)
            .map_err(CliError::usage)?;
    }
    let composed = series_compose(&outer, &inner, input.order).map_err(CliError::usage)?;

    let mut body = String::new();
    body.push_str(SCHEMA_LINE);
    body.push('\n');
    let axis_names: Vec<String> = (1..=input.dim).map(|a| format!("beta_{a}")).collect();
    body.push_str(&axis_names.join(","));
    body.push_str(",coeff\n");
    for (idx, coeff) in composed.terms() {
        let comps = idx
            .components()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",");
        body.push_str(&format!("{comps},{coeff}\n"));
    }
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?,
        None => {
            std::io::stdout()
                .write_all(body.as_bytes())
                .map_err(CliError::runtime)?;
        }
    }
    Ok(())
}

fn inspect_command(path: &PathBuf) -> Result<(), CliError> {
    let snap = snapshot::read_file(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    println!(
        "snapshot {}: dim={} points={} fields={}",
        path.display(),
        snap.dim,
        snap.points,
        snap.fields.len()
    );
    let (_, fields) = snap
        .into_fields::<f64>()
        .map_err(|e| CliError::usage(format!("bad snapshot: {e}")))?;
    for (name, field) in &fields {
        println!("  {name}: l2={:.17e}", field.l2_norm());
    }
    Ok(())
}
