//! Sweep orchestration: one run per configured Mach number, each writing
//! its own diagnostics CSV and snapshots into a private directory, plus a
//! deterministic sweep summary. Runs may execute in parallel worker slots;
//! a run that aborts is recorded and the sweep continues.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use mll_core::euler::{run_pair, PressureLaw, SolverConfig, State};
use mll_core::norms::NormParams;
use mll_core::snapshot;
use mll_core::spectral::SpectralField;

use crate::config::ExperimentConfig;
use crate::csvio::{fmt_float, sanitize_cell, CsvWriter};
use crate::data::{generate_initial_data, Recipe};
use crate::CliError;

pub const DIAGNOSTIC_COLUMNS: [&str; 13] = [
    "step",
    "t",
    "tau",
    "dt",
    "analytic_state",
    "running_sup",
    "velocity_err",
    "pressure_norm",
    "l2_pressure",
    "l2_velocity",
    "l2_reference",
    "l2_projected_err",
    "energy",
];

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "mach",
    "status",
    "sup_analytic",
    "final_velocity_err",
    "velocity_err_l2_time",
    "sup_l2_pressure",
    "final_l2_projected_err",
    "energy_drift",
    "steps",
];

#[derive(Debug, Clone)]
pub struct RunStats {
    pub sup_analytic: f64,
    pub final_velocity_err: f64,
    pub velocity_err_l2_time: f64,
    pub sup_l2_pressure: f64,
    pub final_l2_projected_err: f64,
    pub energy_drift: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub mach: f64,
    pub outcome: Result<RunStats, String>,
    pub wall_seconds: f64,
    pub dir: PathBuf,
}

#[derive(Debug)]
pub struct SweepResult {
    pub runs: Vec<RunSummary>,
    pub summary_path: PathBuf,
}

impl SweepResult {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }
}

/// Directory name for one run, derived from the Mach number.
pub fn run_dir_name(mach: f64) -> String {
    format!("eps_{mach:e}")
}

/// Executes the configured sweep and writes all output files.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, CliError> {
    let grid = cfg.build_grid()?;
    let law = cfg.build_law()?;
    let norms = cfg.build_norms()?;
    let solver = cfg.build_solver();
    let delta = cfg.delta();
    let recipe = Recipe::parse(&cfg.data.recipe)?;
    let out_dir = cfg.effective_out_dir();
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    // One data set for the whole sweep: the recipe is Mach-independent.
    let (pressure, velocity) = generate_initial_data(
        recipe,
        &grid,
        cfg.run.seed,
        cfg.norms.tau0,
        cfg.data.bound,
        cfg.norms.max_order,
        cfg.data.file.as_deref(),
    )?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunSummary>>> =
        Mutex::new(vec![None; cfg.run.eps.len()]);
    let workers = cfg.run.jobs.min(cfg.run.eps.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= cfg.run.eps.len() {
                    break;
                }
                let mach = cfg.run.eps[index];
                let dir = out_dir.join(run_dir_name(mach));
                let started = Instant::now();
                let outcome = execute_run(
                    cfg, &law, &norms, &solver, delta, &pressure, &velocity, mach, &dir,
                );
                let summary = RunSummary {
                    mach,
                    outcome,
                    wall_seconds: started.elapsed().as_secs_f64(),
                    dir,
                };
                results.lock().unwrap()[index] = Some(summary);
            });
        }
    });

    let runs: Vec<RunSummary> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect();

    let summary_path = out_dir.join("summary.csv");
    write_summary(&summary_path, &runs)?;
    Ok(SweepResult { runs, summary_path })
}

#[allow(clippy::too_many_arguments)]
fn execute_run(
    cfg: &ExperimentConfig,
    law: &PressureLaw<f64>,
    norms: &NormParams<f64>,
    solver: &SolverConfig<f64>,
    delta: f64,
    pressure: &SpectralField<f64>,
    velocity: &[SpectralField<f64>],
    mach: f64,
    dir: &Path,
) -> Result<RunStats, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let state = State::new(pressure.clone(), velocity.to_vec(), mach).map_err(|e| e.to_string())?;

    let file = File::create(dir.join("diagnostics.csv")).map_err(|e| e.to_string())?;
    let mut csv = CsvWriter::new(BufWriter::new(file), &DIAGNOSTIC_COLUMNS)
        .map_err(|e| e.to_string())?;

    let snapshot_every = cfg.solver.snapshot_every;
    let mut diag_count = 0usize;
    let mut io_error: Option<String> = None;
    let record = run_pair(&state, law, solver, norms, delta, |row, state, reference| {
        let cells = vec![
            row.step.to_string(),
            fmt_float(row.t),
            fmt_float(row.tau),
            fmt_float(row.dt),
            fmt_float(row.analytic_state),
            fmt_float(row.running_sup),
            fmt_float(row.velocity_err),
            fmt_float(row.pressure_norm),
            fmt_float(row.l2_pressure),
            fmt_float(row.l2_velocity),
            fmt_float(row.l2_reference),
            fmt_float(row.l2_projected_err),
            fmt_float(row.energy),
        ];
        if let Err(e) = csv.row(&cells) {
            io_error.get_or_insert(e.to_string());
        }
        if snapshot_every > 0 && diag_count.is_multiple_of(snapshot_every) {
            let mut fields: Vec<(String, &SpectralField<f64>)> =
                vec![("p".into(), &state.pressure)];
            for (i, v) in state.velocity.iter().enumerate() {
                fields.push((format!("v{}", i + 1), v));
            }
            for (i, w) in reference.iter().enumerate() {
                fields.push((format!("w{}", i + 1), w));
            }
            let named: Vec<(&str, &SpectralField<f64>)> =
                fields.iter().map(|(n, f)| (n.as_str(), *f)).collect();
            let path = dir.join(format!("snap_{:08}.mlsf", row.step));
            if let Err(e) = snapshot::write_file(&path, &named) {
                io_error.get_or_insert(e.to_string());
            }
        }
        diag_count += 1;
    });
    csv.flush().map_err(|e| e.to_string())?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let record = record.map_err(|e| e.to_string())?;
    let last = record.final_row();
    Ok(RunStats {
        sup_analytic: record.sup_analytic,
        final_velocity_err: last.velocity_err,
        velocity_err_l2_time: record.velocity_err_l2_time,
        sup_l2_pressure: record.sup_l2_pressure,
        final_l2_projected_err: last.l2_projected_err,
        energy_drift: record.energy_drift,
        steps: record.steps,
    })
}

fn write_summary(path: &Path, runs: &[RunSummary]) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    let mut csv = CsvWriter::new(BufWriter::new(file), &SUMMARY_COLUMNS)
        .map_err(CliError::runtime)?;
    for run in runs {
        let cells = match &run.outcome {
            Ok(stats) => vec![
                fmt_float(run.mach),
                "ok".to_string(),
                fmt_float(stats.sup_analytic),
                fmt_float(stats.final_velocity_err),
                fmt_float(stats.velocity_err_l2_time),
                fmt_float(stats.sup_l2_pressure),
                fmt_float(stats.final_l2_projected_err),
                fmt_float(stats.energy_drift),
                stats.steps.to_string(),
            ],
            Err(msg) => vec![
                fmt_float(run.mach),
                format!("error: {}", sanitize_cell(msg)),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ],
        };
        csv.row(&cells).map_err(CliError::runtime)?;
    }
    csv.flush().map_err(CliError::runtime)?;
    Ok(())
}
