//! Experiment configuration: one TOML file describing the grid, the
//! pressure law, the initial-data recipe, the norm family, the solver
//! policy, and the sweep itself. Command-line flags override single fields;
//! the `MLL_OUT` environment variable overrides the output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mll_core::euler::{PressureLaw, SolverConfig};
use mll_core::faadibruno::PowerSeries1;
use mll_core::norms::NormParams;
use mll_core::spectral::TorusGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub law: LawSection,
    #[serde(default)]
    pub data: DataSection,
    pub norms: NormSection,
    pub solver: SolverSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    /// "linear-acoustics", "ideal-gas", or "series".
    pub kind: String,
    pub gamma: Option<f64>,
    pub k_const: Option<f64>,
    pub p_ref: Option<f64>,
    /// Validity radius override.
    pub radius: Option<f64>,
    /// Coefficient series for kind = "series".
    pub coeff_p: Option<Vec<f64>>,
    pub coeff_v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// "general", "well-prepared", or "file".
    pub recipe: String,
    pub file: Option<PathBuf>,
    /// Initial-data bound checked (and targeted, with margin 0.9) by the
    /// random recipes.
    pub bound: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            recipe: "general".into(),
            file: None,
            bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    pub tau0: f64,
    pub decay_rate: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    /// Radius of the error metric; defaults to `tau0 / 4`.
    pub delta: Option<f64>,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_max_order() -> usize {
    30
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_advective: f64,
    #[serde(default = "default_cfl")]
    pub cfl_acoustic: f64,
    pub fixed_dt: Option<f64>,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_true")]
    pub advection: bool,
    #[serde(default = "default_diag_every")]
    pub diag_every: usize,
    /// Snapshot every this many diagnostic emissions; zero disables.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_diag_every() -> usize {
    10
}

fn default_max_steps() -> usize {
    5_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Mach numbers of the sweep; positive and distinct.
    pub eps: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A small general-data demonstration sweep.
    pub fn demo() -> Self {
        Self {
            grid: GridSection { dim: 2, points: 64 },
            law: LawSection {
                kind: "ideal-gas".into(),
                gamma: Some(1.4),
                k_const: Some(1.0),
                p_ref: Some(1.0),
                radius: None,
                coeff_p: None,
                coeff_v: None,
            },
            data: DataSection::default(),
            norms: NormSection {
                tau0: 0.5,
                decay_rate: 1.0,
                sigma: 1.0,
                max_order: 30,
                delta: None,
            },
            solver: SolverSection {
                t_end: 0.2,
                cfl_advective: 0.5,
                cfl_acoustic: 0.5,
                fixed_dt: None,
                dealias: true,
                advection: true,
                diag_every: 10,
                snapshot_every: 0,
                max_steps: default_max_steps(),
            },
            run: RunSection {
                eps: vec![0.2, 0.1, 0.05, 0.025],
                seed: 7,
                out_dir: PathBuf::from("out"),
                jobs: 1,
            },
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.run.eps.is_empty() {
            return Err(CliError::usage("run.eps must list at least one Mach number"));
        }
        for &e in &self.run.eps {
            if !e.is_finite() || e <= 0.0 {
                return Err(CliError::usage(format!("Mach number {e} must be positive")));
            }
        }
        for (i, a) in self.run.eps.iter().enumerate() {
            if self.run.eps[i + 1..].contains(a) {
                return Err(CliError::usage(format!("duplicate Mach number {a}")));
            }
        }
        if self.run.jobs == 0 {
            return Err(CliError::usage("run.jobs must be at least 1"));
        }
        // grid / law / norm parameters are validated by their builders
        self.build_grid()?;
        self.build_law()?;
        self.build_norms()?;
        if self.delta() <= 0.0 || self.delta() > self.norms.tau0 {
            return Err(CliError::usage("norms.delta must lie in (0, tau0]"));
        }
        match self.data.recipe.as_str() {
            "general" | "well-prepared" => {}
            "file" => {
                if self.data.file.is_none() {
                    return Err(CliError::usage("data.recipe = \"file\" needs data.file"));
                }
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown data recipe '{other}' (general | well-prepared | file)"
                )));
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<TorusGrid<f64>>, CliError> {
        TorusGrid::new(self.grid.dim, self.grid.points).map_err(CliError::usage)
    }

    pub fn build_law(&self) -> Result<PressureLaw<f64>, CliError> {
        let law = match self.law.kind.as_str() {
            "linear-acoustics" => PressureLaw::linear_acoustics(),
            "ideal-gas" => PressureLaw::ideal_gas(
                self.law.gamma.unwrap_or(1.4),
                self.law.k_const.unwrap_or(1.0),
                self.law.p_ref.unwrap_or(1.0),
            )
            .map_err(CliError::usage)?,
            "series" => {
                let coeff_p = self
                    .law
                    .coeff_p
                    .clone()
                    .ok_or_else(|| CliError::usage("law.kind = \"series\" needs law.coeff_p"))?;
                let coeff_v = self
                    .law
                    .coeff_v
                    .clone()
                    .ok_or_else(|| CliError::usage("law.kind = \"series\" needs law.coeff_v"))?;
                PressureLaw::from_series(
                    PowerSeries1::new(coeff_p).map_err(CliError::usage)?,
                    PowerSeries1::new(coeff_v).map_err(CliError::usage)?,
                    self.law.radius.unwrap_or(1.0),
                    "series",
                )
                .map_err(CliError::usage)?
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown law kind '{other}' (linear-acoustics | ideal-gas | series)"
                )));
            }
        };
        match self.law.radius {
            Some(r) => law.with_radius(r).map_err(CliError::usage),
            None => Ok(law),
        }
    }

    pub fn build_norms(&self) -> Result<NormParams<f64>, CliError> {
        NormParams::new(
            self.norms.tau0,
            self.norms.decay_rate,
            self.norms.sigma,
            self.norms.max_order,
            self.solver.t_end,
        )
        .map_err(CliError::usage)
    }

    pub fn build_solver(&self) -> SolverConfig<f64> {
        SolverConfig {
            t_end: self.solver.t_end,
            cfl_advective: self.solver.cfl_advective,
            cfl_acoustic: self.solver.cfl_acoustic,
            fixed_dt: self.solver.fixed_dt,
            dealias: self.solver.dealias,
            advection: self.solver.advection,
            diag_every: self.solver.diag_every,
            max_steps: self.solver.max_steps,
        }
    }

    pub fn delta(&self) -> f64 {
        self.norms.delta.unwrap_or(self.norms.tau0 / 4.0)
    }

    /// Output directory after the `MLL_OUT` override.
    pub fn effective_out_dir(&self) -> PathBuf {
        match std::env::var_os("MLL_OUT") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.run.out_dir.clone(),
        }
    }
}
