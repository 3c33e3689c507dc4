//! Seeded initial-data recipes. Spectral amplitudes fall off like
//! `exp(-2 tau0 |k|)` and the fields are rescaled so the initial-data check
//! passes with margin 0.9; the recipes never look at the Mach number, so the
//! same data seeds every run of a sweep.

use std::path::Path;
use std::sync::Arc;

use mll_core::norms::{analytic_norm, initial_data_check};
use mll_core::num_complex::Complex;
use mll_core::snapshot;
use mll_core::spectral::{leray_project, SpectralField, TorusGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::CliError;

const TARGET_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    General,
    WellPrepared,
    File,
}

impl Recipe {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "general" => Ok(Recipe::General),
            "well-prepared" => Ok(Recipe::WellPrepared),
            "file" => Ok(Recipe::File),
            other => Err(CliError::usage(format!("unknown recipe '{other}'"))),
        }
    }
}

/// Pressure and velocity initial data for the configured recipe.
///
/// Random recipes scale to hit `0.9 * bound` in the analytic norm at radius
/// `tau0`; the file recipe loads fields named `p`, `v1`, .. and only checks
/// the bound.
pub fn generate_initial_data(
    recipe: Recipe,
    grid: &Arc<TorusGrid<f64>>,
    seed: u64,
    tau0: f64,
    bound: f64,
    max_order: usize,
    file: Option<&Path>,
) -> Result<(SpectralField<f64>, Vec<SpectralField<f64>>), CliError> {
    if let Recipe::File = recipe {
        return load_from_file(
            grid,
            tau0,
            bound,
            max_order,
            file.ok_or_else(|| CliError::usage("file recipe needs a path"))?,
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pressure = sample_field(grid, &mut rng, tau0);
    let mut velocity: Vec<SpectralField<f64>> = (0..grid.dim())
        .map(|_| sample_field(grid, &mut rng, tau0))
        .collect();

    if recipe == Recipe::WellPrepared {
        pressure = SpectralField::zero(grid);
        velocity = leray_project(&velocity).map_err(CliError::runtime)?;
    }

    let mut stacked: Vec<&SpectralField<f64>> = vec![&pressure];
    stacked.extend(velocity.iter());
    let value = analytic_norm(&stacked, tau0, 1.0, max_order)
        .map_err(CliError::runtime)?
        .value;
    if !value.is_finite() || value == 0.0 {
        return Err(CliError::runtime(format!(
            "cannot scale initial data to the bound {bound}: unscaled norm is {value}; \
             use a smaller amplitude or a finer spectrum"
        )));
    }
    let scale = TARGET_MARGIN * bound / value;
    let pressure = pressure.scaled(scale);
    let velocity: Vec<SpectralField<f64>> = velocity.iter().map(|f| f.scaled(scale)).collect();
    Ok((pressure, velocity))
}

/// One random real field with the analytic spectral envelope. The Nyquist
/// ring stays empty so projections and derivatives commute with the
/// real-field symmetry.
fn sample_field(
    grid: &Arc<TorusGrid<f64>>,
    rng: &mut ChaCha8Rng,
    tau0: f64,
) -> SpectralField<f64> {
    let mut f = SpectralField::zero(grid);
    for flat in 0..grid.len() {
        let k = grid.wavenumbers_of(flat);
        let kn = k[..grid.dim()]
            .iter()
            .map(|&x| (x * x) as f64)
            .sum::<f64>()
            .sqrt();
        let amp = (-2.0 * tau0 * kn).exp();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        f.coeffs_mut()[flat] = Complex::new(amp * re, amp * im);
    }
    f.zero_nyquist();
    f.enforce_hermitian();
    f
}

fn load_from_file(
    grid: &Arc<TorusGrid<f64>>,
    tau0: f64,
    bound: f64,
    max_order: usize,
    path: &Path,
) -> Result<(SpectralField<f64>, Vec<SpectralField<f64>>), CliError> {
    let snap = snapshot::read_file(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    if snap.dim != grid.dim() || snap.points != grid.points() {
        return Err(CliError::usage(format!(
            "snapshot grid {}^{} does not match configured {}^{}",
            snap.points,
            snap.dim,
            grid.points(),
            grid.dim()
        )));
    }
    let (_, mut fields) = snap
        .into_fields::<f64>()
        .map_err(|e| CliError::usage(format!("bad snapshot: {e}")))?;
    let mut take = |name: &str| -> Result<SpectralField<f64>, CliError> {
        let pos = fields
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| CliError::usage(format!("snapshot lacks field '{name}'")))?;
        Ok(fields.swap_remove(pos).1)
    };
    let pressure = take("p")?;
    let velocity: Vec<SpectralField<f64>> = (1..=grid.dim())
        .map(|i| take(&format!("v{i}")))
        .collect::<Result<_, _>>()?;

    let mut stacked: Vec<&SpectralField<f64>> = vec![&pressure];
    stacked.extend(velocity.iter());
    let (ok, report) =
        initial_data_check(&stacked, tau0, bound, max_order).map_err(CliError::runtime)?;
    if !ok {
        return Err(CliError::usage(format!(
            "initial data norm {:.6e} exceeds the bound {bound}; reduce the amplitude",
            report.value
        )));
    }
    Ok((pressure, velocity))
}
