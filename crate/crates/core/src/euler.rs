//! Time integration of the symmetrized compressible Euler system with a
//! general analytic pressure law, the limiting incompressible system, and
//! the paired run that tracks both on one grid.
//!
//! The compressible unknown is `u = (p, v)` with the evolution
//! `du/dt = -v.grad(u) - (1/mach) Einv L u`, where `L` is the acoustic
//! operator `(div v, grad p)` and `Einv` is diagonal with entries `1/a` and
//! `1/r` evaluated pointwise on the scaled pressure. The incompressible
//! reference evolves by projected advection.


// `!(x > 0)` is used instead of `x <= 0` so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

use crate::faadibruno::{FdbError, PowerSeries1};
use crate::norms::{analytic_norm, NormError, NormParams};
use crate::spectral::{
    acoustic_operator, divergence, l2_norm_stacked, leray_project, SpectralError, SpectralField,
    TorusGrid,
};
use crate::Real;
use std::sync::Arc;

/// Tolerance on `||div v||` (relative to the field size) for states that
/// claim to be divergence-free.
pub const DIV_FREE_TOL: f64 = 1e-10;

const IDEAL_GAS_SERIES_ORDER: usize = 24;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "scaled pressure sup-norm {sup:.6e} exceeds the validity radius {radius:.6e} of law '{law}'"
    )]
    CoefficientRange { sup: f64, radius: f64, law: String },
    #[error("coefficient series evaluates non-positive (min {min:.6e}) for law '{law}'")]
    CoefficientNonPositive { min: f64, law: String },
    #[error("state is not finite at t = {time:.6e}")]
    NonFinite { time: f64 },
    #[error("velocity is not divergence-free: ||div v|| = {measured:.6e}")]
    NotDivergenceFree { measured: f64 },
    #[error("end time {t_end:.6e} exceeds the norm horizon {horizon:.6e}")]
    HorizonExceeded { t_end: f64, horizon: f64 },
    #[error("step limit {0} exceeded")]
    StepLimit(usize),
    #[error("invalid pressure law: {0}")]
    InvalidLaw(&'static str),
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Series(#[from] FdbError),
}

/// Coefficient functions of the symmetrizer: the pressure-equation weight
/// `a` and the velocity-equation weight `r`, stored as truncated power
/// series in the scaled pressure with a validity radius.
#[derive(Debug, Clone)]
pub struct PressureLaw<T> {
    coeff_p: PowerSeries1<T>,
    coeff_v: PowerSeries1<T>,
    validity_radius: T,
    label: String,
}

impl<T: Real> PressureLaw<T> {
    /// Builds a law from explicit series; both must be positive at zero.
    pub fn from_series(
        coeff_p: PowerSeries1<T>,
        coeff_v: PowerSeries1<T>,
        validity_radius: T,
        label: impl Into<String>,
    ) -> Result<Self, SolverError> {
        if !(validity_radius > T::zero()) {
            return Err(SolverError::InvalidLaw("validity radius must be positive"));
        }
        let law = Self {
            coeff_p,
            coeff_v,
            validity_radius,
            label: label.into(),
        };
        if !(law.coeff_p0() > T::zero()) || !(law.coeff_v0() > T::zero()) {
            return Err(SolverError::InvalidLaw(
                "coefficients must be positive at the reference state",
            ));
        }
        Ok(law)
    }

    /// Unit coefficients: the linear-acoustics benchmark law, valid for any
    /// pressure amplitude.
    pub fn linear_acoustics() -> Self {
        Self {
            coeff_p: PowerSeries1::new(vec![T::one()]).expect("non-empty"),
            coeff_v: PowerSeries1::new(vec![T::one()]).expect("non-empty"),
            validity_radius: T::infinity(),
            label: "linear-acoustics".into(),
        }
    }

    /// Ideal-gas law with adiabatic exponent `gamma`, equation-of-state
    /// constant `k_const`, and reference pressure `p_ref`: the pressure
    /// weight is the constant `1/gamma` and the velocity weight is
    /// `k_const * (p_ref * exp(x))^(1/gamma - 1)` expanded around zero.
    pub fn ideal_gas(gamma: T, k_const: T, p_ref: T) -> Result<Self, SolverError> {
        if !(gamma > T::one()) {
            return Err(SolverError::InvalidLaw("adiabatic exponent must exceed 1"));
        }
        if !(k_const > T::zero()) || !(p_ref > T::zero()) {
            return Err(SolverError::InvalidLaw(
                "equation-of-state constants must be positive",
            ));
        }
        let exponent = T::one() / gamma - T::one();
        let base = k_const * p_ref.powf(exponent);
        let mut coeffs = Vec::with_capacity(IDEAL_GAS_SERIES_ORDER + 1);
        let mut term = base;
        coeffs.push(term);
        for n in 1..=IDEAL_GAS_SERIES_ORDER {
            term = term * exponent / T::from_usize(n).unwrap();
            coeffs.push(term);
        }
        Self::from_series(
            PowerSeries1::new(vec![T::one() / gamma]).expect("non-empty"),
            PowerSeries1::new(coeffs).expect("non-empty"),
            T::one(),
            "ideal-gas",
        )
    }

    /// Same law with a different validity radius.
    pub fn with_radius(mut self, radius: T) -> Result<Self, SolverError> {
        if !(radius > T::zero()) {
            return Err(SolverError::InvalidLaw("validity radius must be positive"));
        }
        self.validity_radius = radius;
        Ok(self)
    }

    pub fn coeff_p_at(&self, x: T) -> T {
        self.coeff_p.eval(&x)
    }

    pub fn coeff_v_at(&self, x: T) -> T {
        self.coeff_v.eval(&x)
    }

    pub fn coeff_p0(&self) -> T {
        self.coeff_p.coeffs()[0]
    }

    pub fn coeff_v0(&self) -> T {
        self.coeff_v.coeffs()[0]
    }

    pub fn coeff_p_series(&self) -> &PowerSeries1<T> {
        &self.coeff_p
    }

    pub fn coeff_v_series(&self) -> &PowerSeries1<T> {
        &self.coeff_v
    }

    pub fn validity_radius(&self) -> T {
        self.validity_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when both weights are state-independent constants.
    pub fn is_constant(&self) -> bool {
        let tail_zero = |s: &PowerSeries1<T>| s.coeffs()[1..].iter().all(|c| *c == T::zero());
        tail_zero(&self.coeff_p) && tail_zero(&self.coeff_v)
    }
}

/// The compressible unknown: scaled pressure variation plus velocity,
/// tagged with the Mach number and current time.
#[derive(Debug, Clone)]
pub struct State<T: Real> {
    pub pressure: SpectralField<T>,
    pub velocity: Vec<SpectralField<T>>,
    pub mach: T,
    pub time: T,
}

impl<T: Real> State<T> {
    pub fn new(
        pressure: SpectralField<T>,
        velocity: Vec<SpectralField<T>>,
        mach: T,
    ) -> Result<Self, SolverError> {
        let grid = pressure.grid();
        if velocity.len() != grid.dim() {
            return Err(SolverError::InvalidState(
                "velocity component count must match the dimension",
            ));
        }
        for comp in &velocity {
            if !comp.grid().same_shape(grid) {
                return Err(SolverError::Spectral(SpectralError::GridMismatch));
            }
        }
        if !(mach > T::zero()) {
            return Err(SolverError::InvalidState("Mach number must be positive"));
        }
        Ok(Self {
            pressure,
            velocity,
            mach,
            time: T::zero(),
        })
    }

    pub fn zero(grid: &Arc<TorusGrid<T>>, mach: T) -> Result<Self, SolverError> {
        Self::new(
            SpectralField::zero(grid),
            (0..grid.dim()).map(|_| SpectralField::zero(grid)).collect(),
            mach,
        )
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        self.pressure.grid()
    }

    /// Pressure and velocity components stacked for norm evaluation.
    pub fn fields(&self) -> Vec<&SpectralField<T>> {
        let mut out = Vec::with_capacity(1 + self.velocity.len());
        out.push(&self.pressure);
        out.extend(self.velocity.iter());
        out
    }

    pub fn add_scaled(&mut self, other: &Self, s: T) -> Result<(), SolverError> {
        self.pressure.add_scaled(&other.pressure, s)?;
        for (a, b) in self.velocity.iter_mut().zip(other.velocity.iter()) {
            a.add_scaled(b, s)?;
        }
        Ok(())
    }

    pub fn enforce_hermitian(&mut self) {
        self.pressure.enforce_hermitian();
        for comp in &mut self.velocity {
            comp.enforce_hermitian();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pressure.is_finite() && self.velocity.iter().all(SpectralField::is_finite)
    }
}

/// Step-size policy and integrator switches.
#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub t_end: T,
    /// Advective CFL constant.
    pub cfl_advective: T,
    /// Acoustic CFL constant.
    pub cfl_acoustic: T,
    /// Bypasses the CFL policy with one fixed step size.
    pub fixed_dt: Option<T>,
    pub dealias: bool,
    /// Disables the advection term (linear acoustic runs).
    pub advection: bool,
    /// Diagnostics every this many steps.
    pub diag_every: usize,
    pub max_steps: usize,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            t_end: T::from_f64(0.1).unwrap(),
            cfl_advective: T::from_f64(0.5).unwrap(),
            cfl_acoustic: T::from_f64(0.5).unwrap(),
            fixed_dt: None,
            dealias: true,
            advection: true,
            diag_every: 10,
            max_steps: 5_000_000,
        }
    }
}

/// Pointwise symmetrizer weights and their inverses as spectral fields,
/// plus the grid minima used by the CFL policy.
#[derive(Debug)]
pub struct CoefficientFields<T: Real> {
    pub coeff_p: SpectralField<T>,
    pub coeff_v: SpectralField<T>,
    pub inv_coeff_p: SpectralField<T>,
    pub inv_coeff_v: SpectralField<T>,
    pub min_coeff_p: T,
    pub min_coeff_v: T,
}

/// Evaluates the truncated coefficient series of the law at each grid point
/// of the scaled pressure and transforms back. The measured sup-norm of the
/// input must stay within the law's validity radius.
pub fn eval_coefficients<T: Real>(
    law: &PressureLaw<T>,
    scaled_pressure: &SpectralField<T>,
) -> Result<CoefficientFields<T>, SolverError> {
    let grid = scaled_pressure.grid();
    let phys = scaled_pressure.physical();
    let mut sup = T::zero();
    for z in &phys {
        sup = sup.max(z.norm());
    }
    check_range(law, sup)?;

    let len = phys.len();
    let mut vals_p = Vec::with_capacity(len);
    let mut vals_v = Vec::with_capacity(len);
    let mut inv_p = Vec::with_capacity(len);
    let mut inv_v = Vec::with_capacity(len);
    let mut min_p = T::infinity();
    let mut min_v = T::infinity();
    for z in &phys {
        let x = z.re;
        let a = law.coeff_p_at(x);
        let r = law.coeff_v_at(x);
        min_p = min_p.min(a);
        min_v = min_v.min(r);
        vals_p.push(num_complex::Complex::new(a, T::zero()));
        vals_v.push(num_complex::Complex::new(r, T::zero()));
        inv_p.push(num_complex::Complex::new(T::one() / a, T::zero()));
        inv_v.push(num_complex::Complex::new(T::one() / r, T::zero()));
    }
    if !(min_p > T::zero()) || !(min_v > T::zero()) {
        return Err(SolverError::CoefficientNonPositive {
            min: min_p.min(min_v).to_f64().unwrap_or(f64::NAN),
            law: law.label().to_string(),
        });
    }
    Ok(CoefficientFields {
        coeff_p: SpectralField::from_physical(grid, vals_p)?,
        coeff_v: SpectralField::from_physical(grid, vals_v)?,
        inv_coeff_p: SpectralField::from_physical(grid, inv_p)?,
        inv_coeff_v: SpectralField::from_physical(grid, inv_v)?,
        min_coeff_p: min_p,
        min_coeff_v: min_v,
    })
}

fn check_range<T: Real>(law: &PressureLaw<T>, sup: T) -> Result<(), SolverError> {
    if law.validity_radius().is_finite() && sup > law.validity_radius() {
        return Err(SolverError::CoefficientRange {
            sup: sup.to_f64().unwrap_or(f64::NAN),
            radius: law.validity_radius().to_f64().unwrap_or(f64::NAN),
            law: law.label().to_string(),
        });
    }
    Ok(())
}

fn product<T: Real>(
    a: &SpectralField<T>,
    b: &SpectralField<T>,
    dealias: bool,
) -> Result<SpectralField<T>, SpectralError> {
    if dealias {
        a.multiply_dealiased(b)
    } else {
        a.multiply(b)
    }
}

/// `v . grad(f)` with dealiased products.
fn advect<T: Real>(
    velocity: &[SpectralField<T>],
    f: &SpectralField<T>,
    dealias: bool,
) -> Result<SpectralField<T>, SolverError> {
    let mut out = SpectralField::zero(f.grid());
    for (axis, v_j) in velocity.iter().enumerate() {
        out.add_scaled(&product(v_j, &f.derivative_axis(axis), dealias)?, T::one())?;
    }
    Ok(out)
}

/// Right side `-v.grad(u) - (1/mach) Einv L u` of the compressible system.
pub fn rhs_compressible<T: Real>(
    state: &State<T>,
    law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
) -> Result<State<T>, SolverError> {
    let (div_v, grad_p) = acoustic_operator(&state.pressure, &state.velocity)?;
    let inv_mach = T::one() / state.mach;

    let mut dp;
    let mut dv: Vec<SpectralField<T>>;
    if law.is_constant() {
        // Constant symmetrizer: Einv is a pair of scalars, no products needed.
        let scaled_p = state.pressure.scaled(state.mach);
        if law.validity_radius().is_finite() {
            check_range(law, scaled_p.sup_norm())?;
        }
        dp = div_v.scaled(-inv_mach / law.coeff_p0());
        dv = grad_p
            .iter()
            .map(|g| g.scaled(-inv_mach / law.coeff_v0()))
            .collect();
    } else {
        let coeffs = eval_coefficients(law, &state.pressure.scaled(state.mach))?;
        dp = product(&coeffs.inv_coeff_p, &div_v, cfg.dealias)?.scaled(-inv_mach);
        dv = Vec::with_capacity(grad_p.len());
        for g in &grad_p {
            dv.push(product(&coeffs.inv_coeff_v, g, cfg.dealias)?.scaled(-inv_mach));
        }
    }

    if cfg.advection {
        dp.add_scaled(
            &advect(&state.velocity, &state.pressure, cfg.dealias)?,
            -T::one(),
        )?;
        for (axis, slot) in dv.iter_mut().enumerate() {
            slot.add_scaled(
                &advect(&state.velocity, &state.velocity[axis], cfg.dealias)?,
                -T::one(),
            )?;
        }
    }

    Ok(State {
        pressure: dp,
        velocity: dv,
        mach: state.mach,
        time: state.time,
    })
}

/// CFL step size: the smaller of the advective limit `c_adv dx / sup|v|`
/// and the acoustic limit `c_ac mach dx sqrt(min a * min r)`.
pub fn compute_dt<T: Real>(
    state: &State<T>,
    law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
) -> Result<T, SolverError> {
    if let Some(dt) = cfg.fixed_dt {
        return Ok(dt);
    }
    let dx = state.grid().spacing();

    let phys: Vec<Vec<num_complex::Complex<T>>> =
        state.velocity.iter().map(|v| v.physical()).collect();
    let mut sup_v = T::zero();
    for point in 0..state.grid().len() {
        let mut sq = T::zero();
        for comp in &phys {
            let m = comp[point].norm();
            sq = sq + m * m;
        }
        sup_v = sup_v.max(sq.sqrt());
    }
    let advective = if sup_v > T::zero() {
        cfg.cfl_advective * dx / sup_v
    } else {
        T::infinity()
    };

    let (min_p, min_v) = if law.is_constant() {
        let scaled_p = state.pressure.scaled(state.mach);
        if law.validity_radius().is_finite() {
            check_range(law, scaled_p.sup_norm())?;
        }
        (law.coeff_p0(), law.coeff_v0())
    } else {
        let coeffs = eval_coefficients(law, &state.pressure.scaled(state.mach))?;
        (coeffs.min_coeff_p, coeffs.min_coeff_v)
    };
    let acoustic = cfg.cfl_acoustic * state.mach * dx * (min_p * min_v).sqrt();

    Ok(advective.min(acoustic))
}

/// One classical fourth-order step of the compressible system; Hermitian
/// symmetry is restored after every stage.
pub fn step_with_dt<T: Real>(
    state: &State<T>,
    law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
    dt: T,
) -> Result<State<T>, SolverError> {
    let half = dt * T::from_f64(0.5).unwrap();
    let sixth = dt / T::from_f64(6.0).unwrap();
    let two = T::from_f64(2.0).unwrap();

    let k1 = rhs_compressible(state, law, cfg)?;
    let mut s2 = state.clone();
    s2.add_scaled(&k1, half)?;
    s2.enforce_hermitian();
    s2.time = state.time + half;
    let k2 = rhs_compressible(&s2, law, cfg)?;

    let mut s3 = state.clone();
    s3.add_scaled(&k2, half)?;
    s3.enforce_hermitian();
    s3.time = state.time + half;
    let k3 = rhs_compressible(&s3, law, cfg)?;

    let mut s4 = state.clone();
    s4.add_scaled(&k3, dt)?;
    s4.enforce_hermitian();
    s4.time = state.time + dt;
    let k4 = rhs_compressible(&s4, law, cfg)?;

    let mut out = state.clone();
    out.add_scaled(&k1, sixth)?;
    out.add_scaled(&k2, sixth * two)?;
    out.add_scaled(&k3, sixth * two)?;
    out.add_scaled(&k4, sixth)?;
    out.enforce_hermitian();
    out.time = state.time + dt;
    if !out.is_finite() {
        return Err(SolverError::NonFinite {
            time: out.time.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

/// CFL-limited step; returns the new state and the step size taken.
pub fn step<T: Real>(
    state: &State<T>,
    law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
) -> Result<(State<T>, T), SolverError> {
    let dt = compute_dt(state, law, cfg)?;
    Ok((step_with_dt(state, law, cfg, dt)?, dt))
}

/// Initial velocity of the incompressible reference: with a constant
/// reference weight the div/curl conditions collapse to the projection of
/// the compressible initial velocity, mean mode preserved.
pub fn init_incompressible_velocity<T: Real>(
    velocity: &[SpectralField<T>],
    _law: &PressureLaw<T>,
) -> Result<Vec<SpectralField<T>>, SolverError> {
    Ok(leray_project(velocity)?)
}

/// Right side `-P(v.grad v)` of the incompressible system; the input must
/// be divergence-free (the pressure is eliminated by the projection and the
/// constant reference weight cancels).
pub fn rhs_incompressible<T: Real>(
    velocity: &[SpectralField<T>],
    _law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
) -> Result<Vec<SpectralField<T>>, SolverError> {
    let div_norm = divergence(velocity)?.l2_norm();
    let scale = l2_norm_stacked(&velocity.iter().collect::<Vec<_>>()).max(T::one());
    if div_norm > T::from_f64(DIV_FREE_TOL).unwrap() * scale {
        return Err(SolverError::NotDivergenceFree {
            measured: div_norm.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut adv = Vec::with_capacity(velocity.len());
    for comp in velocity {
        adv.push(advect(velocity, comp, cfg.dealias)?);
    }
    let projected = leray_project(&adv)?;
    Ok(projected.into_iter().map(|f| f.scaled(-T::one())).collect())
}

/// Fourth-order step of the incompressible reference.
pub fn step_incompressible<T: Real>(
    velocity: &[SpectralField<T>],
    law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
    dt: T,
) -> Result<Vec<SpectralField<T>>, SolverError> {
    let half = dt * T::from_f64(0.5).unwrap();
    let sixth = dt / T::from_f64(6.0).unwrap();
    let two = T::from_f64(2.0).unwrap();

    let add = |base: &[SpectralField<T>],
               inc: &[SpectralField<T>],
               s: T|
     -> Result<Vec<SpectralField<T>>, SolverError> {
        let mut out = base.to_vec();
        for (a, b) in out.iter_mut().zip(inc.iter()) {
            a.add_scaled(b, s)?;
            a.enforce_hermitian();
        }
        Ok(out)
    };

    let k1 = rhs_incompressible(velocity, law, cfg)?;
    let k2 = rhs_incompressible(&add(velocity, &k1, half)?, law, cfg)?;
    let k3 = rhs_incompressible(&add(velocity, &k2, half)?, law, cfg)?;
    let k4 = rhs_incompressible(&add(velocity, &k3, dt)?, law, cfg)?;

    let mut out = velocity.to_vec();
    for (i, slot) in out.iter_mut().enumerate() {
        slot.add_scaled(&k1[i], sixth)?;
        slot.add_scaled(&k2[i], sixth * two)?;
        slot.add_scaled(&k3[i], sixth * two)?;
        slot.add_scaled(&k4[i], sixth)?;
        slot.enforce_hermitian();
        if !slot.is_finite() {
            return Err(SolverError::NonFinite { time: f64::NAN });
        }
    }
    Ok(out)
}

/// The symmetrizer energy `integral of a p^2 + r |v|^2` with the weights
/// evaluated pointwise at the current scaled pressure.
pub fn symmetrizer_energy<T: Real>(
    state: &State<T>,
    law: &PressureLaw<T>,
) -> Result<T, SolverError> {
    let grid = state.grid();
    let p_phys = state.pressure.physical();
    let v_phys: Vec<Vec<num_complex::Complex<T>>> =
        state.velocity.iter().map(|v| v.physical()).collect();
    let mut total = T::zero();
    for point in 0..grid.len() {
        let p = p_phys[point].re;
        let x = state.mach * p;
        if law.validity_radius().is_finite() && x.abs() > law.validity_radius() {
            return Err(SolverError::CoefficientRange {
                sup: x.abs().to_f64().unwrap_or(f64::NAN),
                radius: law.validity_radius().to_f64().unwrap_or(f64::NAN),
                law: law.label().to_string(),
            });
        }
        let mut v_sq = T::zero();
        for comp in &v_phys {
            let val = comp[point].re;
            v_sq = v_sq + val * val;
        }
        total = total + law.coeff_p_at(x) * p * p + law.coeff_v_at(x) * v_sq;
    }
    Ok(total * grid.spacing().powi(grid.dim() as i32))
}

/// One diagnostic sample of a paired run.
#[derive(Debug, Clone)]
pub struct DiagnosticRow<T> {
    pub step: usize,
    pub t: T,
    pub tau: T,
    pub dt: T,
    /// Analytic norm of the compressible state at radius `tau(t)`.
    pub analytic_state: T,
    /// Running sup of `analytic_state` over the samples so far.
    pub running_sup: T,
    /// Analytic norm at radius `delta` of the velocity difference.
    pub velocity_err: T,
    /// Analytic norm at radius `delta` of the pressure.
    pub pressure_norm: T,
    pub l2_pressure: T,
    pub l2_velocity: T,
    pub l2_reference: T,
    /// `L2` distance between the projected compressible velocity and the
    /// incompressible reference.
    pub l2_projected_err: T,
    pub energy: T,
}

/// Aggregate record of a paired run.
#[derive(Debug, Clone)]
pub struct RunRecord<T> {
    pub rows: Vec<DiagnosticRow<T>>,
    /// Sup over sampled times of the analytic norm of the state.
    pub sup_analytic: T,
    /// Sup over sampled times of the pressure `L2` norm.
    pub sup_l2_pressure: T,
    /// Time-integrated velocity error: `sqrt(int ||verr||^2 dt)` by
    /// trapezoid quadrature over the diagnostic times.
    pub velocity_err_l2_time: T,
    pub energy_drift: T,
    pub steps: usize,
}

impl<T: Real> RunRecord<T> {
    pub fn final_row(&self) -> &DiagnosticRow<T> {
        self.rows.last().expect("runs emit at least the initial row")
    }
}

/// Advances the compressible state and the incompressible reference with a
/// shared step size, sampling diagnostics every `diag_every` steps (plus the
/// initial and final times). The callback sees each diagnostic row with the
/// states that produced it.
pub fn run_pair<T: Real>(
    initial: &State<T>,
    law: &PressureLaw<T>,
    cfg: &SolverConfig<T>,
    norms: &NormParams<T>,
    delta: T,
    mut on_diag: impl FnMut(&DiagnosticRow<T>, &State<T>, &[SpectralField<T>]),
) -> Result<RunRecord<T>, SolverError> {
    if cfg.t_end > norms.horizon() * (T::one() + T::from_f64(1e-12).unwrap()) {
        return Err(SolverError::HorizonExceeded {
            t_end: cfg.t_end.to_f64().unwrap_or(f64::NAN),
            horizon: norms.horizon().to_f64().unwrap_or(f64::NAN),
        });
    }
    if !(delta > T::zero()) {
        return Err(SolverError::InvalidState("error-metric radius must be positive"));
    }

    let mut state = initial.clone();
    state.time = T::zero();
    let mut reference = init_incompressible_velocity(&initial.velocity, law)?;

    let mut record = RunRecord {
        rows: Vec::new(),
        sup_analytic: T::zero(),
        sup_l2_pressure: T::zero(),
        velocity_err_l2_time: T::zero(),
        energy_drift: T::zero(),
        steps: 0,
    };
    let mut err_sq_integral = T::zero();
    let mut prev_sample: Option<(T, T)> = None;
    let mut energy0 = T::zero();

    let mut emit = |record: &mut RunRecord<T>,
                    step_idx: usize,
                    dt: T,
                    state: &State<T>,
                    reference: &[SpectralField<T>]|
     -> Result<(), SolverError> {
        let t = state.time.max(T::zero()).min(norms.horizon());
        let tau = norms.radius(t)?;
        let sigma = norms.sigma();
        let m_max = norms.max_order();

        let analytic_state = analytic_norm(&state.fields(), tau, sigma, m_max)?.value;
        let diff: Vec<SpectralField<T>> = state
            .velocity
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| a.minus(b))
            .collect::<Result<_, _>>()?;
        let velocity_err =
            analytic_norm(&diff.iter().collect::<Vec<_>>(), delta, sigma, m_max)?.value;
        let pressure_norm = analytic_norm(&[&state.pressure], delta, sigma, m_max)?.value;
        let l2_pressure = state.pressure.l2_norm();
        let l2_velocity = l2_norm_stacked(&state.velocity.iter().collect::<Vec<_>>());
        let l2_reference = l2_norm_stacked(&reference.iter().collect::<Vec<_>>());
        let projected = leray_project(&state.velocity)?;
        let proj_diff: Vec<SpectralField<T>> = projected
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| a.minus(b))
            .collect::<Result<_, _>>()?;
        let l2_projected_err = l2_norm_stacked(&proj_diff.iter().collect::<Vec<_>>());
        let energy = symmetrizer_energy(state, law)?;

        if record.rows.is_empty() {
            energy0 = energy;
        }
        record.sup_analytic = record.sup_analytic.max(analytic_state);
        record.sup_l2_pressure = record.sup_l2_pressure.max(l2_pressure);
        if let Some((t_prev, err_prev)) = prev_sample {
            let half = T::from_f64(0.5).unwrap();
            err_sq_integral = err_sq_integral
                + (t - t_prev) * half * (velocity_err * velocity_err + err_prev * err_prev);
        }
        prev_sample = Some((t, velocity_err));
        record.energy_drift = (energy - energy0).abs();

        let row = DiagnosticRow {
            step: step_idx,
            t,
            tau,
            dt,
            analytic_state,
            running_sup: record.sup_analytic,
            velocity_err,
            pressure_norm,
            l2_pressure,
            l2_velocity,
            l2_reference,
            l2_projected_err,
            energy,
        };
        on_diag(&row, state, reference);
        record.rows.push(row);
        Ok(())
    };

    emit(&mut record, 0, T::zero(), &state, &reference)?;

    let t_end = cfg.t_end;
    let time_eps = t_end * T::from_f64(1e-12).unwrap() + T::from_f64(1e-300).unwrap();
    let mut step_idx = 0usize;
    while state.time < t_end - time_eps {
        let mut dt = compute_dt(&state, law, cfg)?;
        if state.time + dt > t_end {
            dt = t_end - state.time;
        }
        state = step_with_dt(&state, law, cfg, dt)?;
        reference = step_incompressible(&reference, law, cfg, dt)?;
        step_idx += 1;
        if step_idx > cfg.max_steps {
            return Err(SolverError::StepLimit(cfg.max_steps));
        }
        let done = state.time >= t_end - time_eps;
        if step_idx.is_multiple_of(cfg.diag_every.max(1)) || done {
            emit(&mut record, step_idx, dt, &state, &reference)?;
        }
    }
    record.steps = step_idx;
    record.velocity_err_l2_time = err_sq_integral.sqrt();
    Ok(record)
}
