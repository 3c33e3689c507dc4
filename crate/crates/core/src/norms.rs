//! Analytic and Gevrey norms of spectral states, the dissipative companion
//! norm, and the shrinking analyticity-radius schedule.
//!
//! The analytic norm of a state is
//! `sum_m tau^m / ((m-3)!)^sigma * sum_{|alpha|=m} ||d^alpha u||_L2`,
//! with the convention that the factorial of a negative integer is one, and
//! all state components stacked into a single `L2` norm per derivative. The
//! infinite sum is truncated at a configurable order and reported together
//! with a geometric tail estimate.


// `!(x > 0)` is used instead of `x <= 0` so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

use crate::multiindex::{indices_of_order, MultiIndex};
use crate::spectral::{SpectralError, SpectralField};
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("invalid norm parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no fields given")]
    NoFields,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Parameters of the norm family and of the radius schedule
/// `tau(t) = tau0 - decay_rate * t`.
#[derive(Debug, Clone, Copy)]
pub struct NormParams<T> {
    tau0: T,
    decay_rate: T,
    sigma: T,
    max_order: usize,
    horizon: T,
}

impl<T: Real> NormParams<T> {
    /// Validates the parameter block: positive initial radius, decay rate at
    /// least one, Gevrey exponent at least one (one is analytic), truncation
    /// order at least four, and a horizon that keeps the radius above half
    /// its initial value.
    pub fn new(
        tau0: T,
        decay_rate: T,
        sigma: T,
        max_order: usize,
        horizon: T,
    ) -> Result<Self, NormError> {
        if !(tau0 > T::zero()) {
            return Err(NormError::InvalidParams("initial radius must be positive"));
        }
        if !(decay_rate >= T::one()) {
            return Err(NormError::InvalidParams("decay rate must be at least 1"));
        }
        if !(sigma >= T::one()) {
            return Err(NormError::InvalidParams("Gevrey exponent must be at least 1"));
        }
        if max_order < 4 {
            return Err(NormError::InvalidParams("truncation order must be at least 4"));
        }
        if !(horizon >= T::zero()) {
            return Err(NormError::InvalidParams("horizon must be non-negative"));
        }
        let two = T::from_f64(2.0).unwrap();
        if horizon > tau0 / (two * decay_rate) {
            return Err(NormError::InvalidParams(
                "horizon exceeds tau0 / (2 * decay rate)",
            ));
        }
        Ok(Self {
            tau0,
            decay_rate,
            sigma,
            max_order,
            horizon,
        })
    }

    pub fn tau0(&self) -> T {
        self.tau0
    }

    pub fn decay_rate(&self) -> T {
        self.decay_rate
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// The radius `tau0 - decay_rate * t`; by construction at least `tau0/2`
    /// on `[0, horizon]`.
    pub fn radius(&self, t: T) -> Result<T, NormError> {
        if t < T::zero() || t > self.horizon {
            return Err(NormError::TimeOutOfRange {
                t: t.to_f64().unwrap_or(f64::NAN),
                horizon: self.horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.tau0 - self.decay_rate * t)
    }
}

/// One evaluated norm: the truncated value, a tail estimate, and the
/// per-derivative-order contributions that sum to the value.
#[derive(Debug, Clone)]
pub struct NormReport<T> {
    pub value: T,
    pub tail_bound: T,
    pub per_order: Vec<T>,
}

/// `(m-3)!` with the convention that negative arguments give one.
fn shifted_factorial<T: Real>(m: usize) -> T {
    if m <= 3 {
        return T::one();
    }
    let mut acc = T::one();
    for j in 2..=(m - 3) {
        acc = acc * T::from_usize(j).unwrap();
    }
    acc
}

fn sigma_power<T: Real>(base: T, sigma: T) -> T {
    if sigma == T::one() {
        base
    } else {
        base.powf(sigma)
    }
}

/// Nonzero combined spectral weights `sum_fields |uhat(k)|^2`, with their
/// wavenumbers. One pass over the spectra serves every derivative order.
struct CombinedSpectrum<T> {
    dim: usize,
    measure: T,
    entries: Vec<([i64; 3], T)>,
}

impl<T: Real> CombinedSpectrum<T> {
    fn build(fields: &[&SpectralField<T>]) -> Result<Self, NormError> {
        let first = fields.first().ok_or(NormError::NoFields)?;
        let grid = first.grid();
        for f in fields {
            if !f.grid().same_shape(grid) {
                return Err(NormError::Spectral(SpectralError::GridMismatch));
            }
        }
        let mut weights = vec![T::zero(); grid.len()];
        for f in fields {
            for (w, z) in weights.iter_mut().zip(f.coeffs()) {
                *w = *w + z.re * z.re + z.im * z.im;
            }
        }
        let entries = weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > T::zero())
            .map(|(flat, w)| (grid.wavenumbers_of(flat), w))
            .collect();
        Ok(Self {
            dim: grid.dim(),
            measure: T::TAU().powi(grid.dim() as i32),
            entries,
        })
    }

    /// `||d^alpha u||_L2^2` for every `alpha` of order `m`, in the order of
    /// `indices_of_order`. A single spectrum pass accumulates all of them.
    fn derivative_square_sums(&self, m: usize) -> Vec<(MultiIndex, T)> {
        let alphas = indices_of_order(self.dim, m as u32).expect("dim validated");
        let mut acc = vec![T::zero(); alphas.len()];
        let mut pow = [[T::zero(); 64]; 3];
        for (k, w) in &self.entries {
            for axis in 0..self.dim {
                let ksq = T::from_i64(k[axis] * k[axis]).unwrap();
                let mut p = T::one();
                for slot in pow[axis].iter_mut().take(m + 1) {
                    *slot = p;
                    p = p * ksq;
                }
            }
            for (slot, alpha) in acc.iter_mut().zip(alphas.iter()) {
                let mut factor = *w;
                for axis in 0..self.dim {
                    factor = factor * pow[axis][alpha.component(axis) as usize];
                }
                *slot = *slot + factor;
            }
        }
        alphas
            .into_iter()
            .zip(acc)
            .map(|(a, s)| (a, self.measure * s))
            .collect()
    }

    fn order_norm_sum(&self, m: usize) -> T {
        self.derivative_square_sums(m)
            .into_iter()
            .map(|(_, s)| s.sqrt())
            .sum()
    }
}

fn tail_estimate<T: Real>(per_order: &[T]) -> T {
    let n = per_order.len();
    let last = per_order[n - 1];
    if last == T::zero() {
        return T::zero();
    }
    let prev = per_order[n - 2];
    if prev <= T::zero() || last >= prev {
        return T::infinity();
    }
    let ratio = last / prev;
    last * ratio / (T::one() - ratio)
}

/// The analytic (`sigma = 1`) or Gevrey norm of the stacked fields at radius
/// `tau`, truncated at `max_order`.
pub fn analytic_norm<T: Real>(
    fields: &[&SpectralField<T>],
    tau: T,
    sigma: T,
    max_order: usize,
) -> Result<NormReport<T>, NormError> {
    if !(tau > T::zero()) {
        return Err(NormError::InvalidParams("radius must be positive"));
    }
    if max_order < 4 || max_order + 1 > 64 {
        return Err(NormError::InvalidParams("truncation order out of range"));
    }
    let spectrum = CombinedSpectrum::build(fields)?;
    let mut per_order = Vec::with_capacity(max_order + 1);
    for m in 0..=max_order {
        let weight = tau.powi(m as i32) / sigma_power(shifted_factorial::<T>(m), sigma);
        per_order.push(weight * spectrum.order_norm_sum(m));
    }
    let value = per_order.iter().copied().sum();
    let tail_bound = tail_estimate(&per_order);
    Ok(NormReport {
        value,
        tail_bound,
        per_order,
    })
}

/// The dissipative companion norm: the same sums with weight
/// `m tau^(m-1) / ((m-3)!)^sigma`, starting at order one. Term by term it is
/// the `tau`-derivative of the analytic norm.
pub fn dissipative_norm<T: Real>(
    fields: &[&SpectralField<T>],
    tau: T,
    sigma: T,
    max_order: usize,
) -> Result<NormReport<T>, NormError> {
    if !(tau > T::zero()) {
        return Err(NormError::InvalidParams("radius must be positive"));
    }
    if max_order < 4 || max_order + 1 > 64 {
        return Err(NormError::InvalidParams("truncation order out of range"));
    }
    let spectrum = CombinedSpectrum::build(fields)?;
    let mut per_order = Vec::with_capacity(max_order + 1);
    per_order.push(T::zero());
    for m in 1..=max_order {
        let weight = T::from_usize(m).unwrap() * tau.powi(m as i32 - 1)
            / sigma_power(shifted_factorial::<T>(m), sigma);
        per_order.push(weight * spectrum.order_norm_sum(m));
    }
    let value = per_order.iter().copied().sum();
    let tail_bound = tail_estimate(&per_order);
    Ok(NormReport {
        value,
        tail_bound,
        per_order,
    })
}

/// Compares the analytic norm at radius `tau0` against the data-class bound.
pub fn initial_data_check<T: Real>(
    fields: &[&SpectralField<T>],
    tau0: T,
    bound: T,
    max_order: usize,
) -> Result<(bool, NormReport<T>), NormError> {
    let report = analytic_norm(fields, tau0, T::one(), max_order)?;
    Ok((report.value <= bound, report))
}

/// Plain `H^3` diagnostic: the square root of the derivative-square sums up
/// to order three (one fixed finite sum, no radius weights).
pub fn sobolev_h3<T: Real>(fields: &[&SpectralField<T>]) -> Result<T, NormError> {
    let spectrum = CombinedSpectrum::build(fields)?;
    let mut total = T::zero();
    for m in 0..=3 {
        for (_, s) in spectrum.derivative_square_sums(m) {
            total = total + s;
        }
    }
    Ok(total.sqrt())
}

/// Per-derivative `L2` squares for one order, exposed for cross-checks.
pub fn derivative_square_sums<T: Real>(
    fields: &[&SpectralField<T>],
    m: usize,
) -> Result<Vec<(MultiIndex, T)>, NormError> {
    if m + 1 > 64 {
        return Err(NormError::InvalidParams("derivative order out of range"));
    }
    Ok(CombinedSpectrum::build(fields)?.derivative_square_sums(m))
}
