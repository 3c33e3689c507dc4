//! Real scalar and vector fields on the periodic torus `[0, 2pi)^d`,
//! represented by their complex Fourier coefficients. Derivatives are exact
//! on the resolved band; nonlinear products go through physical space with
//! two-thirds-rule dealiasing.
//!
//! Conventions: `u(x) = sum_k uhat(k) e^(i k.x)` with wavenumbers
//! `k in {-N/2+1, .., N/2}` per axis, and Parseval in the form
//! `||u||_L2^2 = (2pi)^d sum_k |uhat(k)|^2`.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::multiindex::{IndexError, MultiIndex};
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("unsupported dimension {0}: must be 2 or 3")]
    UnsupportedDimension(usize),
    #[error("grid size {0} not supported: need an even number of points, at least 8")]
    BadGridSize(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient count {got} does not match grid ({expected})")]
    WrongCoefficientCount { expected: usize, got: usize },
    #[error("vector field has {got} components, expected {expected}")]
    WrongComponentCount { expected: usize, got: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Uniform periodic grid with cached transform plans for its size.
pub struct TorusGrid<T: Real> {
    dim: usize,
    points: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for TorusGrid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .finish()
    }
}

impl<T: Real> TorusGrid<T> {
    pub fn new(dim: usize, points: usize) -> Result<Arc<Self>, SpectralError> {
        if !(2..=3).contains(&dim) {
            return Err(SpectralError::UnsupportedDimension(dim));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(SpectralError::BadGridSize(points));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            dim,
            points,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per dimension.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Total number of grid points / retained modes.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `2pi / N`.
    pub fn spacing(&self) -> T {
        T::TAU() / T::from_usize(self.points).unwrap()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }

    /// Signed wavenumber of a storage index along one axis.
    pub fn wavenumber(&self, index: usize) -> i64 {
        let n = self.points as i64;
        let i = index as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber vector of a flat storage index (row-major).
    pub fn wavenumbers_of(&self, mut flat: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        for axis in (0..self.dim).rev() {
            k[axis] = self.wavenumber(flat % self.points);
            flat /= self.points;
        }
        k
    }

    /// Flat storage index of a wavenumber vector (wrapped mod `N`).
    pub fn index_of(&self, k: &[i64]) -> usize {
        let n = self.points as i64;
        let mut flat = 0usize;
        for &kj in k.iter().take(self.dim) {
            let idx = kj.rem_euclid(n) as usize;
            flat = flat * self.points + idx;
        }
        flat
    }

    /// Largest wavenumber kept by the two-thirds dealiasing rule.
    pub fn dealias_limit(&self) -> i64 {
        (self.points / 3) as i64
    }

    fn transform(&self, data: &mut [Complex<T>], forward: bool) {
        let n = self.points;
        let plan = if forward { &self.forward } else { &self.inverse };
        let mut scratch = vec![Complex::zero(); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex::zero(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
            } else {
                let block = stride * n;
                for base in (0..data.len()).step_by(block) {
                    for offset in 0..stride {
                        for (t, slot) in line.iter_mut().enumerate() {
                            *slot = data[base + offset + t * stride];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (t, slot) in line.iter().enumerate() {
                            data[base + offset + t * stride] = *slot;
                        }
                    }
                }
            }
        }
        if forward {
            let scale = T::one() / T::from_usize(data.len()).unwrap();
            for z in data.iter_mut() {
                *z = z.scale(scale);
            }
        }
    }
}

/// A real field stored as Fourier coefficients with Hermitian symmetry.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Arc<TorusGrid<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zero(grid: &Arc<TorusGrid<T>>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![Complex::zero(); grid.len()],
        }
    }

    pub fn from_coeffs(
        grid: &Arc<TorusGrid<T>>,
        coeffs: Vec<Complex<T>>,
    ) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::WrongCoefficientCount {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Samples a function of the physical coordinates and transforms.
    pub fn from_physical_fn(grid: &Arc<TorusGrid<T>>, f: impl Fn(&[T]) -> T) -> Self {
        let n = grid.points();
        let dx = grid.spacing();
        let mut data = vec![Complex::zero(); grid.len()];
        let mut coords = vec![T::zero(); grid.dim()];
        for (flat, slot) in data.iter_mut().enumerate() {
            let mut rest = flat;
            for axis in (0..grid.dim()).rev() {
                coords[axis] = T::from_usize(rest % n).unwrap() * dx;
                rest /= n;
            }
            *slot = Complex::new(f(&coords), T::zero());
        }
        grid.transform(&mut data, true);
        Self {
            grid: Arc::clone(grid),
            coeffs: data,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn mode(&self, k: &[i64]) -> Complex<T> {
        self.coeffs[self.grid.index_of(k)]
    }

    pub fn set_mode(&mut self, k: &[i64], value: Complex<T>) {
        let idx = self.grid.index_of(k);
        self.coeffs[idx] = value;
    }

    /// Physical-space samples (complex; imaginary parts are round-off for
    /// Hermitian coefficients).
    pub fn physical(&self) -> Vec<Complex<T>> {
        let mut data = self.coeffs.clone();
        self.grid.transform(&mut data, false);
        data
    }

    /// Builds a field from physical samples.
    pub fn from_physical(
        grid: &Arc<TorusGrid<T>>,
        mut data: Vec<Complex<T>>,
    ) -> Result<Self, SpectralError> {
        if data.len() != grid.len() {
            return Err(SpectralError::WrongCoefficientCount {
                expected: grid.len(),
                got: data.len(),
            });
        }
        grid.transform(&mut data, true);
        Ok(Self {
            grid: Arc::clone(grid),
            coeffs: data,
        })
    }

    /// `L2` norm via Parseval.
    pub fn l2_norm(&self) -> T {
        let sum: T = self
            .coeffs
            .iter()
            .map(|z| z.re * z.re + z.im * z.im)
            .sum();
        (measure(&self.grid) * sum).sqrt()
    }

    /// `L2` inner product of two real fields.
    pub fn l2_inner(&self, other: &Self) -> Result<T, SpectralError> {
        self.check_grid(other)?;
        let sum: T = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(measure(&self.grid) * sum)
    }

    /// Max modulus over the physical grid.
    pub fn sup_norm(&self) -> T {
        self.physical()
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }

    /// Mean value (the zero mode).
    pub fn mean(&self) -> Complex<T> {
        self.coeffs[0]
    }

    /// Exact spectral derivative: coefficients scaled by `(ik)^alpha`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<Self, SpectralError> {
        if alpha.dim() != self.grid.dim() {
            return Err(SpectralError::DimensionMismatch {
                expected: self.grid.dim(),
                got: alpha.dim(),
            });
        }
        let order = alpha.order();
        let mut out = self.clone();
        for (flat, z) in out.coeffs.iter_mut().enumerate() {
            let k = self.grid.wavenumbers_of(flat);
            let mut magnitude = T::one();
            for (axis, kj) in k[..self.grid.dim()].iter().enumerate() {
                magnitude =
                    magnitude * T::from_i64(*kj).unwrap().powi(alpha.component(axis) as i32);
            }
            *z = mul_i_power(z.scale(magnitude), order);
        }
        Ok(out)
    }

    /// Derivative along a single axis (`d/dx_axis`).
    pub fn derivative_axis(&self, axis: usize) -> Self {
        let mut out = self.clone();
        for (flat, z) in out.coeffs.iter_mut().enumerate() {
            let k = T::from_i64(self.grid.wavenumbers_of(flat)[axis]).unwrap();
            // multiply by i*k
            *z = Complex::new(-z.im * k, z.re * k);
        }
        out
    }

    /// Pointwise physical product without any truncation.
    pub fn multiply(&self, other: &Self) -> Result<Self, SpectralError> {
        self.check_grid(other)?;
        let mut a = self.physical();
        let b = other.physical();
        for (x, y) in a.iter_mut().zip(b.iter()) {
            *x = *x * *y;
        }
        Self::from_physical(&self.grid, a)
    }

    /// Pointwise physical product with two-thirds-rule truncation of the
    /// result: every mode with `|k_i| > N/3` on some axis is dropped.
    pub fn multiply_dealiased(&self, other: &Self) -> Result<Self, SpectralError> {
        let mut out = self.multiply(other)?;
        out.dealias();
        Ok(out)
    }

    /// Clears the Nyquist ring (any `|k_j| = N/2`). Those bins are their own
    /// conjugate partners, so they cannot carry the odd-in-k information that
    /// derivatives and the projection produce; fields meant to evolve under
    /// the solver should not populate them.
    pub fn zero_nyquist(&mut self) {
        let half = (self.grid.points() / 2) as i64;
        for (flat, z) in self.coeffs.iter_mut().enumerate() {
            let k = self.grid.wavenumbers_of(flat);
            if k[..self.grid.dim()].iter().any(|kj| kj.abs() == half) {
                *z = Complex::zero();
            }
        }
    }

    /// Applies the two-thirds mask in place.
    pub fn dealias(&mut self) {
        let limit = self.grid.dealias_limit();
        for (flat, z) in self.coeffs.iter_mut().enumerate() {
            let k = self.grid.wavenumbers_of(flat);
            if k[..self.grid.dim()].iter().any(|kj| kj.abs() > limit) {
                *z = Complex::zero();
            }
        }
    }

    /// Restores the real-field symmetry `uhat(-k) = conj(uhat(k))` by
    /// averaging conjugate pairs.
    pub fn enforce_hermitian(&mut self) {
        for flat in 0..self.coeffs.len() {
            let k = self.grid.wavenumbers_of(flat);
            let neg: Vec<i64> = k[..self.grid.dim()].iter().map(|kj| -kj).collect();
            let partner = self.grid.index_of(&neg);
            if partner == flat {
                self.coeffs[flat].im = T::zero();
            } else if partner > flat {
                let avg = (self.coeffs[flat] + self.coeffs[partner].conj()).scale(
                    T::from_f64(0.5).unwrap(),
                );
                self.coeffs[flat] = avg;
                self.coeffs[partner] = avg.conj();
            }
        }
    }

    /// Largest violation of the Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for flat in 0..self.coeffs.len() {
            let k = self.grid.wavenumbers_of(flat);
            let neg: Vec<i64> = k[..self.grid.dim()].iter().map(|kj| -kj).collect();
            let partner = self.grid.index_of(&neg);
            let defect = (self.coeffs[flat] - self.coeffs[partner].conj()).norm();
            worst = worst.max(defect);
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|z| z.scale(s)).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Self, s: T) -> Result<(), SpectralError> {
        self.check_grid(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a = *a + b.scale(s);
        }
        Ok(())
    }

    pub fn plus(&self, other: &Self) -> Result<Self, SpectralError> {
        let mut out = self.clone();
        out.add_scaled(other, T::one())?;
        Ok(out)
    }

    pub fn minus(&self, other: &Self) -> Result<Self, SpectralError> {
        let mut out = self.clone();
        out.add_scaled(other, -T::one())?;
        Ok(out)
    }

    fn check_grid(&self, other: &Self) -> Result<(), SpectralError> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch)
        }
    }
}

/// `(2pi)^d / N^d`-free spectral measure: `(2pi)^d`, the factor in Parseval.
fn measure<T: Real>(grid: &TorusGrid<T>) -> T {
    T::TAU().powi(grid.dim() as i32)
}

fn mul_i_power<T: Real>(z: Complex<T>, order: u32) -> Complex<T> {
    match order % 4 {
        0 => z,
        1 => Complex::new(-z.im, z.re),
        2 => Complex::new(-z.re, -z.im),
        _ => Complex::new(z.im, -z.re),
    }
}

fn check_vector<T: Real>(v: &[SpectralField<T>]) -> Result<&Arc<TorusGrid<T>>, SpectralError> {
    let first = v.first().ok_or(SpectralError::WrongComponentCount {
        expected: 2,
        got: 0,
    })?;
    let grid = first.grid();
    if v.len() != grid.dim() {
        return Err(SpectralError::WrongComponentCount {
            expected: grid.dim(),
            got: v.len(),
        });
    }
    for f in v {
        if !f.grid().same_shape(grid) {
            return Err(SpectralError::GridMismatch);
        }
    }
    Ok(grid)
}

/// Divergence of a vector field.
pub fn divergence<T: Real>(v: &[SpectralField<T>]) -> Result<SpectralField<T>, SpectralError> {
    let grid = check_vector(v)?;
    let mut out = SpectralField::zero(grid);
    for (axis, comp) in v.iter().enumerate() {
        out.add_scaled(&comp.derivative_axis(axis), T::one())?;
    }
    Ok(out)
}

/// Gradient of a scalar field.
pub fn gradient<T: Real>(p: &SpectralField<T>) -> Vec<SpectralField<T>> {
    (0..p.grid().dim()).map(|a| p.derivative_axis(a)).collect()
}

/// Curl of a vector field: one component in 2-d, three in 3-d.
pub fn curl<T: Real>(v: &[SpectralField<T>]) -> Result<Vec<SpectralField<T>>, SpectralError> {
    let grid = check_vector(v)?;
    match grid.dim() {
        2 => Ok(vec![v[1].derivative_axis(0).minus(&v[0].derivative_axis(1))?]),
        _ => Ok(vec![
            v[2].derivative_axis(1).minus(&v[1].derivative_axis(2))?,
            v[0].derivative_axis(2).minus(&v[2].derivative_axis(0))?,
            v[1].derivative_axis(0).minus(&v[0].derivative_axis(1))?,
        ]),
    }
}

/// The first-order acoustic operator: `(div v, grad p)`.
pub fn acoustic_operator<T: Real>(
    p: &SpectralField<T>,
    v: &[SpectralField<T>],
) -> Result<(SpectralField<T>, Vec<SpectralField<T>>), SpectralError> {
    let grid = check_vector(v)?;
    if !p.grid().same_shape(grid) {
        return Err(SpectralError::GridMismatch);
    }
    Ok((divergence(v)?, gradient(p)))
}

/// Projection onto divergence-free fields: `vhat - k (k.vhat) / |k|^2` for
/// `k != 0`; the mean mode passes through unchanged.
pub fn leray_project<T: Real>(
    v: &[SpectralField<T>],
) -> Result<Vec<SpectralField<T>>, SpectralError> {
    let grid = Arc::clone(check_vector(v)?);
    let dim = grid.dim();
    let mut out: Vec<SpectralField<T>> = v.to_vec();
    for flat in 0..grid.len() {
        let k = grid.wavenumbers_of(flat);
        let k2: i64 = k[..dim].iter().map(|kj| kj * kj).sum();
        if k2 == 0 {
            continue;
        }
        let mut dot = Complex::<T>::zero();
        for (axis, comp) in out.iter().enumerate() {
            dot = dot + comp.coeffs()[flat].scale(T::from_i64(k[axis]).unwrap());
        }
        let inv_k2 = T::one() / T::from_i64(k2).unwrap();
        for (axis, comp) in out.iter_mut().enumerate() {
            let proj = dot.scale(T::from_i64(k[axis]).unwrap() * inv_k2);
            comp.coeffs_mut()[flat] = comp.coeffs()[flat] - proj;
        }
    }
    Ok(out)
}

/// Stacked `L2` norm of several components treated as one vector quantity.
pub fn l2_norm_stacked<T: Real>(fields: &[&SpectralField<T>]) -> T {
    fields
        .iter()
        .map(|f| {
            let n = f.l2_norm();
            n * n
        })
        .sum::<T>()
        .sqrt()
}
