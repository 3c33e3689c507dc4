//! Desk-scale laboratory for the low-Mach-number limit of isentropic
//! compressible Euler flow on the periodic torus.
//!
//! The crate has two arithmetic lanes:
//!
//! * exact-rational combinatorics ([`multiindex`], [`faadibruno`]) for the
//!   multivariate higher-order chain rule and power-series composition, and
//! * floating-point spectral machinery ([`spectral`], [`norms`], [`euler`])
//!   for the pseudo-spectral solver pair and the analytic/Gevrey norms.
//!
//! Field code is generic over the scalar type through [`Real`]; concrete
//! aliases for the common instantiations live at the crate root.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, ToPrimitive};
use rustfft::FftNum;

pub use num;
pub use num_complex;

pub mod euler;
pub mod faadibruno;
pub mod multiindex;
pub mod norms;
pub mod snapshot;
pub mod spectral;

/// Scalar type of the floating-point lane: `f32` or `f64`. Floats also act
/// as series coefficients, so [`faadibruno::Coeff`] is part of the bound.
pub trait Real:
    Float
    + FloatConst
    + FftNum
    + ToPrimitive
    + Sum<Self>
    + fmt::Display
    + fmt::LowerExp
    + faadibruno::Coeff
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FftNum
        + ToPrimitive
        + Sum<T>
        + fmt::Display
        + fmt::LowerExp
        + faadibruno::Coeff
{
}

/// Exact rational scalar of the combinatorics lane.
pub type Rational = num::BigRational;

/// Multivariate polynomial with exact rational coefficients.
pub type RatPoly = faadibruno::Poly<Rational>;
/// Univariate polynomial with exact rational coefficients.
pub type RatUniPoly = faadibruno::UniPoly<Rational>;
/// Truncated univariate power series with exact rational coefficients.
pub type RatSeries1 = faadibruno::PowerSeries1<Rational>;
/// Truncated multivariate power series with exact rational coefficients.
pub type RatSeries3 = faadibruno::PowerSeries3<Rational>;

/// Double-precision spectral field on the torus.
pub type Field64 = spectral::SpectralField<f64>;
/// Double-precision solver state (pressure variation + velocity).
pub type State64 = euler::State<f64>;
/// Double-precision pressure law.
pub type PressureLaw64 = euler::PressureLaw<f64>;
