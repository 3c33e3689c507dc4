//! Higher-order chain rule for compositions `h(g(x))` of a univariate outer
//! function with a multivariate inner one, plus the matching composition rule
//! for truncated power series. All arithmetic is carried out in the
//! coefficient type; the intended instantiation is exact rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Div, Neg, Sub};

use num::{BigInt, BigUint, ToPrimitive};
use num_traits::{One, Zero};
use thiserror::Error;

use crate::multiindex::{
    self, enumerate_partitions, factorial, indices_below, scalar_multinomial, IndexError,
    MultiIndex,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FdbError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("series truncated at order {available}, need order {needed}")]
    TruncatedBelow { needed: u32, available: u32 },
    #[error("inner series must have zero constant term")]
    ConstantTermNotZero,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("derivative index must have order >= 1")]
    OrderZeroDerivative,
    #[error("coefficient list must not be empty")]
    EmptyCoefficients,
}

/// Coefficient ring of the composition kernels. Implemented for exact
/// rationals and for floats (used by truncated pressure-law series).
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
{
    fn from_big_uint(n: &BigUint) -> Self;

    fn from_big_int(n: &BigInt) -> Self;
}

impl Coeff for num::BigRational {
    fn from_big_uint(n: &BigUint) -> Self {
        num::BigRational::from_integer(BigInt::from(n.clone()))
    }

    fn from_big_int(n: &BigInt) -> Self {
        num::BigRational::from_integer(n.clone())
    }
}

impl Coeff for f64 {
    fn from_big_uint(n: &BigUint) -> Self {
        n.to_f64().unwrap_or(f64::INFINITY)
    }

    fn from_big_int(n: &BigInt) -> Self {
        n.to_f64().unwrap_or(f64::NAN)
    }
}

impl Coeff for f32 {
    fn from_big_uint(n: &BigUint) -> Self {
        n.to_f32().unwrap_or(f32::INFINITY)
    }

    fn from_big_int(n: &BigInt) -> Self {
        n.to_f32().unwrap_or(f32::NAN)
    }
}

fn falling_factorial(n: u32, i: u32) -> BigUint {
    debug_assert!(i <= n);
    factorial(n) / factorial(n - i)
}

fn pow_by_mul<T: Coeff>(base: &T, exp: u32) -> T {
    let mut acc = T::one();
    for _ in 0..exp {
        acc = acc * base.clone();
    }
    acc
}

/// A univariate function whose derivatives at a point are computable from
/// stored data. Polynomials always answer; truncated series refuse orders
/// beyond their truncation.
pub trait Univariate<T: Coeff> {
    fn derivative_at(&self, order: u32, point: &T) -> Result<T, FdbError>;

    fn value_at(&self, point: &T) -> Result<T, FdbError> {
        self.derivative_at(0, point)
    }
}

fn poly_derivative_at<T: Coeff>(coeffs: &[T], order: u32, point: &T) -> T {
    // sum_{n >= order} a_n * n!/(n-order)! * point^(n-order), by Horner.
    let mut acc = T::zero();
    let top = coeffs.len() as u32;
    if top <= order {
        return acc;
    }
    for n in (order..top).rev() {
        let scale = T::from_big_uint(&falling_factorial(n, order));
        acc = acc * point.clone() + coeffs[n as usize].clone() * scale;
    }
    acc
}

/// Univariate polynomial, dense coefficients `a_0..a_deg`; exact at every
/// derivative order (all orders beyond the degree vanish).
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> UniPoly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn constant(value: T) -> Self {
        Self {
            coeffs: vec![value],
        }
    }

    /// The identity map `y -> y`.
    pub fn identity() -> Self {
        Self {
            coeffs: vec![T::zero(), T::one()],
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

impl<T: Coeff> Univariate<T> for UniPoly<T> {
    fn derivative_at(&self, order: u32, point: &T) -> Result<T, FdbError> {
        Ok(poly_derivative_at(&self.coeffs, order, point))
    }
}

/// Truncated univariate power series `sum_{n<=N} a_n x^n`.
///
/// The truncation order is data, not just storage: derivative orders beyond
/// `N` are refused rather than silently treated as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries1<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> PowerSeries1<T> {
    /// Builds a series from `a_0..a_N`; the vector length fixes `N + 1`.
    pub fn new(coeffs: Vec<T>) -> Result<Self, FdbError> {
        if coeffs.is_empty() {
            return Err(FdbError::EmptyCoefficients);
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn coeff(&self, n: u32) -> Result<T, FdbError> {
        if n > self.order() {
            return Err(FdbError::TruncatedBelow {
                needed: n,
                available: self.order(),
            });
        }
        Ok(self.coeffs[n as usize].clone())
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Horner evaluation of the truncation.
    pub fn eval(&self, point: &T) -> T {
        poly_derivative_at(&self.coeffs, 0, point)
    }
}

impl<T: Coeff> Univariate<T> for PowerSeries1<T> {
    fn derivative_at(&self, order: u32, point: &T) -> Result<T, FdbError> {
        if order > self.order() {
            return Err(FdbError::TruncatedBelow {
                needed: order,
                available: self.order(),
            });
        }
        Ok(poly_derivative_at(&self.coeffs, order, point))
    }
}

/// Sparse multivariate polynomial; no explicit zero coefficients are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    dim: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Coeff> Poly<T> {
    pub fn new(dim: usize) -> Result<Self, FdbError> {
        // Reuse the multi-index dimension rules.
        MultiIndex::zero(dim)?;
        Ok(Self {
            dim,
            terms: BTreeMap::new(),
        })
    }

    pub fn with_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (MultiIndex, T)>,
    ) -> Result<Self, FdbError> {
        let mut poly = Self::new(dim)?;
        for (idx, c) in terms {
            poly.add_term(&idx, c)?;
        }
        Ok(poly)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> T {
        self.terms.get(idx).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, idx: &MultiIndex, c: T) -> Result<(), FdbError> {
        if idx.dim() != self.dim {
            return Err(FdbError::DimensionMismatch {
                expected: self.dim,
                got: idx.dim(),
            });
        }
        let entry = self.terms.entry(*idx).or_insert_with(T::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(idx);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FdbError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (idx, c) in other.terms() {
            out.add_term(idx, c.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self {
                dim: self.dim,
                terms: BTreeMap::new(),
            };
        }
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(idx, v)| (*idx, v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FdbError> {
        self.check_dim(other)?;
        let mut out = Self::new(self.dim)?;
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.add_term(&a.add(b)?, ca.clone() * cb.clone())?;
            }
        }
        Ok(out)
    }

    /// Drops every term of total degree above `max_order`.
    pub fn truncated(&self, max_order: u32) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(idx, _)| idx.order() <= max_order)
                .map(|(idx, c)| (*idx, c.clone()))
                .collect(),
        }
    }

    /// Exact partial derivative of the given multi-index order.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<Self, FdbError> {
        if alpha.dim() != self.dim {
            return Err(FdbError::DimensionMismatch {
                expected: self.dim,
                got: alpha.dim(),
            });
        }
        let mut out = Self::new(self.dim)?;
        for (gamma, c) in self.terms() {
            let Some(rest) = gamma.checked_sub(alpha) else {
                continue;
            };
            let mut factor = BigUint::one();
            for axis in 0..self.dim {
                factor *= falling_factorial(gamma.component(axis), alpha.component(axis));
            }
            out.add_term(&rest, c.clone() * T::from_big_uint(&factor))?;
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[T]) -> Result<T, FdbError> {
        if point.len() != self.dim {
            return Err(FdbError::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        let mut acc = T::zero();
        for (gamma, c) in self.terms() {
            let mut term = c.clone();
            for (axis, x) in point.iter().enumerate() {
                term = term * pow_by_mul(x, gamma.component(axis));
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    fn check_dim(&self, other: &Self) -> Result<(), FdbError> {
        if self.dim != other.dim {
            return Err(FdbError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }
}

/// Truncated multivariate power series `sum_{|beta| <= N} b_beta x^beta`.
///
/// With the zero-constant flag set, the series plays the inner role of a
/// composition and may not carry a `|beta| = 0` coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries3<T> {
    dim: usize,
    order: u32,
    zero_constant: bool,
    coeffs: BTreeMap<MultiIndex, T>,
}

impl<T: Coeff> PowerSeries3<T> {
    /// Series with zero constant term (the inner-function role).
    pub fn zero_constant(dim: usize, order: u32) -> Result<Self, FdbError> {
        MultiIndex::zero(dim)?;
        Ok(Self {
            dim,
            order,
            zero_constant: true,
            coeffs: BTreeMap::new(),
        })
    }

    /// Series allowed to carry a constant term (the composed result role).
    pub fn with_constant(dim: usize, order: u32) -> Result<Self, FdbError> {
        MultiIndex::zero(dim)?;
        Ok(Self {
            dim,
            order,
            zero_constant: false,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn has_zero_constant_term(&self) -> bool {
        self.zero_constant
    }

    pub fn set(&mut self, idx: &MultiIndex, c: T) -> Result<(), FdbError> {
        if idx.dim() != self.dim {
            return Err(FdbError::DimensionMismatch {
                expected: self.dim,
                got: idx.dim(),
            });
        }
        if idx.order() > self.order {
            return Err(FdbError::TruncatedBelow {
                needed: idx.order(),
                available: self.order,
            });
        }
        if self.zero_constant && idx.order() == 0 {
            return Err(FdbError::ConstantTermNotZero);
        }
        if c.is_zero() {
            self.coeffs.remove(idx);
        } else {
            self.coeffs.insert(*idx, c);
        }
        Ok(())
    }

    /// Coefficient lookup; refuses indices beyond the truncation order.
    pub fn coeff(&self, idx: &MultiIndex) -> Result<T, FdbError> {
        if idx.order() > self.order {
            return Err(FdbError::TruncatedBelow {
                needed: idx.order(),
                available: self.order,
            });
        }
        Ok(self.coeffs.get(idx).cloned().unwrap_or_else(T::zero))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.coeffs.iter()
    }

    /// The truncation viewed as a polynomial.
    pub fn as_poly(&self) -> Poly<T> {
        Poly {
            dim: self.dim,
            terms: self.coeffs.clone(),
        }
    }
}

/// Exact derivative `d^beta (h o g)(x0)` through the partition-sum form of
/// the multivariate chain rule:
///
/// `sum_i h^(i)(g(x0)) sum_s sum_tuples beta! prod_l (d^lambda_l g)^k_l / (k_l! lambda_l!^k_l)`.
pub fn fdb_derivative<T, H>(
    h: &H,
    g: &Poly<T>,
    point: &[T],
    beta: &MultiIndex,
) -> Result<T, FdbError>
where
    T: Coeff,
    H: Univariate<T> + ?Sized,
{
    if beta.order() == 0 {
        return Err(FdbError::OrderZeroDerivative);
    }
    if beta.dim() != g.dim() {
        return Err(FdbError::DimensionMismatch {
            expected: g.dim(),
            got: beta.dim(),
        });
    }
    let inner_value = g.eval(point)?;
    let top = beta.order();

    // Outer derivatives up to |beta|; a series truncated below |beta| refuses.
    let mut outer = Vec::with_capacity(top as usize);
    for i in 1..=top {
        outer.push(h.derivative_at(i, &inner_value)?);
    }

    // Partition tuples reuse inner derivative values heavily; compute each
    // d^lambda g(x0) once.
    let mut inner_derivs: BTreeMap<MultiIndex, T> = BTreeMap::new();
    for lambda in indices_below(beta) {
        if lambda.order() == 0 {
            continue;
        }
        inner_derivs.insert(lambda, g.derivative(&lambda)?.eval(point)?);
    }

    let beta_factorial = beta.factorial();
    let mut total = T::zero();
    for i in 1..=top {
        let sets = enumerate_partitions(i, beta)?;
        let mut inner_sum = T::zero();
        for tuple in sets.iter() {
            let mut denom = BigUint::one();
            let mut product = T::one();
            for (k, lambda) in tuple.pairs() {
                denom *= factorial(*k) * lambda.factorial().pow(*k);
                product = product * pow_by_mul(&inner_derivs[lambda], *k);
            }
            let weight =
                T::from_big_uint(&beta_factorial) / T::from_big_uint(&denom);
            inner_sum = inner_sum + weight * product;
        }
        total = total + outer[(i - 1) as usize].clone() * inner_sum;
    }
    Ok(total)
}

/// Independent verifier: forms the composed polynomial `h o g` explicitly and
/// differentiates it term by term. Never touches the partition sets.
pub fn oracle_derivative<T: Coeff>(
    h: &UniPoly<T>,
    g: &Poly<T>,
    point: &[T],
    beta: &MultiIndex,
) -> Result<T, FdbError> {
    let mut composed = Poly::new(g.dim())?;
    for a_n in h.coeffs().iter().rev() {
        composed = composed.mul(g)?;
        let zero = MultiIndex::zero(g.dim())?;
        composed.add_term(&zero, a_n.clone())?;
    }
    composed.derivative(beta)?.eval(point)
}

/// Coefficients of the composition `phi(psi(x))` up to total order `order`:
/// `c_0 = a_0` and, for `|beta| >= 1`,
/// `c_beta = sum_i sum_s sum_tuples multinomial(i; k) a_i prod_l b_lambda_l^k_l`.
pub fn series_compose<T: Coeff>(
    phi: &PowerSeries1<T>,
    psi: &PowerSeries3<T>,
    order: u32,
) -> Result<PowerSeries3<T>, FdbError> {
    if !psi.has_zero_constant_term() {
        return Err(FdbError::ConstantTermNotZero);
    }
    if phi.order() < order {
        return Err(FdbError::TruncatedBelow {
            needed: order,
            available: phi.order(),
        });
    }
    if psi.order() < order {
        return Err(FdbError::TruncatedBelow {
            needed: order,
            available: psi.order(),
        });
    }
    let dim = psi.dim();
    let mut out = PowerSeries3::with_constant(dim, order)?;
    out.set(&MultiIndex::zero(dim)?, phi.coeff(0)?)?;

    for beta in multiindex::indices_up_to_order(dim, order)? {
        if beta.order() == 0 {
            continue;
        }
        let mut c = T::zero();
        for i in 1..=beta.order() {
            let a_i = phi.coeff(i)?;
            if a_i.is_zero() {
                continue;
            }
            let sets = enumerate_partitions(i, &beta)?;
            let mut inner = T::zero();
            for tuple in sets.iter() {
                let ks: Vec<u32> = tuple.multiplicities().collect();
                let weight = T::from_big_uint(&scalar_multinomial(i, &ks)?);
                let mut product = T::one();
                for (k, lambda) in tuple.pairs() {
                    product = product * pow_by_mul(&psi.coeff(lambda)?, *k);
                }
                inner = inner + weight * product;
            }
            c = c + a_i * inner;
        }
        out.set(&beta, c)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    type Rat = BigRational;

    fn rat(n: i64) -> Rat {
        Rat::from_integer(BigInt::from(n))
    }

    fn ratq(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn mi(c: &[u32]) -> MultiIndex {
        MultiIndex::new(c).unwrap()
    }

    #[test]
    fn second_derivative_matches_classical_chain_rule() {
        // Univariate case embedded along the first axis: the classical
        // h''*(g')^2 + h'*g'' formula.
        let g = Poly::with_terms(
            3,
            [
                (mi(&[1, 0, 0]), rat(3)),
                (mi(&[2, 0, 0]), rat(5)),
                (mi(&[0, 0, 0]), rat(2)),
            ],
        )
        .unwrap();
        let h = UniPoly::new(vec![rat(1), rat(-2), rat(4), rat(7)]);
        let x0 = [ratq(1, 2), rat(0), rat(0)];
        let beta = mi(&[2, 0, 0]);

        let y0 = g.eval(&x0).unwrap();
        let g1 = g.derivative(&mi(&[1, 0, 0])).unwrap().eval(&x0).unwrap();
        let g2 = g.derivative(&beta).unwrap().eval(&x0).unwrap();
        let h1 = h.derivative_at(1, &y0).unwrap();
        let h2 = h.derivative_at(2, &y0).unwrap();
        let expected = h2 * g1.clone() * g1 + h1 * g2;

        assert_eq!(fdb_derivative(&h, &g, &x0, &beta).unwrap(), expected);
    }

    #[test]
    fn mixed_derivative_of_square() {
        // h(y) = y^2, g = x1 + x2^2: d1 d2^2 (g^2) at 0 is 4.
        let g = Poly::with_terms(
            3,
            [(mi(&[1, 0, 0]), rat(1)), (mi(&[0, 2, 0]), rat(1))],
        )
        .unwrap();
        let h = UniPoly::new(vec![rat(0), rat(0), rat(1)]);
        let x0 = [rat(0), rat(0), rat(0)];
        let v = fdb_derivative(&h, &g, &x0, &mi(&[1, 2, 0])).unwrap();
        assert_eq!(v, rat(4));
    }

    #[test]
    fn first_order_is_plain_chain_rule() {
        let g = Poly::with_terms(
            2,
            [
                (mi(&[1, 1]), rat(2)),
                (mi(&[0, 1]), rat(-3)),
                (mi(&[2, 0]), rat(1)),
            ],
        )
        .unwrap();
        let h = UniPoly::new(vec![rat(5), rat(1), ratq(1, 3)]);
        let x0 = [ratq(1, 3), rat(2)];
        let beta = mi(&[1, 0]);
        let y0 = g.eval(&x0).unwrap();
        let expected = h.derivative_at(1, &y0).unwrap()
            * g.derivative(&beta).unwrap().eval(&x0).unwrap();
        assert_eq!(fdb_derivative(&h, &g, &x0, &beta).unwrap(), expected);
    }

    #[test]
    fn oracle_on_identity_and_constant() {
        let g = Poly::with_terms(
            2,
            [(mi(&[2, 1]), ratq(3, 7)), (mi(&[0, 1]), rat(2))],
        )
        .unwrap();
        let x0 = [rat(1), ratq(-1, 2)];
        let beta = mi(&[1, 1]);
        // h = id reproduces the plain derivative of g.
        let id = UniPoly::identity();
        assert_eq!(
            oracle_derivative(&id, &g, &x0, &beta).unwrap(),
            g.derivative(&beta).unwrap().eval(&x0).unwrap()
        );
        // Constant h kills every derivative of order >= 1.
        let c = UniPoly::constant(rat(9));
        assert_eq!(oracle_derivative(&c, &g, &x0, &beta).unwrap(), rat(0));
    }

    #[test]
    fn series_gate_refuses_truncation_below_requested_order() {
        let g = Poly::with_terms(3, [(mi(&[1, 0, 0]), rat(1))]).unwrap();
        let h = PowerSeries1::new(vec![rat(1), rat(1)]).unwrap();
        let x0 = [rat(0), rat(0), rat(0)];
        let err = fdb_derivative(&h, &g, &x0, &mi(&[0, 2, 0])).unwrap_err();
        assert_eq!(
            err,
            FdbError::TruncatedBelow {
                needed: 2,
                available: 1
            }
        );
    }

    #[test]
    fn linearity_in_outer_function() {
        let g = Poly::with_terms(
            2,
            [
                (mi(&[1, 0]), rat(2)),
                (mi(&[1, 1]), rat(-1)),
                (mi(&[0, 2]), ratq(1, 2)),
            ],
        )
        .unwrap();
        let h1 = UniPoly::new(vec![rat(1), rat(2), rat(0), rat(1)]);
        let h2 = UniPoly::new(vec![rat(0), ratq(-1, 4), rat(3)]);
        let sum = UniPoly::new(vec![rat(1), ratq(7, 4), rat(3), rat(1)]);
        let x0 = [ratq(1, 5), rat(1)];
        for beta in [mi(&[2, 1]), mi(&[0, 3]), mi(&[1, 0])] {
            let a = fdb_derivative(&h1, &g, &x0, &beta).unwrap();
            let b = fdb_derivative(&h2, &g, &x0, &beta).unwrap();
            let s = fdb_derivative(&sum, &g, &x0, &beta).unwrap();
            assert_eq!(s, a + b);
        }
    }

    #[test]
    fn geometric_series_of_first_coordinate() {
        // phi = 1/(1-x), psi = x1: composition is the geometric series in x1.
        let order = 5;
        let phi = PowerSeries1::new(vec![rat(1); (order + 1) as usize]).unwrap();
        let mut psi = PowerSeries3::zero_constant(3, order).unwrap();
        psi.set(&mi(&[1, 0, 0]), rat(1)).unwrap();
        let c = series_compose(&phi, &psi, order).unwrap();
        for beta in multiindex::indices_up_to_order(3, order).unwrap() {
            let expected = if beta.components()[1] == 0 && beta.components()[2] == 0 {
                rat(1)
            } else {
                rat(0)
            };
            assert_eq!(c.coeff(&beta).unwrap(), expected, "at {beta}");
        }
    }

    #[test]
    fn constant_coefficient_is_outer_constant() {
        let phi = PowerSeries1::new(vec![ratq(3, 4), rat(2), rat(1)]).unwrap();
        let mut psi = PowerSeries3::zero_constant(3, 2).unwrap();
        psi.set(&mi(&[0, 1, 0]), rat(5)).unwrap();
        let c = series_compose(&phi, &psi, 2).unwrap();
        assert_eq!(c.coeff(&mi(&[0, 0, 0])).unwrap(), ratq(3, 4));
    }

    #[test]
    fn exponential_like_cross_term() {
        // phi with a_n = 1/n!, psi = x1 + x2: the x1*x2 coefficient of
        // (x1+x2) + (x1+x2)^2/2 is 1.
        let phi = PowerSeries1::new(vec![
            rat(1),
            rat(1),
            ratq(1, 2),
        ])
        .unwrap();
        let mut psi = PowerSeries3::zero_constant(3, 2).unwrap();
        psi.set(&mi(&[1, 0, 0]), rat(1)).unwrap();
        psi.set(&mi(&[0, 1, 0]), rat(1)).unwrap();
        let c = series_compose(&phi, &psi, 2).unwrap();
        assert_eq!(c.coeff(&mi(&[1, 1, 0])).unwrap(), rat(1));
    }

    #[test]
    fn compose_rejects_nonzero_constant_term() {
        let phi = PowerSeries1::new(vec![rat(1), rat(1)]).unwrap();
        let psi = PowerSeries3::with_constant(3, 1).unwrap();
        assert_eq!(
            series_compose(&phi, &psi, 1).unwrap_err(),
            FdbError::ConstantTermNotZero
        );
        let mut strict = PowerSeries3::zero_constant(3, 1).unwrap();
        assert_eq!(
            strict.set(&mi(&[0, 0, 0]), rat(1)).unwrap_err(),
            FdbError::ConstantTermNotZero
        );
    }

    #[test]
    fn compose_rejects_underresolved_inputs() {
        let phi = PowerSeries1::new(vec![rat(1), rat(1)]).unwrap();
        let mut psi = PowerSeries3::zero_constant(3, 4).unwrap();
        psi.set(&mi(&[1, 0, 0]), rat(1)).unwrap();
        assert!(matches!(
            series_compose(&phi, &psi, 3).unwrap_err(),
            FdbError::TruncatedBelow { needed: 3, available: 1 }
        ));
    }
}
