//! Multi-index arithmetic in two or three variables: the linear order used to
//! enumerate derivative partitions, exact multinomial coefficients, and the
//! ordered partition sets that drive the multivariate higher-order chain rule.

use std::cmp::Ordering;
use std::fmt;

use num::{BigUint, One, Zero};
use thiserror::Error;

/// Largest supported number of variables.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0}: must be 2 or 3")]
    UnsupportedDimension(usize),
    #[error("parts do not sum to the target multi-index")]
    PartsSumMismatch,
    #[error("lower index is not componentwise <= the upper index")]
    NotComponentwiseLeq,
    #[error("partition target must have order >= 1")]
    EmptyPartitionTarget,
    #[error("partition multiplicity total must be >= 1")]
    ZeroPartitionCount,
}

/// An element of `N_0^d` (d = 2 or 3): the index of a partial derivative.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    dim: u8,
    comp: [u32; MAX_DIM],
}

impl MultiIndex {
    /// Builds an index from its components; the slice length fixes `d`.
    pub fn new(components: &[u32]) -> Result<Self, IndexError> {
        let dim = components.len();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(IndexError::UnsupportedDimension(dim));
        }
        let mut comp = [0u32; MAX_DIM];
        comp[..dim].copy_from_slice(components);
        Ok(Self {
            dim: dim as u8,
            comp,
        })
    }

    pub fn zero(dim: usize) -> Result<Self, IndexError> {
        Self::new(&vec![0; dim])
    }

    /// The unit index along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Result<Self, IndexError> {
        let mut comp = vec![0u32; dim];
        if axis >= dim {
            return Err(IndexError::UnsupportedDimension(dim));
        }
        comp[axis] = 1;
        Self::new(&comp)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn components(&self) -> &[u32] {
        &self.comp[..self.dim as usize]
    }

    pub fn component(&self, axis: usize) -> u32 {
        self.comp[axis]
    }

    /// The order `|alpha|`, i.e. the component sum.
    pub fn order(&self) -> u32 {
        self.components().iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Self) -> Result<Self, IndexError> {
        self.check_dim(other)?;
        let mut comp = self.comp;
        for (c, o) in comp.iter_mut().zip(other.comp.iter()) {
            *c += o;
        }
        Ok(Self {
            dim: self.dim,
            comp,
        })
    }

    /// Componentwise difference, `None` when any component would go negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if self.dim != other.dim {
            return None;
        }
        let mut comp = [0u32; MAX_DIM];
        for (slot, (a, b)) in comp.iter_mut().zip(self.comp.iter().zip(other.comp.iter())) {
            *slot = a.checked_sub(*b)?;
        }
        Some(Self {
            dim: self.dim,
            comp,
        })
    }

    /// Componentwise `<=` (the partial order of the Leibniz rule).
    pub fn leq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self
                .components()
                .iter()
                .zip(other.components())
                .all(|(a, b)| a <= b)
    }

    pub fn scale(&self, k: u32) -> Self {
        let mut comp = self.comp;
        for c in comp.iter_mut() {
            *c *= k;
        }
        Self {
            dim: self.dim,
            comp,
        }
    }

    /// `alpha! = prod_i alpha_i!`, exactly.
    pub fn factorial(&self) -> BigUint {
        self.components()
            .iter()
            .map(|&c| factorial(c))
            .product::<BigUint>()
    }

    fn check_dim(&self, other: &Self) -> Result<(), IndexError> {
        if self.dim != other.dim {
            Err(IndexError::DimensionMismatch(self.dim(), other.dim()))
        } else {
            Ok(())
        }
    }

    /// Total-order comparison assuming equal dimensions: order first, then
    /// lexicographic on the components.
    fn cmp_same_dim(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.dim, other.dim);
        self.order()
            .cmp(&other.order())
            .then_with(|| self.components().cmp(other.components()))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

// Total order for map keys and deterministic output: shorter dimension first,
// then the same (order, lexicographic) comparison as `order_lt`.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.cmp_same_dim(other))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The strict linear order on multi-indices: `a` before `b` when `|a| < |b|`,
/// or the orders agree and the first differing component of `a` is smaller.
pub fn order_lt(a: &MultiIndex, b: &MultiIndex) -> Result<bool, IndexError> {
    a.check_dim(b)?;
    Ok(a.cmp_same_dim(b) == Ordering::Less)
}

/// `n!` as an exact big integer.
pub fn factorial(n: u32) -> BigUint {
    let mut acc = BigUint::one();
    for k in 2..=n {
        acc *= BigUint::from(k);
    }
    acc
}

/// Scalar multinomial `n! / prod parts_i!`; the parts must sum to `n`.
pub fn scalar_multinomial(n: u32, parts: &[u32]) -> Result<BigUint, IndexError> {
    if parts.iter().sum::<u32>() != n {
        return Err(IndexError::PartsSumMismatch);
    }
    let denom: BigUint = parts.iter().map(|&p| factorial(p)).product();
    Ok(factorial(n) / denom)
}

/// Scalar binomial, zero when `k > n`.
pub fn scalar_binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        BigUint::zero()
    } else {
        factorial(n) / (factorial(k) * factorial(n - k))
    }
}

/// Multi-index multinomial `alpha! / prod parts_l!`, exactly.
///
/// The parts must sum to `alpha` componentwise; with two parts this is the
/// Leibniz coefficient `binomial(alpha, beta)`.
pub fn multinomial(alpha: &MultiIndex, parts: &[MultiIndex]) -> Result<BigUint, IndexError> {
    let mut sum = MultiIndex::zero(alpha.dim())?;
    for p in parts {
        sum = sum.add(p)?;
    }
    if sum != *alpha {
        return Err(IndexError::PartsSumMismatch);
    }
    let denom: BigUint = parts.iter().map(|p| p.factorial()).product();
    Ok(alpha.factorial() / denom)
}

/// Leibniz coefficient `binomial(alpha, beta)` for `beta <= alpha`.
pub fn binomial(alpha: &MultiIndex, beta: &MultiIndex) -> Result<BigUint, IndexError> {
    alpha.check_dim(beta)?;
    let rest = alpha
        .checked_sub(beta)
        .ok_or(IndexError::NotComponentwiseLeq)?;
    multinomial(alpha, &[*beta, rest])
}

/// All indices of order `m` in `d` variables, ascending in the linear order.
pub fn indices_of_order(dim: usize, m: u32) -> Result<Vec<MultiIndex>, IndexError> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(IndexError::UnsupportedDimension(dim));
    }
    let mut out = Vec::new();
    let mut comp = vec![0u32; dim];
    fill_order(&mut out, &mut comp, 0, m);
    Ok(out)
}

fn fill_order(out: &mut Vec<MultiIndex>, comp: &mut [u32], axis: usize, remaining: u32) {
    if axis + 1 == comp.len() {
        comp[axis] = remaining;
        out.push(MultiIndex::new(comp).expect("dimension checked by caller"));
        return;
    }
    for c in 0..=remaining {
        comp[axis] = c;
        fill_order(out, comp, axis + 1, remaining - c);
    }
    comp[axis] = 0;
}

/// All indices of order `0..=m`, ascending in the linear order.
pub fn indices_up_to_order(dim: usize, m: u32) -> Result<Vec<MultiIndex>, IndexError> {
    let mut out = Vec::new();
    for order in 0..=m {
        out.extend(indices_of_order(dim, order)?);
    }
    Ok(out)
}

/// All indices componentwise `<= bound`, ascending in the linear order.
pub fn indices_below(bound: &MultiIndex) -> Vec<MultiIndex> {
    let dim = bound.dim();
    let mut out = Vec::new();
    let mut comp = vec![0u32; dim];
    loop {
        out.push(MultiIndex::new(&comp).expect("dimension fixed by bound"));
        let mut axis = dim;
        loop {
            if axis == 0 {
                out.sort();
                return out;
            }
            axis -= 1;
            if comp[axis] < bound.component(axis) {
                comp[axis] += 1;
                break;
            }
            comp[axis] = 0;
        }
    }
}

/// One term of an ordered derivative partition: multiplicities `k_l` paired
/// with strictly increasing indices `lambda_l`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartitionTuple {
    pairs: Vec<(u32, MultiIndex)>,
}

impl PartitionTuple {
    pub fn new(pairs: Vec<(u32, MultiIndex)>) -> Self {
        Self { pairs }
    }

    /// The tuple length `s`.
    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(u32, MultiIndex)] {
        &self.pairs
    }

    pub fn multiplicities(&self) -> impl Iterator<Item = u32> + '_ {
        self.pairs.iter().map(|(k, _)| *k)
    }

    /// `sum_l k_l`.
    pub fn total_multiplicity(&self) -> u32 {
        self.pairs.iter().map(|(k, _)| k).sum()
    }

    /// `sum_l k_l * lambda_l`.
    pub fn weighted_sum(&self) -> Option<MultiIndex> {
        let first = self.pairs.first()?;
        let mut acc = MultiIndex::zero(first.1.dim()).ok()?;
        for (k, lambda) in &self.pairs {
            acc = acc.add(&lambda.scale(*k)).ok()?;
        }
        Some(acc)
    }

    /// Construction-independent validity check against the defining
    /// constraints for the pair `(i, beta)`.
    pub fn is_valid_for(&self, i: u32, beta: &MultiIndex) -> bool {
        if self.pairs.is_empty() {
            return false;
        }
        for (k, lambda) in &self.pairs {
            if *k == 0 || lambda.order() == 0 || lambda.dim() != beta.dim() {
                return false;
            }
        }
        for w in self.pairs.windows(2) {
            match order_lt(&w[0].1, &w[1].1) {
                Ok(true) => {}
                _ => return false,
            }
        }
        self.total_multiplicity() == i && self.weighted_sum().as_ref() == Some(beta)
    }
}

impl fmt::Debug for PartitionTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (k, lambda)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}x{lambda}")?;
        }
        write!(f, "]")
    }
}

/// The partition sets for one `(i, beta)`, grouped by tuple length `s`.
#[derive(Clone, Debug)]
pub struct PartitionSets {
    by_size: Vec<Vec<PartitionTuple>>,
}

impl PartitionSets {
    /// Tuples of length `s` (empty for `s` out of range).
    pub fn of_size(&self, s: usize) -> &[PartitionTuple] {
        if s == 0 || s > self.by_size.len() {
            &[]
        } else {
            &self.by_size[s - 1]
        }
    }

    pub fn max_size(&self) -> usize {
        self.by_size.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartitionTuple> {
        self.by_size.iter().flatten()
    }

    pub fn total(&self) -> usize {
        self.by_size.iter().map(Vec::len).sum()
    }
}

/// Enumerates every tuple `(k_1..k_s; lambda_1..lambda_s)` with strictly
/// increasing `lambda`, `sum k_l = i`, and `sum k_l lambda_l = beta`,
/// grouped by `s`.
///
/// `i > |beta|` yields empty sets (no tuple can exist); `|beta| = 0` is an
/// error. Tuples appear in lexicographic order of the `(lambda, k)` sequence.
pub fn enumerate_partitions(i: u32, beta: &MultiIndex) -> Result<PartitionSets, IndexError> {
    if beta.order() == 0 {
        return Err(IndexError::EmptyPartitionTarget);
    }
    if i == 0 {
        return Err(IndexError::ZeroPartitionCount);
    }
    let max_size = beta.order() as usize;
    let mut by_size = vec![Vec::new(); max_size];
    if i <= beta.order() {
        // Candidates in increasing linear order; only lambda <= beta can occur.
        let candidates: Vec<MultiIndex> = indices_below(beta)
            .into_iter()
            .filter(|l| l.order() >= 1)
            .collect();
        let mut acc: Vec<(u32, MultiIndex)> = Vec::new();
        descend(&candidates, 0, i, *beta, &mut acc, &mut by_size);
    }
    Ok(PartitionSets { by_size })
}

fn descend(
    candidates: &[MultiIndex],
    start: usize,
    rem_count: u32,
    rem_target: MultiIndex,
    acc: &mut Vec<(u32, MultiIndex)>,
    out: &mut [Vec<PartitionTuple>],
) {
    if rem_count == 0 {
        if rem_target.is_zero() {
            let s = acc.len();
            out[s - 1].push(PartitionTuple::new(acc.clone()));
        }
        return;
    }
    // Each remaining unit of multiplicity consumes at least order one.
    if rem_target.order() < rem_count {
        return;
    }
    for (pos, lambda) in candidates.iter().enumerate().skip(start) {
        if !lambda.leq(&rem_target) {
            continue;
        }
        let mut k = 1u32;
        loop {
            if k > rem_count {
                break;
            }
            let Some(next_target) = rem_target.checked_sub(&lambda.scale(k)) else {
                break;
            };
            acc.push((k, *lambda));
            descend(candidates, pos + 1, rem_count - k, next_target, acc, out);
            acc.pop();
            k += 1;
        }
    }
}
