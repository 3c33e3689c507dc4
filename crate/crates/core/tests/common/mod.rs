#![allow(dead_code)]

use std::sync::Arc;

use mll_core::num::{BigInt, BigRational};
use mll_core::num_complex::Complex;
use mll_core::spectral::{SpectralField, TorusGrid};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real field with spectral amplitudes falling off like
/// `exp(-decay * |k|)`.
pub fn random_field(
    grid: &Arc<TorusGrid<f64>>,
    rng: &mut ChaCha8Rng,
    decay: f64,
) -> SpectralField<f64> {
    let mut f = SpectralField::zero(grid);
    for flat in 0..grid.len() {
        let k = grid.wavenumbers_of(flat);
        let kn = k[..grid.dim()]
            .iter()
            .map(|&x| (x * x) as f64)
            .sum::<f64>()
            .sqrt();
        let amp = (-decay * kn).exp();
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = rng.random_range(-1.0..1.0);
        f.coeffs_mut()[flat] = Complex::new(amp * re, amp * im);
    }
    f.zero_nyquist();
    f.enforce_hermitian();
    f
}

/// Random rational with small numerator and denominator.
pub fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let num: i64 = rng.random_range(-9..=9);
    let den: i64 = rng.random_range(1..=9);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
