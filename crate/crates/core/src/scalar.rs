//! Scalar abstraction shared by every module.
//!
//! All physics code is written against [`Real`], which is satisfied by `f32`
//! and `f64`. Tolerances quoted throughout the crate assume `f64`; `f32` is a
//! supported instantiation for quick exploratory runs only.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::FromPrimitive;

/// Real scalar used by the toolkit.
pub trait Real: RealField + Copy + FromPrimitive + Default {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + Default {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Lossy conversion back to `f64` (for error payloads and reports).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_subset().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cre<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `e^{iθ}`
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Complex exponential.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    cis(z.im) * z.re.exp()
}

#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// `ln n!` by direct summation; exact enough for the truncations used here.
pub fn ln_factorial<T: Real>(n: usize) -> T {
    let mut acc = T::zero();
    for k in 2..=n {
        acc += real::<T>(k as f64).ln();
    }
    acc
}

/// Smallest Fock truncation that comfortably holds a coherent label of
/// modulus `r`: `r² + 6r + 10`.
pub fn safe_dim<T: Real>(r: T) -> usize {
    let need = r * r + real::<T>(6.0) * r + real::<T>(10.0);
    to_f64(need).ceil().max(2.0) as usize
}
