//! Scalar abstraction shared by every numerical kernel.
//!
//! All grids, fields and propagators are generic over [`Real`], which is
//! implemented for `f32` and `f64`. Tolerances quoted throughout the crate
//! assume `f64`; the `f32` instantiation is usable for quick previews.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};
use rustfft::FftNum;

pub use rustfft::num_complex::Complex;

pub trait Real:
    Float + FloatConst + FftNum + NumAssign + Sum + Display + Debug + Default + Send + Sync
{
}

impl<T> Real for T where
    T: Float + FloatConst + FftNum + NumAssign + Sum + Display + Debug + Default + Send + Sync
{
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from(x).expect("literal representable in scalar type")
}

/// Converts a working scalar back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `|z|^alpha` computed as `exp(alpha * ln|z|)`, mapping magnitudes below the
/// smallest normal number to zero. `alpha` need not be an integer.
#[inline]
pub fn pow_abs<T: Real>(modulus: T, alpha: T) -> T {
    if alpha == T::zero() {
        T::one()
    } else if modulus < guard::<T>() {
        T::zero()
    } else {
        (alpha * modulus.ln()).exp()
    }
}

#[inline]
fn guard<T: Real>() -> T {
    // 1e-300 for f64; f32 cannot represent that, so fall back to its own floor.
    T::from(1e-300_f64)
        .filter(|g| *g > T::zero())
        .unwrap_or_else(T::min_positive_value)
}

/// Unit-modulus phase factor `exp(i * theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_abs_matches_powf() {
        for &m in &[0.5_f64, 1.0, 2.0, 3.7] {
            assert!((pow_abs(m, 6.0) - m.powf(6.0)).abs() <= 1e-12 * m.powf(6.0));
            assert!((pow_abs(m, 4.5) - m.powf(4.5)).abs() <= 1e-12 * m.powf(4.5));
        }
    }

    #[test]
    fn pow_abs_guards_tiny_moduli() {
        assert_eq!(pow_abs(0.0_f64, 6.0), 0.0);
        assert_eq!(pow_abs(1e-310_f64, 6.0), 0.0);
        assert_eq!(pow_abs(0.0_f32, 6.0), 0.0);
        assert_eq!(pow_abs(0.3_f64, 0.0), 1.0);
    }
}
