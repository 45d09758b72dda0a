//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All physics is written against [`Real`], a thin extension of
//! [`nalgebra::RealField`]. Complex amplitudes are `Complex<T>` and dense
//! operators are `DMatrix<Complex<T>>`.

use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;

/// Complex scalar over the real type `T`.
pub type C<T> = Complex<T>;
/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<Complex<T>>;

/// Real scalar type the simulator is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + Debug + Display + Send + Sync + 'static {
    /// Factor by which the double-precision tolerances used throughout the
    /// crate are widened for this type. `1.0` for `f64`.
    fn tolerance_scale() -> f64;
}

impl Real for f64 {
    fn tolerance_scale() -> f64 {
        1.0
    }
}

impl Real for f32 {
    fn tolerance_scale() -> f64 {
        1.0e6
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn re<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts `T` back to `f64` (lossless for both supported types).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    nalgebra::try_convert(x).unwrap_or(f64::NAN)
}

/// Complex number from two `f64` parts.
#[inline]
pub fn cx<T: Real>(re_part: f64, im_part: f64) -> C<T> {
    Complex::new(re(re_part), re(im_part))
}

/// Purely real complex number.
#[inline]
pub fn cr<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// The imaginary unit.
#[inline]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// A double-precision tolerance widened for `T`.
#[inline]
pub fn tol<T: Real>(base: f64) -> T {
    re(base * T::tolerance_scale())
}

/// Modulus of a complex number.
#[inline]
pub fn modulus<T: Real>(z: C<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Principal argument in (-pi, pi].
#[inline]
pub fn argument<T: Real>(z: C<T>) -> T {
    z.im.atan2(z.re)
}

/// `2*pi*x`: converts a frequency given as omega/2pi in MHz to rad/us.
#[inline]
pub fn mhz<T: Real>(x: f64) -> T {
    re::<T>(x) * T::two_pi()
}
