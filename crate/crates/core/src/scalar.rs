//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra as na;
use num_traits as nt;
use std::fmt::{Debug, Display};

pub use na::Complex;

/// Real floating point scalar the library is generic over (`f32` or `f64`).
pub trait Real:
    na::RealField + Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + Debug + Display + 'static
{
    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Complex number over a [`Real`].
pub type C<T> = Complex<T>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    na::convert(x)
}

#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable as float")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

/// The imaginary unit.
#[inline]
pub fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn creal<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

/// `sin(x)/x`, evaluated by its Taylor series near zero.
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < real(1e-4) {
        let x2 = x * x;
        T::one() - x2 / real(6.0) + x2 * x2 / real(120.0)
    } else {
        x.sin() / x
    }
}

/// Complex exponential written out in terms of real functions.
#[inline]
pub fn cexp<T: Real>(z: C<T>) -> C<T> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

/// Principal square root, branch cut on the negative real axis, `Re >= 0`.
pub fn csqrt<T: Real>(z: C<T>) -> C<T> {
    let r = (z.re * z.re + z.im * z.im).sqrt();
    if r == T::zero() {
        return czero();
    }
    let half = real::<T>(0.5);
    let re = ((r + z.re) * half).sqrt();
    let im = ((r - z.re) * half).sqrt();
    if z.im < T::zero() || (z.im == T::zero() && z.re < T::zero() && z.im.is_sign_negative()) {
        Complex::new(re, -im)
    } else {
        Complex::new(re, im)
    }
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn carg<T: Real>(z: C<T>) -> T {
    z.im.atan2(z.re)
}

#[inline]
pub fn cinv<T: Real>(z: C<T>) -> C<T> {
    let d = z.re * z.re + z.im * z.im;
    Complex::new(z.re / d, -z.im / d)
}

#[inline]
pub fn is_finite<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
