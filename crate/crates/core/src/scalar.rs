//! Scalar abstraction shared by all numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign, NumCast};

/// Real floating-point scalar the numerical core is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on precision are
/// expressed in multiples of [`Float::epsilon`].
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn of_usize(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable")
    }

    /// Conversion from a lattice coordinate.
    fn of_i64(n: i64) -> Self {
        <Self as NumCast>::from(n).expect("coordinate representable")
    }

    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`] component type.
pub type Cplx<T> = Complex<T>;

/// `exp(j * phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Cplx<T> {
    Complex::new(phase.cos(), phase.sin())
}
