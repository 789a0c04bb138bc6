use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use super::tape::Var;

/// Real-number operations needed by jet arithmetic.
///
/// Implemented by `f64` and by tape handles [`Var`]. Constants are created
/// through [`Scalar::lift`] on an existing value so that tape-backed scalars
/// land on the right tape.
pub trait Scalar:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn value(&self) -> f64;
    fn lift(&self, c: f64) -> Self;
    fn tanh(self) -> Self;
    fn scale(self, c: f64) -> Self;
    fn offset(self, c: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn lift(&self, c: f64) -> Self {
        c
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn offset(self, c: f64) -> Self {
        self + c
    }
}

impl Scalar for Var<'_> {
    fn value(&self) -> f64 {
        Var::value(self)
    }
    fn lift(&self, c: f64) -> Self {
        self.tape().constant(c)
    }
    fn tanh(self) -> Self {
        Var::tanh(self)
    }
    fn scale(self, c: f64) -> Self {
        Var::scale(self, c)
    }
    fn offset(self, c: f64) -> Self {
        Var::offset(self, c)
    }
}
