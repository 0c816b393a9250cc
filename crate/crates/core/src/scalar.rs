//! Scalar abstraction: the engine is generic over the floating type.
//!
//! Everything downstream (geometry, flight sampling, estimators, the
//! discrete-ordinates oracle) only needs `Float` arithmetic plus a way to
//! draw a uniform variate, so f32 and f64 both work. The crate root pins
//! `Real = f64` for the CLI and acceptance runs.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Uniform draw from [0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn from_f(x: f64) -> Self {
        Self::from_f64(x).expect("f64 not representable in scalar type")
    }

    fn to_f(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen::<f32>()
    }
}

impl Scalar for f64 {
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen::<f64>()
    }
}
