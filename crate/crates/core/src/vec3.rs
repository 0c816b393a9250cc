//! Minimal 3-vector used for positions and velocities.

use std::ops::{Add, Div, Mul, Neg, Sub};

use rand::Rng;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3<F> {
    pub x: F,
    pub y: F,
    pub z: F,
}

impl<F: Scalar> Vec3<F> {
    pub fn new(x: F, y: F, z: F) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero(), F::zero())
    }

    pub fn dot(self, o: Self) -> F {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_squared(self) -> F {
        self.dot(self)
    }

    pub fn norm(self) -> F {
        self.norm_squared().sqrt()
    }

    pub fn component(self, axis: usize) -> F {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(F::from_f(v[0]), F::from_f(v[1]), F::from_f(v[2]))
    }

    /// Uniform direction on the unit sphere.
    pub fn isotropic<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let two = F::from_f(2.0);
        let mu = two * F::unit_uniform(rng) - F::one();
        let phi = two * F::from_f(std::f64::consts::PI) * F::unit_uniform(rng);
        let s = (F::one() - mu * mu).max(F::zero()).sqrt();
        Self::new(s * phi.cos(), s * phi.sin(), mu)
    }
}

impl<F: Scalar> Add for Vec3<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<F: Scalar> Sub for Vec3<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<F: Scalar> Mul<F> for Vec3<F> {
    type Output = Self;
    fn mul(self, s: F) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<F: Scalar> Div<F> for Vec3<F> {
    type Output = Self;
    fn div(self, s: F) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<F: Scalar> Neg for Vec3<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}
