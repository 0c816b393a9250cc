//! Convex domain primitives with closed-form ray-exit queries.

use crate::scalar::Scalar;
use crate::vec3::Vec3;

/// Relative boundary tolerance: points within `BOUNDARY_REL_TOL * diameter`
/// of the boundary are treated as having left the domain, so grazing rays
/// cannot stall on the surface.
pub const BOUNDARY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexDomain<F> {
    Box { lower: Vec3<F>, upper: Vec3<F> },
    Sphere { center: Vec3<F>, radius: F },
}

impl<F: Scalar> ConvexDomain<F> {
    pub fn contains(&self, r: Vec3<F>) -> bool {
        match *self {
            ConvexDomain::Box { lower, upper } => {
                r.x > lower.x
                    && r.x < upper.x
                    && r.y > lower.y
                    && r.y < upper.y
                    && r.z > lower.z
                    && r.z < upper.z
            }
            ConvexDomain::Sphere { center, radius } => (r - center).norm_squared() < radius * radius,
        }
    }

    /// Unique positive crossing time of the boundary along `r + v t`.
    /// Requires `r` inside; convexity gives a single exit.
    pub fn exit_time(&self, r: Vec3<F>, v: Vec3<F>) -> F {
        match *self {
            ConvexDomain::Box { lower, upper } => {
                let mut t = F::infinity();
                for axis in 0..3 {
                    let vi = v.component(axis);
                    let ri = r.component(axis);
                    if vi > F::zero() {
                        t = t.min((upper.component(axis) - ri) / vi);
                    } else if vi < F::zero() {
                        t = t.min((lower.component(axis) - ri) / vi);
                    }
                }
                t.max(F::zero())
            }
            ConvexDomain::Sphere { center, radius } => {
                let d = r - center;
                let a = v.norm_squared();
                let b = d.dot(v);
                let c = d.norm_squared() - radius * radius;
                // c < 0 inside, so the discriminant is positive.
                let disc = (b * b - a * c).max(F::zero());
                ((-b + disc.sqrt()) / a).max(F::zero())
            }
        }
    }

    pub fn diameter(&self) -> F {
        match *self {
            ConvexDomain::Box { lower, upper } => (upper - lower).norm(),
            ConvexDomain::Sphere { radius, .. } => radius + radius,
        }
    }

    pub fn bounding_box(&self) -> (Vec3<F>, Vec3<F>) {
        match *self {
            ConvexDomain::Box { lower, upper } => (lower, upper),
            ConvexDomain::Sphere { center, radius } => {
                let r = Vec3::new(radius, radius, radius);
                (center - r, center + r)
            }
        }
    }

    pub fn volume(&self) -> F {
        match *self {
            ConvexDomain::Box { lower, upper } => {
                let d = upper - lower;
                d.x * d.y * d.z
            }
            ConvexDomain::Sphere { radius, .. } => {
                F::from_f(4.0 / 3.0 * std::f64::consts::PI) * radius * radius * radius
            }
        }
    }

    /// Absolute boundary tolerance (length units).
    pub fn boundary_tol(&self) -> F {
        F::from_f(BOUNDARY_REL_TOL) * self.diameter()
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            ConvexDomain::Box { lower, upper } => {
                lower.x < upper.x && lower.y < upper.y && lower.z < upper.z
            }
            ConvexDomain::Sphere { radius, .. } => radius > F::zero(),
        }
    }
}
