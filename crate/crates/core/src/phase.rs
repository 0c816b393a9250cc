//! Phase space: velocity set, outgoing-velocity kernels, offspring law and
//! the cell-wise material model.
//!
//! Cross sections are per-time event rates along the flight path, constant
//! per (cell, incoming speed band). Kernels are isotropic in outgoing
//! direction with the speed drawn from a histogram over speed bins; a
//! zero-width bin is an atom (used for single-speed problems where
//! v_min = v_max).

use rand::Rng;

use crate::error::SimError;
use crate::geometry::ConvexDomain;
use crate::scalar::Scalar;
use crate::vec3::Vec3;

/// Tolerance on kernel masses, pmf normalisation and partition volumes.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<F> {
    pub r: Vec3<F>,
    pub v: Vec3<F>,
}

impl<F: Scalar> PhasePoint<F> {
    pub fn new(r: Vec3<F>, v: Vec3<F>) -> Self {
        Self { r, v }
    }

    pub fn speed(&self) -> F {
        self.v.norm()
    }
}

/// The velocity annulus {v: v_min <= |v| <= v_max}, optionally subdivided
/// into speed bands on which cross sections are constant.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySet<F> {
    pub v_min: F,
    pub v_max: F,
    /// Band edges, `v_min = edges[0] <= ... <= edges[n] = v_max`.
    pub band_edges: Vec<F>,
}

impl<F: Scalar> VelocitySet<F> {
    pub fn new(v_min: F, v_max: F, interior_breaks: &[F]) -> Self {
        let mut edges = Vec::with_capacity(interior_breaks.len() + 2);
        edges.push(v_min);
        edges.extend_from_slice(interior_breaks);
        edges.push(v_max);
        Self { v_min, v_max, band_edges: edges }
    }

    pub fn n_bands(&self) -> usize {
        self.band_edges.len() - 1
    }

    pub fn contains_speed(&self, s: F) -> bool {
        s >= self.v_min && s <= self.v_max
    }

    pub fn band_of(&self, speed: F) -> usize {
        let n = self.n_bands();
        for b in 0..n {
            if speed < self.band_edges[b + 1] {
                return b;
            }
        }
        n - 1
    }
}

/// Isotropic-direction kernel with a speed histogram. `mass` is the total
/// kernel mass over V (1 for scattering, m for fission); sampling is from
/// the normalised histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityKernel<F> {
    /// Speed bin edges (len = weights.len() + 1, nondecreasing).
    pub edges: Vec<F>,
    /// Per-bin masses.
    pub weights: Vec<F>,
    /// Declared total mass.
    pub mass: F,
    cdf: Vec<F>,
}

impl<F: Scalar> VelocityKernel<F> {
    pub fn new(edges: Vec<F>, weights: Vec<F>, mass: F) -> Self {
        let total: F = weights.iter().copied().sum();
        let mut cdf = Vec::with_capacity(weights.len());
        if total > F::zero() {
            let mut acc = F::zero();
            for w in &weights {
                acc += *w / total;
                cdf.push(acc);
            }
        } else {
            // degenerate (zero-mass) kernel: legal only where it is never
            // sampled, e.g. fission kernels of non-fissile cells
            cdf.resize(weights.len(), F::one());
        }
        if let Some(last) = cdf.last_mut() {
            *last = F::one();
        }
        Self { edges, weights, mass, cdf }
    }

    /// Single-bin kernel on [v_min, v_max] with the given mass.
    pub fn single_bin(vset: &VelocitySet<F>, mass: F) -> Self {
        Self::new(vec![vset.v_min, vset.v_max], vec![mass], mass)
    }

    /// Numeric mass: composite midpoint rule per bin (atoms contribute their
    /// weight directly). Checked against the declared mass at load time.
    pub fn quadrature_mass(&self) -> F {
        let mut total = F::zero();
        let panels = 16;
        for (b, w) in self.weights.iter().enumerate() {
            let lo = self.edges[b];
            let hi = self.edges[b + 1];
            let width = hi - lo;
            if width <= F::zero() {
                total += *w;
                continue;
            }
            // density in speed is w/width, constant per bin
            let h = *w / width;
            let sub = width / F::from_f(panels as f64);
            let mut s = F::zero();
            for _ in 0..panels {
                s += h * sub;
            }
            total += s;
        }
        total
    }

    pub fn sample_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        let u = F::unit_uniform(rng);
        let mut b = self.cdf.len() - 1;
        for (i, c) in self.cdf.iter().enumerate() {
            if u < *c {
                b = i;
                break;
            }
        }
        let lo = self.edges[b];
        let hi = self.edges[b + 1];
        if hi <= lo {
            lo
        } else {
            lo + (hi - lo) * F::unit_uniform(rng)
        }
    }

    /// Outgoing velocity: isotropic direction, histogram speed.
    pub fn sample_velocity<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3<F> {
        let speed = self.sample_speed(rng);
        Vec3::isotropic(rng) * speed
    }

    /// Speed density h(s) (mass per unit speed); infinite on atoms.
    pub fn speed_density(&self, s: F) -> F {
        for (b, w) in self.weights.iter().enumerate() {
            let lo = self.edges[b];
            let hi = self.edges[b + 1];
            if s >= lo && s <= hi {
                if hi <= lo {
                    return F::infinity();
                }
                return *w / (hi - lo);
            }
        }
        F::zero()
    }

    /// True if the kernel density is strictly positive on all of V.
    pub fn positive_everywhere(&self, vset: &VelocitySet<F>) -> bool {
        // support must span [v_min, v_max] with positive weight in every bin
        if (self.edges[0] - vset.v_min).abs() > F::from_f(MASS_TOL)
            || (self.edges[self.edges.len() - 1] - vset.v_max).abs() > F::from_f(MASS_TOL)
        {
            return false;
        }
        self.weights.iter().all(|w| *w > F::zero())
    }
}

/// Fission multiplicity law with support 0..=N_max. p_0 > 0 models capture.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw<F> {
    pub pmf: Vec<F>,
    mean: F,
}

impl<F: Scalar> OffspringLaw<F> {
    pub fn new(pmf: Vec<F>) -> Self {
        let mut mean = F::zero();
        for (i, p) in pmf.iter().enumerate() {
            mean += *p * F::from_f(i as f64);
        }
        Self { pmf, mean }
    }

    pub fn mean(&self) -> F {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u = F::unit_uniform(rng);
        let mut acc = F::zero();
        for (i, p) in self.pmf.iter().enumerate() {
            acc += *p;
            if u < acc {
                return i as u32;
            }
        }
        (self.pmf.len() - 1) as u32
    }
}

/// One material cell: an axis-aligned box (clipped to the domain) with
/// per-band rates and kernels and an offspring law.
#[derive(Debug, Clone)]
pub struct Cell<F> {
    pub lower: Vec3<F>,
    pub upper: Vec3<F>,
    /// Per incoming speed band.
    pub sigma_s: Vec<F>,
    pub sigma_f: Vec<F>,
    pub scatter: Vec<VelocityKernel<F>>,
    pub fission: Vec<VelocityKernel<F>>,
    pub offspring: OffspringLaw<F>,
}

impl<F: Scalar> Cell<F> {
    /// Half-open membership, [lower, upper) per axis.
    pub fn contains(&self, r: Vec3<F>) -> bool {
        r.x >= self.lower.x
            && r.x < self.upper.x
            && r.y >= self.lower.y
            && r.y < self.upper.y
            && r.z >= self.lower.z
            && r.z < self.upper.z
    }

    /// Exit time of the cell box along `r0 + v t`, measured from `r0`.
    pub fn exit_time_from(&self, r0: Vec3<F>, v: Vec3<F>) -> F {
        let mut t = F::infinity();
        for axis in 0..3 {
            let vi = v.component(axis);
            let ri = r0.component(axis);
            if vi > F::zero() {
                t = t.min((self.upper.component(axis) - ri) / vi);
            } else if vi < F::zero() {
                t = t.min((self.lower.component(axis) - ri) / vi);
            }
        }
        t
    }
}

/// The full physics input: a partition of D into cells plus the offspring
/// bound N_max from (H4).
#[derive(Debug, Clone)]
pub struct MaterialModel<F> {
    pub cells: Vec<Cell<F>>,
    pub n_max: u32,
    pub vset: VelocitySet<F>,
}

impl<F: Scalar> MaterialModel<F> {
    pub fn locate(&self, r: Vec3<F>, speed: F) -> Option<(usize, usize)> {
        let band = self.vset.band_of(speed);
        self.cells
            .iter()
            .position(|c| c.contains(r))
            .map(|ci| (ci, band))
    }

    pub fn sigma_s(&self, cell: usize, band: usize) -> F {
        self.cells[cell].sigma_s[band]
    }

    pub fn sigma_f(&self, cell: usize, band: usize) -> F {
        self.cells[cell].sigma_f[band]
    }

    /// Mean fission yield m(r, v) = total mass of the fission kernel.
    pub fn yield_m(&self, cell: usize, band: usize) -> F {
        self.cells[cell].fission[band].mass
    }

    /// Total walk rate of the weighted random walk: sigma_s + sigma_f * m.
    pub fn alpha(&self, cell: usize, band: usize) -> F {
        self.sigma_s(cell, band) + self.sigma_f(cell, band) * self.yield_m(cell, band)
    }

    /// Net fission production rate beta = sigma_f (m - 1); may be negative.
    pub fn beta_at(&self, cell: usize, band: usize) -> F {
        self.sigma_f(cell, band) * (self.yield_m(cell, band) - F::one())
    }
}

/// Everything a simulation needs: geometry, velocity set and materials.
#[derive(Debug, Clone)]
pub struct Problem<F> {
    pub domain: ConvexDomain<F>,
    pub model: MaterialModel<F>,
}

impl<F: Scalar> Problem<F> {
    pub fn locate(&self, p: &PhasePoint<F>) -> Result<(usize, usize), SimError> {
        if !self.domain.contains(p.r) {
            return Err(SimError::OutsideDomain);
        }
        self.model
            .locate(p.r, p.speed())
            .ok_or(SimError::OutsideDomain)
    }

    /// m(r, v) for a phase point in D x V.
    pub fn mean_yield(&self, p: &PhasePoint<F>) -> Result<F, SimError> {
        let (c, b) = self.locate(p)?;
        Ok(self.model.yield_m(c, b))
    }

    /// beta(r, v) = sigma_f (m - 1).
    pub fn beta(&self, p: &PhasePoint<F>) -> Result<F, SimError> {
        let (c, b) = self.locate(p)?;
        Ok(self.model.beta_at(c, b))
    }
}
