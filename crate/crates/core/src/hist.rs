//! Binned phase-space tallies for eigenfunction/eigenmeasure estimates.

use crate::phase::PhasePoint;
use crate::scalar::Scalar;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Bin values sum to one (left eigenmeasure / source distribution).
    Probability,
    /// Bin value is the mean tally per visit (right eigenfunction).
    Pointwise,
}

/// Regular grid over the domain bounding box times speed bins.
#[derive(Debug, Clone)]
pub struct HistogramSpec<F> {
    pub lower: Vec3<F>,
    pub upper: Vec3<F>,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub speed_lo: F,
    pub speed_hi: F,
    pub n_speed: usize,
}

impl<F: Scalar> HistogramSpec<F> {
    pub fn slab(lower: Vec3<F>, upper: Vec3<F>, speed_lo: F, speed_hi: F, nx: usize) -> Self {
        Self {
            lower,
            upper,
            nx,
            ny: 1,
            nz: 1,
            speed_lo,
            speed_hi,
            n_speed: 1,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.nx * self.ny * self.nz * self.n_speed
    }

    fn axis_bin(&self, x: F, lo: F, hi: F, n: usize) -> Option<usize> {
        if n == 1 {
            return Some(0);
        }
        if x < lo || x > hi {
            return None;
        }
        let f = ((x - lo) / (hi - lo)).to_f() * n as f64;
        Some((f as usize).min(n - 1))
    }

    pub fn bin_of(&self, p: &PhasePoint<F>) -> Option<usize> {
        let ix = self.axis_bin(p.r.x, self.lower.x, self.upper.x, self.nx)?;
        let iy = self.axis_bin(p.r.y, self.lower.y, self.upper.y, self.ny)?;
        let iz = self.axis_bin(p.r.z, self.lower.z, self.upper.z, self.nz)?;
        let is = self.axis_bin(p.speed(), self.speed_lo, self.speed_hi, self.n_speed)?;
        Some(((ix * self.ny + iy) * self.nz + iz) * self.n_speed + is)
    }

    /// Center of the spatial bin (x only; y/z/speed at grid midpoints).
    pub fn x_center(&self, ix: usize) -> F {
        let w = (self.upper.x - self.lower.x) / F::from_f(self.nx as f64);
        self.lower.x + w * (F::from_f(ix as f64) + F::from_f(0.5))
    }
}

/// Tally histogram with per-bin mean/variance accumulators.
#[derive(Debug, Clone)]
pub struct PhaseHistogram<F> {
    pub spec: HistogramSpec<F>,
    pub normalization: Normalization,
    sums: Vec<F>,
    sumsq: Vec<F>,
    counts: Vec<u64>,
}

impl<F: Scalar> PhaseHistogram<F> {
    pub fn new(spec: HistogramSpec<F>, normalization: Normalization) -> Self {
        let n = spec.n_bins();
        Self {
            spec,
            normalization,
            sums: vec![F::zero(); n],
            sumsq: vec![F::zero(); n],
            counts: vec![0; n],
        }
    }

    /// Histogram that evaluates to a constant everywhere.
    pub fn constant(spec: HistogramSpec<F>, value: F) -> Self {
        let mut h = Self::new(spec, Normalization::Pointwise);
        for b in 0..h.sums.len() {
            h.sums[b] = value;
            h.sumsq[b] = value * value;
            h.counts[b] = 1;
        }
        h
    }

    pub fn tally(&mut self, p: &PhasePoint<F>, w: F) {
        if let Some(b) = self.spec.bin_of(p) {
            self.sums[b] += w;
            self.sumsq[b] += w * w;
            self.counts[b] += 1;
        }
    }

    pub fn merge(&mut self, o: &Self) {
        for b in 0..self.sums.len() {
            self.sums[b] += o.sums[b];
            self.sumsq[b] += o.sumsq[b];
            self.counts[b] += o.counts[b];
        }
    }

    pub fn total(&self) -> F {
        self.sums.iter().copied().sum()
    }

    /// Normalised bin values per the histogram's normalization.
    pub fn values(&self) -> Vec<F> {
        match self.normalization {
            Normalization::Probability => {
                let t = self.total();
                if t <= F::zero() {
                    return vec![F::zero(); self.sums.len()];
                }
                self.sums.iter().map(|s| *s / t).collect()
            }
            Normalization::Pointwise => self
                .sums
                .iter()
                .zip(&self.counts)
                .map(|(s, c)| {
                    if *c == 0 {
                        F::zero()
                    } else {
                        *s / F::from_f(*c as f64)
                    }
                })
                .collect(),
        }
    }

    /// Per-bin variance of the tallies (pointwise histograms).
    pub fn variances(&self) -> Vec<F> {
        self.sums
            .iter()
            .zip(&self.sumsq)
            .zip(&self.counts)
            .map(|((s, sq), c)| {
                if *c < 2 {
                    return F::zero();
                }
                let n = F::from_f(*c as f64);
                let mean = *s / n;
                ((*sq / n) - mean * mean).max(F::zero()) * n / (n - F::one())
            })
            .collect()
    }

    pub fn value_at(&self, p: &PhasePoint<F>) -> F {
        match self.spec.bin_of(p) {
            Some(b) => self.values()[b],
            None => F::zero(),
        }
    }

    /// x-marginal of the normalised values (sums bins sharing an x index).
    pub fn x_marginal(&self) -> Vec<F> {
        let vals = self.values();
        let per_x = self.spec.ny * self.spec.nz * self.spec.n_speed;
        (0..self.spec.nx)
            .map(|ix| {
                (0..per_x)
                    .map(|k| vals[ix * per_x + k])
                    .sum()
            })
            .collect()
    }

    /// Delimited dump: per bin, the bin bounds, value and variance.
    pub fn write_delimited<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        let vals = self.values();
        let vars = self.variances();
        writeln!(out, "# x_lo\tx_hi\ty_lo\ty_hi\tz_lo\tz_hi\ts_lo\ts_hi\tvalue\tvariance")?;
        let s = &self.spec;
        let step = |lo: F, hi: F, n: usize, i: usize| -> (f64, f64) {
            let w = (hi - lo).to_f() / n as f64;
            (lo.to_f() + w * i as f64, lo.to_f() + w * (i + 1) as f64)
        };
        for ix in 0..s.nx {
            for iy in 0..s.ny {
                for iz in 0..s.nz {
                    for isp in 0..s.n_speed {
                        let b = ((ix * s.ny + iy) * s.nz + iz) * s.n_speed + isp;
                        let (xl, xh) = step(s.lower.x, s.upper.x, s.nx, ix);
                        let (yl, yh) = step(s.lower.y, s.upper.y, s.ny, iy);
                        let (zl, zh) = step(s.lower.z, s.upper.z, s.nz, iz);
                        let (sl, sh) = step(s.speed_lo, s.speed_hi, s.n_speed, isp);
                        writeln!(
                            out,
                            "{xl}\t{xh}\t{yl}\t{yh}\t{zl}\t{zh}\t{sl}\t{sh}\t{}\t{}",
                            vals[b].to_f(),
                            vars[b].to_f()
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}
