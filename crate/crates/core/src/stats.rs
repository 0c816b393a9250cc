//! Small statistics helpers used by the estimators and their diagnostics.

use crate::scalar::Scalar;

/// Streaming sum / sum-of-squares accumulator.
#[derive(Debug, Clone, Copy)]
pub struct Accum<F> {
    pub sum: F,
    pub sumsq: F,
    pub n: u64,
}

impl<F: Scalar> Default for Accum<F> {
    fn default() -> Self {
        Self { sum: F::zero(), sumsq: F::zero(), n: 0 }
    }
}

impl<F: Scalar> Accum<F> {
    pub fn push(&mut self, x: F) {
        self.sum += x;
        self.sumsq += x * x;
        self.n += 1;
    }

    pub fn merge(&mut self, o: &Self) {
        self.sum += o.sum;
        self.sumsq += o.sumsq;
        self.n += o.n;
    }

    pub fn mean(&self) -> F {
        if self.n == 0 {
            F::zero()
        } else {
            self.sum / F::from_f(self.n as f64)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> F {
        if self.n < 2 {
            return F::zero();
        }
        let n = F::from_f(self.n as f64);
        let mean = self.sum / n;
        let var = ((self.sumsq / n) - mean * mean).max(F::zero()) * n / (n - F::one());
        (var / n).sqrt()
    }
}

pub fn mean_and_se<F: Scalar>(values: &[F]) -> (F, F) {
    let mut a = Accum::default();
    for v in values {
        a.push(*v);
    }
    (a.mean(), a.std_error())
}

/// Batch-means standard error: split into `n_batches` contiguous batches,
/// report mean and the standard error of the batch means.
pub fn batch_mean_se<F: Scalar>(values: &[F], n_batches: usize) -> (F, F) {
    let n = values.len();
    if n == 0 {
        return (F::zero(), F::zero());
    }
    let n_batches = n_batches.clamp(1, n);
    let per = n / n_batches;
    if per == 0 || n_batches < 2 {
        return mean_and_se(values);
    }
    let mut batches = Accum::default();
    for b in 0..n_batches {
        let lo = b * per;
        let hi = if b == n_batches - 1 { n } else { lo + per };
        let (m, _) = mean_and_se(&values[lo..hi]);
        batches.push(m);
    }
    (batches.mean(), batches.std_error())
}

/// Ordinary least squares fit y = intercept + slope * x.
pub fn linear_fit<F: Scalar>(xs: &[F], ys: &[F]) -> (F, F) {
    let n = F::from_f(xs.len() as f64);
    let mx = xs.iter().copied().sum::<F>() / n;
    let my = ys.iter().copied().sum::<F>() / n;
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    for (x, y) in xs.iter().zip(ys) {
        sxx += (*x - mx) * (*x - mx);
        sxy += (*x - mx) * (*y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn r_squared<F: Scalar>(xs: &[F], ys: &[F], slope: F, intercept: F) -> F {
    let n = F::from_f(xs.len() as f64);
    let my = ys.iter().copied().sum::<F>() / n;
    let mut ss_tot = F::zero();
    let mut ss_res = F::zero();
    for (x, y) in xs.iter().zip(ys) {
        let pred = intercept + slope * *x;
        ss_tot += (*y - my) * (*y - my);
        ss_res += (*y - pred) * (*y - pred);
    }
    if ss_tot <= F::zero() {
        return F::one();
    }
    F::one() - ss_res / ss_tot
}

/// Lag-1 autocorrelation of a sequence.
pub fn lag1_autocorr<F: Scalar>(v: &[F]) -> F {
    if v.len() < 3 {
        return F::zero();
    }
    let n = F::from_f(v.len() as f64);
    let mean = v.iter().copied().sum::<F>() / n;
    let mut num = F::zero();
    let mut den = F::zero();
    for i in 0..v.len() {
        let d = v[i] - mean;
        den += d * d;
        if i + 1 < v.len() {
            num += d * (v[i + 1] - mean);
        }
    }
    if den <= F::zero() {
        F::zero()
    } else {
        num / den
    }
}

pub fn cosine_similarity<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut dot = F::zero();
    let mut na = F::zero();
    let mut nb = F::zero();
    for (x, y) in a.iter().zip(b) {
        dot += *x * *y;
        na += *x * *x;
        nb += *y * *y;
    }
    dot / (na.sqrt() * nb.sqrt())
}
