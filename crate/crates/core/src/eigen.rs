//! Eigenvalue and eigenfunction estimators on top of the census and walk
//! engines: power iteration and superhistory powering for k, the log-growth
//! estimator, the collision eigenvalue, the time eigenvalue, the
//! eigenfunction pairing matrix and the martingale diagnostic.

use rand::Rng;

use crate::error::SimError;
use crate::hist::{HistogramSpec, Normalization, PhaseHistogram};
use crate::nbp::{
    next_collision_generation, next_fission_generation, next_fission_generation_counted,
    CensusKind, GenerationCensus,
};
use crate::nrw::{group_chunks_into_batches, psi_n_profile_chunks, psi_t_profile_chunks};
use crate::parallel::par_chunk_fold;
use crate::phase::{PhasePoint, Problem};
use crate::rng::{tags, Streams};
use crate::scalar::Scalar;
use crate::stats::{batch_mean_se, lag1_autocorr, linear_fit, mean_and_se};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    CensusRatio,
    Superhistory,
    LogGrowth,
    Collision,
    TimeLambda,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::CensusRatio => "census-ratio",
            Method::Superhistory => "superhistory",
            Method::LogGrowth => "log-growth",
            Method::Collision => "collision",
            Method::TimeLambda => "time-lambda",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenEstimate<F> {
    pub value: F,
    pub std_error: F,
    /// Cycles (or generations/checkpoints) in the tallied window.
    pub n_active: u32,
    /// Discarded burn-in cycles.
    pub n_inactive: u32,
    pub method: Method,
    /// Lag-1 autocorrelation of the active cycle estimates, where defined.
    pub lag1_autocorr: Option<F>,
}

/// Shared settings of the census-ratio style estimators.
#[derive(Debug, Clone)]
pub struct PowerSettings<F> {
    pub population_target: usize,
    pub n_inactive: u32,
    pub n_active: u32,
    pub population_cap: usize,
    pub hist: HistogramSpec<F>,
}

/// Per-cycle output common to the iterative estimators.
#[derive(Debug, Clone)]
pub struct CycleEstimate<F> {
    pub estimate: EigenEstimate<F>,
    /// k-hat of every cycle, burn-in included (convergence diagnostics).
    pub cycle_trace: Vec<F>,
    pub extinct: bool,
}

#[derive(Debug, Clone)]
pub struct PowerIterationOutput<F> {
    pub cycle: CycleEstimate<F>,
    /// One-generation importance per bin (pointwise-normalised).
    pub phi: PhaseHistogram<F>,
    /// Stationary fission-source distribution (probability-normalised).
    pub eta: PhaseHistogram<F>,
    pub final_census: GenerationCensus<F>,
}

fn resample<F: Scalar, R: Rng + ?Sized>(
    census: &GenerationCensus<F>,
    target: usize,
    kind: CensusKind,
    generation_index: u32,
    rng: &mut R,
) -> GenerationCensus<F> {
    let n = census.len();
    let particles = (0..target)
        .map(|_| census.particles[rng.gen_range(0..n)])
        .collect();
    GenerationCensus {
        particles,
        generation_index,
        kind,
    }
}

fn finish_cycles<F: Scalar>(
    method: Method,
    trace: Vec<F>,
    n_inactive: u32,
    extinct: bool,
) -> CycleEstimate<F> {
    let active: Vec<F> = trace.iter().skip(n_inactive as usize).copied().collect();
    let (value, std_error, n_active, lag1) = if active.is_empty() {
        (F::zero(), F::zero(), 1, None)
    } else {
        let (v, se) = batch_mean_se(&active, 10);
        (v, se, active.len() as u32, Some(lag1_autocorr(&active)))
    };
    CycleEstimate {
        estimate: EigenEstimate {
            value,
            std_error,
            n_active,
            n_inactive,
            method,
            lag1_autocorr: lag1,
        },
        cycle_trace: trace,
        extinct,
    }
}

/// Monte Carlo power iteration on the fission-generation map. Per cycle,
/// k-hat = offspring produced / source size; the census is renormalised to
/// the population target by uniform resampling with replacement. Returns
/// the active-window mean with batch standard error plus the
/// one-generation-importance and stationary-source histograms.
pub fn power_iteration_k<F: Scalar>(
    problem: &Problem<F>,
    source: &GenerationCensus<F>,
    settings: &PowerSettings<F>,
    seed: u64,
) -> Result<PowerIterationOutput<F>, SimError> {
    let streams = Streams::new(seed);
    let mut phi = PhaseHistogram::new(settings.hist.clone(), Normalization::Pointwise);
    let mut eta = PhaseHistogram::new(settings.hist.clone(), Normalization::Probability);
    let total_cycles = settings.n_inactive + settings.n_active;
    let mut census = source.clone();
    let mut trace: Vec<F> = Vec::with_capacity(total_cycles as usize);
    let mut extinct = false;
    for cycle in 0..total_cycles {
        if census.is_empty() {
            extinct = true;
            break;
        }
        let (offspring, counts) = next_fission_generation_counted(
            problem,
            &census,
            &streams,
            cycle as u64,
            settings.population_cap,
        )?;
        let k_cycle = F::from_f(offspring.len() as f64) / F::from_f(census.len() as f64);
        trace.push(k_cycle);
        if cycle >= settings.n_inactive {
            for ((p, _), c) in census.particles.iter().zip(&counts) {
                phi.tally(p, F::from_f(*c as f64));
                eta.tally(p, F::one());
            }
        }
        if offspring.is_empty() {
            extinct = true;
            break;
        }
        let mut rng = streams.stream(tags::RESAMPLE, cycle as u64, 0);
        census = resample(
            &offspring,
            settings.population_target,
            CensusKind::FissionGeneration,
            offspring.generation_index,
            &mut rng,
        );
    }
    Ok(PowerIterationOutput {
        cycle: finish_cycles(Method::CensusRatio, trace, settings.n_inactive, extinct),
        phi,
        eta,
        final_census: census,
    })
}

/// Superhistory powering: each cycle advances `l` fission generations
/// without renormalisation, then k-hat = (gen-L offspring / source)^(1/L).
/// With l = 1 and the same seed this reproduces [`power_iteration_k`]'s
/// cycle estimates exactly.
pub fn superhistory_k<F: Scalar>(
    problem: &Problem<F>,
    source: &GenerationCensus<F>,
    l: u32,
    settings: &PowerSettings<F>,
    seed: u64,
) -> Result<CycleEstimate<F>, SimError> {
    assert!(l >= 1, "superhistory length must be >= 1");
    let streams = Streams::new(seed);
    let total_cycles = settings.n_inactive + settings.n_active;
    let mut census = source.clone();
    let mut trace: Vec<F> = Vec::with_capacity(total_cycles as usize);
    let mut extinct = false;
    'outer: for cycle in 0..total_cycles {
        if census.is_empty() {
            extinct = true;
            break;
        }
        let n0 = census.len();
        let mut current = census.clone();
        for j in 0..l {
            let epoch = cycle as u64 * l as u64 + j as u64;
            current = next_fission_generation(
                problem,
                &current,
                &streams,
                epoch,
                settings.population_cap,
            )?;
            if current.is_empty() {
                trace.push(F::zero());
                extinct = true;
                break 'outer;
            }
        }
        let ratio = F::from_f(current.len() as f64) / F::from_f(n0 as f64);
        trace.push(ratio.powf(F::one() / F::from_f(l as f64)));
        let mut rng = streams.stream(tags::RESAMPLE, cycle as u64, 0);
        census = resample(
            &current,
            settings.population_target,
            CensusKind::FissionGeneration,
            current.generation_index,
            &mut rng,
        );
    }
    Ok(finish_cycles(Method::Superhistory, trace, settings.n_inactive, extinct))
}

/// Collision-eigenvalue power iteration: per cycle, c-hat = population after
/// one collision generation / source size.
pub fn collision_c_estimate<F: Scalar>(
    problem: &Problem<F>,
    source: &GenerationCensus<F>,
    settings: &PowerSettings<F>,
    seed: u64,
) -> Result<CycleEstimate<F>, SimError> {
    let streams = Streams::new(seed);
    let total_cycles = settings.n_inactive + settings.n_active;
    let mut census = source.clone();
    let mut trace: Vec<F> = Vec::with_capacity(total_cycles as usize);
    let mut extinct = false;
    for cycle in 0..total_cycles {
        if census.is_empty() {
            extinct = true;
            break;
        }
        let offspring = next_collision_generation(
            problem,
            &census,
            &streams,
            cycle as u64,
            settings.population_cap,
        )?;
        trace.push(F::from_f(offspring.len() as f64) / F::from_f(census.len() as f64));
        if offspring.is_empty() {
            extinct = true;
            break;
        }
        let mut rng = streams.stream(tags::RESAMPLE, cycle as u64, 0);
        census = resample(
            &offspring,
            settings.population_target,
            CensusKind::CollisionGeneration,
            offspring.generation_index,
            &mut rng,
        );
    }
    Ok(finish_cycles(Method::Collision, trace, settings.n_inactive, extinct))
}

/// Log-growth estimator: fit log Psi_n[1](start) against n on the tail
/// window by least squares, k-hat = exp(slope) with delta-method error from
/// batch replicates.
pub fn log_growth_k<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    n_max: u32,
    histories: usize,
    seed: u64,
) -> Result<EigenEstimate<F>, SimError> {
    assert!(n_max >= 3, "log-growth needs n_max >= 3");
    let chunks = psi_n_profile_chunks(problem, start, n_max, &|_| F::one(), histories, seed)?;
    let batches = group_chunks_into_batches(&chunks, 16);
    let window_len = (n_max as usize / 2).max(2);
    let n_lo = n_max as usize + 1 - window_len;
    let xs: Vec<F> = (n_lo..=n_max as usize).map(|n| F::from_f(n as f64)).collect();
    let mut slopes = Vec::with_capacity(batches.len());
    for batch in &batches {
        let mut ys = Vec::with_capacity(window_len);
        for n in n_lo..=n_max as usize {
            let m = batch[n].mean();
            if !(m > F::zero()) {
                return Err(SimError::TailWindowEmpty);
            }
            ys.push(m.ln());
        }
        let (slope, _) = linear_fit(&xs, &ys);
        slopes.push(slope);
    }
    let (slope, se_slope) = mean_and_se(&slopes);
    let value = slope.exp();
    Ok(EigenEstimate {
        value,
        std_error: value * se_slope,
        n_active: window_len as u32,
        n_inactive: (n_max as usize + 1 - window_len) as u32,
        method: Method::LogGrowth,
        lag1_autocorr: None,
    })
}

/// Time-eigenvalue estimator: fit log psi_t[1](start) against t on the tail
/// half of a fixed checkpoint grid; lambda-hat is the slope.
pub fn lambda_time_estimate<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    t_max: F,
    histories: usize,
    seed: u64,
) -> Result<EigenEstimate<F>, SimError> {
    assert!(t_max > F::zero(), "t_max must be positive");
    const N_CHECKPOINTS: usize = 8;
    const WINDOW: usize = 4;
    let checkpoints: Vec<F> = (1..=N_CHECKPOINTS)
        .map(|j| t_max * F::from_f(j as f64 / N_CHECKPOINTS as f64))
        .collect();
    let chunks =
        psi_t_profile_chunks(problem, start, &checkpoints, &|_| F::one(), histories, seed)?;
    let batches = group_chunks_into_batches(&chunks, 16);
    let lo = N_CHECKPOINTS - WINDOW;
    let xs: Vec<F> = checkpoints[lo..].to_vec();
    let mut slopes = Vec::with_capacity(batches.len());
    for batch in &batches {
        let mut ys = Vec::with_capacity(WINDOW);
        for acc in &batch[lo..] {
            let m = acc.mean();
            if !(m > F::zero()) {
                return Err(SimError::TailWindowEmpty);
            }
            ys.push(m.ln());
        }
        let (slope, _) = linear_fit(&xs, &ys);
        slopes.push(slope);
    }
    let (value, std_error) = mean_and_se(&slopes);
    Ok(EigenEstimate {
        value,
        std_error,
        n_active: WINDOW as u32,
        n_inactive: (N_CHECKPOINTS - WINDOW) as u32,
        method: Method::TimeLambda,
        lag1_autocorr: None,
    })
}

/// Pairing-matrix estimates of <phi-tilde, g> * phi(start): per start point
/// and test function, the Cesaro sum (1/n) sum_m k^-m <X_m, g> averaged
/// over independent branching histories. Rows are proportional to
/// phi(start), columns to <phi-tilde, g>.
#[derive(Debug, Clone)]
pub struct PairingOutput<F> {
    /// [start][g]
    pub values: Vec<Vec<F>>,
    pub std_errors: Vec<Vec<F>>,
    /// [batch][start][g] — batch means for correlation-aware test statistics.
    pub batch_values: Vec<Vec<Vec<F>>>,
}

pub fn eigenfunction_pairing<F: Scalar>(
    problem: &Problem<F>,
    starts: &[PhasePoint<F>],
    gs: &[&(dyn Fn(&PhasePoint<F>) -> F + Sync)],
    k_est: F,
    n_max: u32,
    histories: usize,
    population_cap: usize,
    seed: u64,
) -> Result<PairingOutput<F>, SimError> {
    if !(k_est > F::zero()) {
        return Err(SimError::DegenerateK(k_est.to_f()));
    }
    if histories == 0 {
        return Err(SimError::NoHistories);
    }
    let streams = Streams::new(seed);
    let n_batches = 16usize;
    let inv_n = F::one() / F::from_f(n_max as f64);
    let mut values = Vec::with_capacity(starts.len());
    let mut std_errors = Vec::with_capacity(starts.len());
    let mut batch_values: Vec<Vec<Vec<F>>> = Vec::new();
    for (a, start) in starts.iter().enumerate() {
        let chunks = par_chunk_fold(
            histories,
            || (vec![crate::stats::Accum::<F>::default(); gs.len()], Ok(())),
            |(accs, status): &mut (Vec<crate::stats::Accum<F>>, Result<(), SimError>), h| {
                if status.is_err() {
                    return;
                }
                let mut sums = vec![F::zero(); gs.len()];
                let mut census = GenerationCensus::single(*start);
                let mut kpow = F::one();
                for m in 1..=n_max {
                    let epoch = ((a as u64) * (histories as u64) + h as u64)
                        * (n_max as u64 + 1)
                        + m as u64;
                    census = match next_fission_generation(
                        problem,
                        &census,
                        &streams,
                        epoch,
                        population_cap,
                    ) {
                        Ok(c) => c,
                        Err(e) => {
                            *status = Err(e);
                            return;
                        }
                    };
                    kpow = kpow / k_est;
                    if census.is_empty() {
                        break;
                    }
                    for (gi, g) in gs.iter().enumerate() {
                        sums[gi] += kpow * census.pair(*g);
                    }
                }
                for (acc, s) in accs.iter_mut().zip(&sums) {
                    acc.push(*s * inv_n);
                }
            },
        );
        for (_, status) in &chunks {
            if let Err(e) = status {
                return Err(e.clone());
            }
        }
        let chunk_accs: Vec<Vec<crate::stats::Accum<F>>> =
            chunks.into_iter().map(|(accs, _)| accs).collect();
        let batches = group_chunks_into_batches(&chunk_accs, n_batches);
        // overall mean/se from batch means
        let mut row_vals = Vec::with_capacity(gs.len());
        let mut row_ses = Vec::with_capacity(gs.len());
        for gi in 0..gs.len() {
            let bm: Vec<F> = batches.iter().map(|b| b[gi].mean()).collect();
            let (v, se) = mean_and_se(&bm);
            row_vals.push(v);
            row_ses.push(se);
        }
        values.push(row_vals);
        std_errors.push(row_ses);
        // batch matrices
        if batch_values.is_empty() {
            batch_values = vec![vec![Vec::new(); starts.len()]; batches.len()];
        }
        for (bi, b) in batches.iter().enumerate() {
            batch_values[bi][a] = b.iter().map(|acc| acc.mean()).collect();
        }
    }
    Ok(PairingOutput {
        values,
        std_errors,
        batch_values,
    })
}

/// Per-generation renormalised pairings W_n = k^-n <phi, X_n> / <phi, X_0>,
/// a nonnegative mean-one martingale when (k, phi) is the true eigenpair.
#[derive(Debug, Clone)]
pub struct MartingaleTrace<F> {
    /// [replicate][n]
    pub per_replicate: Vec<Vec<F>>,
    pub mean: Vec<F>,
    pub std_error: Vec<F>,
    pub k: F,
}

pub fn martingale_diagnostic<F: Scalar>(
    problem: &Problem<F>,
    source: &GenerationCensus<F>,
    k_est: F,
    phi: &PhaseHistogram<F>,
    n_max: u32,
    replicates: usize,
    population_cap: usize,
    seed: u64,
) -> Result<MartingaleTrace<F>, SimError> {
    if !(k_est > F::zero()) {
        return Err(SimError::DegenerateK(k_est.to_f()));
    }
    let streams = Streams::new(seed);
    let phi_fn = |p: &PhasePoint<F>| phi.value_at(p);
    let denom = source.pair(&phi_fn);
    if !(denom > F::zero()) {
        return Err(SimError::DegenerateK(denom.to_f()));
    }
    let rows: Vec<Result<Vec<F>, SimError>> = crate::parallel::par_indexed(replicates, |r| {
        let mut w = vec![F::zero(); n_max as usize + 1];
        w[0] = F::one();
        let mut census = source.clone();
        let mut kpow = F::one();
        for n in 1..=n_max {
            let epoch = (r as u64) * (n_max as u64 + 1) + n as u64;
            census = next_fission_generation(problem, &census, &streams, epoch, population_cap)?;
            kpow = kpow / k_est;
            if census.is_empty() {
                break;
            }
            w[n as usize] = kpow * census.pair(&phi_fn) / denom;
        }
        Ok(w)
    });
    let mut per_replicate = Vec::with_capacity(replicates);
    for r in rows {
        per_replicate.push(r?);
    }
    let mut mean = Vec::with_capacity(n_max as usize + 1);
    let mut std_error = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max as usize {
        let col: Vec<F> = per_replicate.iter().map(|row| row[n]).collect();
        let (m, se) = mean_and_se(&col);
        mean.push(m);
        std_error.push(se);
    }
    Ok(MartingaleTrace {
        per_replicate,
        mean,
        std_error,
        k: k_est,
    })
}
