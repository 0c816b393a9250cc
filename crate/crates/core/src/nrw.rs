//! The weighted neutron random walk and its many-to-one estimators.
//!
//! Two walks live here. The generational (spine) walk moves at the physical
//! event rate sigma_s + sigma_f; at an event a coin picks fission-type with
//! probability sigma_f / (sigma_s + sigma_f), the velocity is redrawn from
//! the normalised fission kernel and the weight is multiplied by m at the
//! incoming configuration. Averages of the weight products are unbiased for
//! the generation moments (the fission-type hazard along the walk is
//! sigma_f, which is what the mild generation equation integrates). The
//! time walk moves at rate alpha = sigma_s + sigma_f * m with the mixture
//! coin and carries the exponential of the accumulated beta integral, which
//! reproduces the time semigroup.

use rand::Rng;

use crate::error::SimError;
use crate::parallel::{par_chunk_fold, CHUNK};
use crate::phase::{PhasePoint, Problem};
use crate::rng::{tags, Streams};
use crate::scalar::Scalar;
use crate::stats::Accum;
use crate::transport::{sample_flight, sample_flight_capped, FlightKind, RateField};
use crate::vec3::Vec3;

/// Plain Monte Carlo estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<F> {
    pub value: F,
    pub std_error: F,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrwEvent {
    FissionType,
    ScatterType,
}

#[derive(Debug, Clone, Copy)]
pub struct WalkState<F> {
    pub point: PhasePoint<F>,
    /// log of the running product of m over fission-type events.
    pub log_weight: F,
    pub fission_count: u32,
    pub alive: bool,
    pub clock: F,
}

impl<F: Scalar> WalkState<F> {
    pub fn start(p: PhasePoint<F>) -> Self {
        Self {
            point: p,
            log_weight: F::zero(),
            fission_count: 0,
            alive: true,
            clock: F::zero(),
        }
    }

    pub fn weight(&self) -> F {
        self.log_weight.exp()
    }
}

/// Velocity update of the walk at an event point. Returns the new velocity
/// and which branch the coin picked.
pub fn nrw_scatter<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    p: &PhasePoint<F>,
    rng: &mut R,
) -> Result<(Vec3<F>, NrwEvent), SimError> {
    let (ci, bi) = problem.locate(p)?;
    scatter_at(problem, ci, bi, rng)
}

fn scatter_at<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    cell: usize,
    band: usize,
    rng: &mut R,
) -> Result<(Vec3<F>, NrwEvent), SimError> {
    let model = &problem.model;
    let alpha = model.alpha(cell, band);
    if !(alpha > F::zero()) {
        return Err(SimError::ZeroScatterRate);
    }
    let p_fission = model.sigma_f(cell, band) * model.yield_m(cell, band) / alpha;
    let u = F::unit_uniform(rng);
    if u < p_fission {
        let v = model.cells[cell].fission[band].sample_velocity(rng);
        Ok((v, NrwEvent::FissionType))
    } else {
        let v = model.cells[cell].scatter[band].sample_velocity(rng);
        Ok((v, NrwEvent::ScatterType))
    }
}

/// Event update of the generational spine walk: fission-type with the
/// physical probability sigma_f / (sigma_s + sigma_f).
fn spine_event<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    cell: usize,
    band: usize,
    rng: &mut R,
) -> Result<(Vec3<F>, NrwEvent), SimError> {
    let model = &problem.model;
    let total = model.sigma_s(cell, band) + model.sigma_f(cell, band);
    if !(total > F::zero()) {
        return Err(SimError::ZeroScatterRate);
    }
    let u = F::unit_uniform(rng);
    if u < model.sigma_f(cell, band) / total {
        let v = model.cells[cell].fission[band].sample_velocity(rng);
        Ok((v, NrwEvent::FissionType))
    } else {
        let v = model.cells[cell].scatter[band].sample_velocity(rng);
        Ok((v, NrwEvent::ScatterType))
    }
}

/// Evolve the spine walk until the n-th fission-type event, domain exit,
/// whichever comes first. The weight picks up m(r, v_in) at each
/// fission-type event.
pub fn run_to_generation<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    n: u32,
    rng: &mut R,
) -> Result<WalkState<F>, SimError> {
    let mut state = WalkState::start(*start);
    let log_nmax = F::from_f(problem.model.n_max as f64).ln();
    while state.alive && state.fission_count < n {
        let flight = sample_flight(problem, &state.point, RateField::TotalCollision, rng)?;
        state.clock += flight.time;
        match flight.kind {
            FlightKind::ExitedDomain => state.alive = false,
            FlightKind::Event => {
                let (ci, bi) = flight.cell_band.expect("event carries its cell");
                let (v, ev) = spine_event(problem, ci, bi, rng)?;
                if ev == NrwEvent::FissionType {
                    state.log_weight += problem.model.yield_m(ci, bi).ln();
                    state.fission_count += 1;
                    assert!(
                        state.log_weight
                            <= F::from_f(state.fission_count as f64) * log_nmax
                                + F::from_f(1e-9),
                        "weight bound violated: log w = {} after {} fission events",
                        state.log_weight,
                        state.fission_count
                    );
                }
                state.point = PhasePoint::new(flight.endpoint.r, v);
            }
            FlightKind::TimeCap => unreachable!("uncapped flight"),
        }
    }
    Ok(state)
}

/// Per-generation contributions of a single walk: `out[k]` is the
/// many-to-one sample of generation k (weight * g at the k-th fission-type
/// event, zero once the walk has left the domain).
fn walk_prefix_samples<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    n_max: u32,
    g: &(dyn Fn(&PhasePoint<F>) -> F + Sync),
    rng: &mut R,
    out: &mut [F],
) -> Result<(), SimError> {
    debug_assert_eq!(out.len(), n_max as usize + 1);
    for x in out.iter_mut() {
        *x = F::zero();
    }
    out[0] = g(start);
    let mut state = WalkState::start(*start);
    while state.alive && state.fission_count < n_max {
        let flight = sample_flight(problem, &state.point, RateField::TotalCollision, rng)?;
        state.clock += flight.time;
        match flight.kind {
            FlightKind::ExitedDomain => state.alive = false,
            FlightKind::Event => {
                let (ci, bi) = flight.cell_band.expect("event carries its cell");
                let (v, ev) = spine_event(problem, ci, bi, rng)?;
                state.point = PhasePoint::new(flight.endpoint.r, v);
                if ev == NrwEvent::FissionType {
                    state.log_weight += problem.model.yield_m(ci, bi).ln();
                    state.fission_count += 1;
                    out[state.fission_count as usize] = state.weight() * g(&state.point);
                }
            }
            FlightKind::TimeCap => unreachable!("uncapped flight"),
        }
    }
    Ok(())
}

/// Per-chunk accumulators of the generation profile (used for batched error
/// bars); chunk boundaries are fixed so results are worker-count invariant.
pub fn psi_n_profile_chunks<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    n_max: u32,
    g: &(dyn Fn(&PhasePoint<F>) -> F + Sync),
    histories: usize,
    seed: u64,
) -> Result<Vec<Vec<Accum<F>>>, SimError> {
    if histories == 0 {
        return Err(SimError::NoHistories);
    }
    let streams = Streams::new(seed);
    let chunks = par_chunk_fold(
        histories,
        || (vec![Accum::<F>::default(); n_max as usize + 1], Ok(())),
        |(accs, status): &mut (Vec<Accum<F>>, Result<(), SimError>), i| {
            if status.is_err() {
                return;
            }
            let mut rng = streams.stream(tags::NRW, 0, i as u64);
            let mut buf = vec![F::zero(); n_max as usize + 1];
            match walk_prefix_samples(problem, start, n_max, g, &mut rng, &mut buf) {
                Ok(()) => {
                    for (a, x) in accs.iter_mut().zip(&buf) {
                        a.push(*x);
                    }
                }
                Err(e) => *status = Err(e),
            }
        },
    );
    let mut out = Vec::with_capacity(chunks.len());
    for (accs, status) in chunks {
        status?;
        out.push(accs);
    }
    Ok(out)
}

/// Monte Carlo estimate of the n-th generation moment Psi_n[g](start):
/// average of (prod m) * g(end) * 1{n fission events before exit}.
pub fn psi_n_many_to_one<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    n: u32,
    g: &(dyn Fn(&PhasePoint<F>) -> F + Sync),
    histories: usize,
    seed: u64,
) -> Result<Estimate<F>, SimError> {
    let chunks = psi_n_profile_chunks(problem, start, n, g, histories, seed)?;
    let mut total = Accum::default();
    for c in &chunks {
        total.merge(&c[n as usize]);
    }
    Ok(Estimate {
        value: total.mean(),
        std_error: total.std_error(),
        n_samples: total.n,
    })
}

/// Survival frequency of the sub-Markov walk: at each fission-type event
/// the walk additionally survives with probability m / N_max. Estimates
/// P(n < killing time); equals N_max^{-n} Psi_n[1] in expectation.
pub fn psi_dagger_survival<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    n: u32,
    histories: usize,
    seed: u64,
) -> Result<Estimate<F>, SimError> {
    if histories == 0 {
        return Err(SimError::NoHistories);
    }
    let streams = Streams::new(seed);
    let n_max_f = F::from_f(problem.model.n_max as f64);
    let chunks = par_chunk_fold(
        histories,
        || (Accum::<F>::default(), Ok(())),
        |(acc, status): &mut (Accum<F>, Result<(), SimError>), i| {
            if status.is_err() {
                return;
            }
            let mut rng = streams.stream(tags::NRW, 2, i as u64);
            let mut state = WalkState::start(*start);
            let result = loop {
                if state.fission_count >= n {
                    break Ok(F::one());
                }
                let flight = match sample_flight(
                    problem,
                    &state.point,
                    RateField::TotalCollision,
                    &mut rng,
                ) {
                    Ok(f) => f,
                    Err(e) => break Err(e),
                };
                match flight.kind {
                    FlightKind::ExitedDomain => break Ok(F::zero()),
                    FlightKind::Event => {
                        let (ci, bi) = flight.cell_band.expect("event carries its cell");
                        match spine_event(problem, ci, bi, &mut rng) {
                            Ok((v, ev)) => {
                                if ev == NrwEvent::FissionType {
                                    let keep = problem.model.yield_m(ci, bi) / n_max_f;
                                    if F::unit_uniform(&mut rng) >= keep {
                                        break Ok(F::zero());
                                    }
                                    state.fission_count += 1;
                                }
                                state.point = PhasePoint::new(flight.endpoint.r, v);
                            }
                            Err(e) => break Err(e),
                        }
                    }
                    FlightKind::TimeCap => unreachable!("uncapped flight"),
                }
            };
            match result {
                Ok(x) => acc.push(x),
                Err(e) => *status = Err(e),
            }
        },
    );
    let mut total = Accum::default();
    for (acc, status) in chunks {
        status?;
        total.merge(&acc);
    }
    Ok(Estimate {
        value: total.mean(),
        std_error: total.std_error(),
        n_samples: total.n,
    })
}

/// Feynman-Kac samples of the time semigroup at the given checkpoints:
/// per history, exp(int_0^t beta) * g(R_t, V_t) * 1{alive at t}, recorded at
/// each checkpoint along a single walk. Returns per-chunk accumulators.
pub fn psi_t_profile_chunks<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    checkpoints: &[F],
    g: &(dyn Fn(&PhasePoint<F>) -> F + Sync),
    histories: usize,
    seed: u64,
) -> Result<Vec<Vec<Accum<F>>>, SimError> {
    if histories == 0 {
        return Err(SimError::NoHistories);
    }
    debug_assert!(checkpoints.windows(2).all(|w| w[1] >= w[0]));
    let streams = Streams::new(seed);
    let chunks = par_chunk_fold(
        histories,
        || (vec![Accum::<F>::default(); checkpoints.len()], Ok(())),
        |(accs, status): &mut (Vec<Accum<F>>, Result<(), SimError>), i| {
            if status.is_err() {
                return;
            }
            let mut rng = streams.stream(tags::NRW, 1, i as u64);
            let mut vals = vec![F::zero(); checkpoints.len()];
            match psi_t_single_walk(problem, start, checkpoints, g, &mut rng, &mut vals) {
                Ok(()) => {
                    for (a, x) in accs.iter_mut().zip(&vals) {
                        a.push(*x);
                    }
                }
                Err(e) => *status = Err(e),
            }
        },
    );
    let mut out = Vec::with_capacity(chunks.len());
    for (accs, status) in chunks {
        status?;
        out.push(accs);
    }
    Ok(out)
}

fn psi_t_single_walk<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    checkpoints: &[F],
    g: &(dyn Fn(&PhasePoint<F>) -> F + Sync),
    rng: &mut R,
    vals: &mut [F],
) -> Result<(), SimError> {
    let mut point = *start;
    let mut clock = F::zero();
    let mut beta_acc = F::zero();
    for (k, t) in checkpoints.iter().enumerate() {
        if *t <= clock {
            vals[k] = beta_acc.exp() * g(&point);
            continue;
        }
        loop {
            let remaining = *t - clock;
            let flight =
                sample_flight_capped(problem, &point, RateField::NrwAlpha, remaining, rng)?;
            beta_acc += flight.beta_integral;
            clock += flight.time;
            match flight.kind {
                FlightKind::TimeCap => {
                    point = flight.endpoint;
                    vals[k] = beta_acc.exp() * g(&point);
                    break;
                }
                FlightKind::ExitedDomain => {
                    // dead: this and all later checkpoints stay zero
                    return Ok(());
                }
                FlightKind::Event => {
                    let (ci, bi) = flight.cell_band.expect("event carries its cell");
                    let (v, _) = scatter_at(problem, ci, bi, rng)?;
                    point = PhasePoint::new(flight.endpoint.r, v);
                }
            }
        }
    }
    Ok(())
}

/// Monte Carlo estimate of the time semigroup psi_t[g](start).
pub fn psi_t_many_to_one<F: Scalar>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    t: F,
    g: &(dyn Fn(&PhasePoint<F>) -> F + Sync),
    histories: usize,
    seed: u64,
) -> Result<Estimate<F>, SimError> {
    let chunks = psi_t_profile_chunks(problem, start, &[t], g, histories, seed)?;
    let mut total = Accum::default();
    for c in &chunks {
        total.merge(&c[0]);
    }
    Ok(Estimate {
        value: total.mean(),
        std_error: total.std_error(),
        n_samples: total.n,
    })
}

/// Group per-chunk accumulators into `n_batches` contiguous batches.
pub fn group_chunks_into_batches<F: Scalar>(
    chunks: &[Vec<Accum<F>>],
    n_batches: usize,
) -> Vec<Vec<Accum<F>>> {
    let n_cols = chunks.first().map(|c| c.len()).unwrap_or(0);
    let n_batches = n_batches.clamp(1, chunks.len().max(1));
    let per = chunks.len().div_ceil(n_batches);
    let mut out = Vec::new();
    for b in 0..n_batches {
        let lo = b * per;
        if lo >= chunks.len() {
            break;
        }
        let hi = ((b + 1) * per).min(chunks.len());
        let mut accs = vec![Accum::<F>::default(); n_cols];
        for c in &chunks[lo..hi] {
            for (a, x) in accs.iter_mut().zip(c) {
                a.merge(x);
            }
        }
        out.push(accs);
    }
    out
}

/// Smallest history count that fills `n_batches` batches of whole chunks.
pub fn histories_for_batches(histories: usize, n_batches: usize) -> usize {
    histories.max(n_batches * CHUNK)
}
