//! Direct simulation of the neutron branching process: time snapshots,
//! fission-generation censuses (stopping lines) and collision-generation
//! censuses.
//!
//! Censuses iterate breadth-first with a hard population cap; within a
//! generation the output order is (parent index, offspring index), and each
//! parent consumes its own counter-derived RNG stream, so runs are
//! reproducible for any worker count.

use rand::Rng;

use crate::error::SimError;
use crate::parallel::par_indexed;
use crate::phase::{PhasePoint, Problem};
use crate::rng::{tags, Streams};
use crate::scalar::Scalar;
use crate::transport::{sample_flight, sample_flight_capped, FlightKind, RateField};

/// Default hard cap on a census population.
pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusKind {
    FissionGeneration,
    CollisionGeneration,
    TimeSnapshot,
}

/// Weighted empirical measure: the particle configurations of one
/// generation (or one time snapshot). Direct simulation uses unit weights.
#[derive(Debug, Clone)]
pub struct GenerationCensus<F> {
    pub particles: Vec<(PhasePoint<F>, F)>,
    pub generation_index: u32,
    pub kind: CensusKind,
}

impl<F: Scalar> GenerationCensus<F> {
    pub fn single(p: PhasePoint<F>) -> Self {
        Self {
            particles: vec![(p, F::one())],
            generation_index: 0,
            kind: CensusKind::TimeSnapshot,
        }
    }

    pub fn from_points(points: Vec<PhasePoint<F>>) -> Self {
        Self {
            particles: points.into_iter().map(|p| (p, F::one())).collect(),
            generation_index: 0,
            kind: CensusKind::TimeSnapshot,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> F {
        self.particles.iter().map(|(_, w)| *w).sum()
    }

    /// Pair the census with a test function: sum of w * g(p).
    pub fn pair(&self, g: &dyn Fn(&PhasePoint<F>) -> F) -> F {
        self.particles.iter().map(|(p, w)| *w * g(p)).sum()
    }

    /// Delimited dump: generation, x, y, z, vx, vy, vz, weight per record.
    pub fn write_delimited<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (p, w) in &self.particles {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.generation_index,
                p.r.x.to_f(),
                p.r.y.to_f(),
                p.r.z.to_f(),
                p.v.x.to_f(),
                p.v.y.to_f(),
                p.v.z.to_f(),
                w.to_f()
            )?;
        }
        Ok(())
    }

    pub fn read_delimited(text: &str) -> Result<Self, String> {
        let mut particles = Vec::new();
        let mut generation = 0u32;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 8 {
                return Err(format!("line {}: expected 8 fields, got {}", ln + 1, fields.len()));
            }
            let parse = |s: &str| -> Result<f64, String> {
                s.parse::<f64>().map_err(|e| format!("line {}: {e}", ln + 1))
            };
            generation = fields[0]
                .parse::<u32>()
                .map_err(|e| format!("line {}: {e}", ln + 1))?;
            let r = crate::vec3::Vec3::new(
                F::from_f(parse(fields[1])?),
                F::from_f(parse(fields[2])?),
                F::from_f(parse(fields[3])?),
            );
            let v = crate::vec3::Vec3::new(
                F::from_f(parse(fields[4])?),
                F::from_f(parse(fields[5])?),
                F::from_f(parse(fields[6])?),
            );
            particles.push((PhasePoint::new(r, v), F::from_f(parse(fields[7])?)));
        }
        Ok(Self {
            particles,
            generation_index: generation,
            kind: CensusKind::TimeSnapshot,
        })
    }
}

/// Uniform initial source: positions uniform over D (rejection from the
/// bounding box), directions isotropic, speeds uniform over the velocity
/// set. Deterministic in (seed, i).
pub fn sample_uniform_source<F: Scalar>(
    problem: &Problem<F>,
    n: usize,
    seed: u64,
) -> GenerationCensus<F> {
    let streams = Streams::new(seed);
    let (lo, hi) = problem.domain.bounding_box();
    let vset = &problem.model.vset;
    let particles = par_indexed(n, |i| {
        let mut rng = streams.stream(tags::SOURCE, 0, i as u64);
        loop {
            let r = crate::vec3::Vec3::new(
                lo.x + (hi.x - lo.x) * F::unit_uniform(&mut rng),
                lo.y + (hi.y - lo.y) * F::unit_uniform(&mut rng),
                lo.z + (hi.z - lo.z) * F::unit_uniform(&mut rng),
            );
            if problem.domain.contains(r) {
                let speed = vset.v_min + (vset.v_max - vset.v_min) * F::unit_uniform(&mut rng);
                let v = crate::vec3::Vec3::isotropic(&mut rng) * speed;
                return (PhasePoint::new(r, v), F::one());
            }
        }
    });
    GenerationCensus {
        particles,
        generation_index: 0,
        kind: CensusKind::TimeSnapshot,
    }
}

fn branching_event<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    cell: usize,
    band: usize,
    rng: &mut R,
) -> BranchOutcome {
    let sf = problem.model.sigma_f(cell, band);
    let ss = problem.model.sigma_s(cell, band);
    let u = F::unit_uniform(rng);
    if u < ss / (ss + sf) {
        BranchOutcome::Scatter
    } else {
        BranchOutcome::Fission
    }
}

enum BranchOutcome {
    Scatter,
    Fission,
}

/// Walk one neutron (scatters preserved) to its first fission event and
/// emit the offspring. Leaked or captured lines contribute nothing.
fn first_fission_offspring<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    weight: F,
    rng: &mut R,
    out: &mut Vec<(PhasePoint<F>, F)>,
) -> Result<(), SimError> {
    let mut point = *start;
    loop {
        let flight = sample_flight(problem, &point, RateField::TotalCollision, rng)?;
        match flight.kind {
            FlightKind::ExitedDomain => return Ok(()),
            FlightKind::Event => {
                let (ci, bi) = flight.cell_band.expect("event carries its cell");
                match branching_event(problem, ci, bi, rng) {
                    BranchOutcome::Scatter => {
                        let v = problem.model.cells[ci].scatter[bi].sample_velocity(rng);
                        point = PhasePoint::new(flight.endpoint.r, v);
                    }
                    BranchOutcome::Fission => {
                        let cell = &problem.model.cells[ci];
                        let n = cell.offspring.sample(rng);
                        assert!(n <= problem.model.n_max, "offspring count exceeds N_max");
                        for _ in 0..n {
                            let v = cell.fission[bi].sample_velocity(rng);
                            out.push((PhasePoint::new(flight.endpoint.r, v), weight));
                        }
                        return Ok(());
                    }
                }
            }
            FlightKind::TimeCap => unreachable!("uncapped flight"),
        }
    }
}

fn next_generation_inner<F: Scalar>(
    problem: &Problem<F>,
    census: &GenerationCensus<F>,
    streams: &Streams,
    epoch: u64,
    cap: usize,
    collision: bool,
) -> Result<(GenerationCensus<F>, Vec<u32>), SimError> {
    if census.len() > cap {
        return Err(SimError::PopulationCap { cap });
    }
    let results: Vec<Result<Vec<(PhasePoint<F>, F)>, SimError>> =
        par_indexed(census.len(), |i| {
            let mut rng = streams.stream(tags::CENSUS, epoch, i as u64);
            let (p, w) = census.particles[i];
            let mut out = Vec::new();
            if collision {
                first_collision_products(problem, &p, w, &mut rng, &mut out)?;
            } else {
                first_fission_offspring(problem, &p, w, &mut rng, &mut out)?;
            }
            Ok(out)
        });
    let mut particles = Vec::new();
    let mut counts = Vec::with_capacity(census.len());
    for r in results {
        let kids = r?;
        counts.push(kids.len() as u32);
        particles.extend(kids);
        if particles.len() > cap {
            return Err(SimError::PopulationCap { cap });
        }
    }
    Ok((
        GenerationCensus {
            particles,
            generation_index: census.generation_index + 1,
            kind: if collision {
                CensusKind::CollisionGeneration
            } else {
                CensusKind::FissionGeneration
            },
        },
        counts,
    ))
}

/// Advance a census to the next fission generation (stopping line): each
/// particle runs to its first fission event and is replaced by that event's
/// offspring.
pub fn next_fission_generation<F: Scalar>(
    problem: &Problem<F>,
    census: &GenerationCensus<F>,
    streams: &Streams,
    epoch: u64,
    cap: usize,
) -> Result<GenerationCensus<F>, SimError> {
    next_generation_inner(problem, census, streams, epoch, cap, false).map(|(c, _)| c)
}

/// As [`next_fission_generation`], additionally returning the offspring
/// count per parent (used for importance tallies).
pub fn next_fission_generation_counted<F: Scalar>(
    problem: &Problem<F>,
    census: &GenerationCensus<F>,
    streams: &Streams,
    epoch: u64,
    cap: usize,
) -> Result<(GenerationCensus<F>, Vec<u32>), SimError> {
    next_generation_inner(problem, census, streams, epoch, cap, false)
}

/// One event of either type: a scatter contributes the single scattered
/// neutron, a fission its offspring.
fn first_collision_products<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    start: &PhasePoint<F>,
    weight: F,
    rng: &mut R,
    out: &mut Vec<(PhasePoint<F>, F)>,
) -> Result<(), SimError> {
    let flight = sample_flight(problem, start, RateField::TotalCollision, rng)?;
    match flight.kind {
        FlightKind::ExitedDomain => Ok(()),
        FlightKind::Event => {
            let (ci, bi) = flight.cell_band.expect("event carries its cell");
            match branching_event(problem, ci, bi, rng) {
                BranchOutcome::Scatter => {
                    let v = problem.model.cells[ci].scatter[bi].sample_velocity(rng);
                    out.push((PhasePoint::new(flight.endpoint.r, v), weight));
                    Ok(())
                }
                BranchOutcome::Fission => {
                    let cell = &problem.model.cells[ci];
                    let n = cell.offspring.sample(rng);
                    assert!(n <= problem.model.n_max, "offspring count exceeds N_max");
                    for _ in 0..n {
                        let v = cell.fission[bi].sample_velocity(rng);
                        out.push((PhasePoint::new(flight.endpoint.r, v), weight));
                    }
                    Ok(())
                }
            }
        }
        FlightKind::TimeCap => unreachable!("uncapped flight"),
    }
}

/// Advance a census to the next collision generation.
pub fn next_collision_generation<F: Scalar>(
    problem: &Problem<F>,
    census: &GenerationCensus<F>,
    streams: &Streams,
    epoch: u64,
    cap: usize,
) -> Result<GenerationCensus<F>, SimError> {
    next_generation_inner(problem, census, streams, epoch, cap, true).map(|(c, _)| c)
}

/// Evolve the full branching process for a time span `t` and return the
/// population snapshot. Fission offspring keep evolving within the span;
/// particles are removed at the boundary.
pub fn simulate_time<F: Scalar>(
    problem: &Problem<F>,
    initial: &GenerationCensus<F>,
    t: F,
    streams: &Streams,
    epoch: u64,
    cap: usize,
) -> Result<GenerationCensus<F>, SimError> {
    let results: Vec<Result<Vec<(PhasePoint<F>, F)>, SimError>> =
        par_indexed(initial.len(), |i| {
            let mut rng = streams.stream(tags::TIME, epoch, i as u64);
            let (p, w) = initial.particles[i];
            evolve_subtree(problem, &p, w, t, &mut rng, cap)
        });
    let mut particles = Vec::new();
    for r in results {
        particles.extend(r?);
        if particles.len() > cap {
            return Err(SimError::PopulationCap { cap });
        }
    }
    Ok(GenerationCensus {
        particles,
        generation_index: initial.generation_index,
        kind: CensusKind::TimeSnapshot,
    })
}

fn evolve_subtree<F: Scalar, R: Rng + ?Sized>(
    problem: &Problem<F>,
    root: &PhasePoint<F>,
    weight: F,
    t: F,
    rng: &mut R,
    cap: usize,
) -> Result<Vec<(PhasePoint<F>, F)>, SimError> {
    let mut out = Vec::new();
    let mut stack: Vec<(PhasePoint<F>, F)> = vec![(*root, t)];
    while let Some((mut point, mut remaining)) = stack.pop() {
        if out.len() + stack.len() > cap {
            return Err(SimError::PopulationCap { cap });
        }
        if remaining <= F::zero() {
            out.push((point, weight));
            continue;
        }
        loop {
            let flight =
                sample_flight_capped(problem, &point, RateField::TotalCollision, remaining, rng)?;
            match flight.kind {
                FlightKind::TimeCap => {
                    out.push((flight.endpoint, weight));
                    break;
                }
                FlightKind::ExitedDomain => break,
                FlightKind::Event => {
                    remaining -= flight.time;
                    let (ci, bi) = flight.cell_band.expect("event carries its cell");
                    match branching_event(problem, ci, bi, rng) {
                        BranchOutcome::Scatter => {
                            let v = problem.model.cells[ci].scatter[bi].sample_velocity(rng);
                            point = PhasePoint::new(flight.endpoint.r, v);
                        }
                        BranchOutcome::Fission => {
                            let cell = &problem.model.cells[ci];
                            let n = cell.offspring.sample(rng);
                            assert!(n <= problem.model.n_max, "offspring count exceeds N_max");
                            for _ in 0..n {
                                let v = cell.fission[bi].sample_velocity(rng);
                                stack.push((PhasePoint::new(flight.endpoint.r, v), remaining));
                            }
                            break;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
