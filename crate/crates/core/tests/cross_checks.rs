//! Cross-module identities: the branching process and the weighted walk
//! must see the same moments, the generation semigroup must compose, and
//! the collision/fission stopping lines must nest.

mod common;

use common::{center_start, hetero3, within_3sigma};
use nte_core::nbp::{next_fission_generation, sample_uniform_source, simulate_time};
use nte_core::nrw::{group_chunks_into_batches, psi_n_profile_chunks, psi_n_many_to_one, psi_t_many_to_one};
use nte_core::phase::PhasePoint;
use nte_core::rng::Streams;
use nte_core::stats::Accum;
use nte_core::transport::{sample_flight, FlightKind, RateField};
use nte_core::{GenerationCensus, Vec3};
use rand::Rng;

/// Mean generation sizes <1, X_n> from direct branching, per history.
fn census_count_profile(
    problem: &nte_core::Problem<f64>,
    start: &PhasePoint<f64>,
    g: &(dyn Fn(&PhasePoint<f64>) -> f64 + Sync),
    n_max: u32,
    histories: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let streams = Streams::new(seed);
    let chunks = nte_core::parallel::par_chunk_fold(
        histories,
        || vec![Accum::<f64>::default(); n_max as usize + 1],
        |accs, h| {
            let mut census = GenerationCensus::single(*start);
            accs[0].push(census.pair(g));
            for n in 1..=n_max {
                let epoch = (h as u64) * (n_max as u64 + 1) + n as u64;
                census = next_fission_generation(problem, &census, &streams, epoch, 1_000_000)
                    .expect("population stays under the cap");
                accs[n as usize].push(census.pair(g));
                if census.is_empty() {
                    for m in (n + 1)..=n_max {
                        accs[m as usize].push(0.0);
                    }
                    break;
                }
            }
        },
    );
    let mut out = Vec::new();
    for n in 0..=n_max as usize {
        let mut total = Accum::default();
        for c in &chunks {
            total.merge(&c[n]);
        }
        out.push((total.mean(), total.std_error()));
    }
    out
}

#[test]
fn generation_pairings_match_many_to_one_for_three_test_functions() {
    let (problem, _) = hetero3();
    let start = center_start(&problem);
    let histories = 200_000;
    let g_const = |_: &PhasePoint<f64>| 1.0;
    let g_coord = |p: &PhasePoint<f64>| p.r.x / 3.0;
    let g_region = |p: &PhasePoint<f64>| if p.r.x < 1.5 { 1.0 } else { 0.0 };
    let gs: [(&str, &(dyn Fn(&PhasePoint<f64>) -> f64 + Sync)); 3] = [
        ("constant", &g_const),
        ("coordinate", &g_coord),
        ("indicator", &g_region),
    ];
    for (idx, (name, g)) in gs.iter().enumerate() {
        let direct = census_count_profile(&problem, &start, *g, 3, histories, 100 + idx as u64);
        for n in 1..=3usize {
            let psi =
                psi_n_many_to_one(&problem, &start, n as u32, *g, histories, 200 + idx as u64)
                    .unwrap();
            let (d, d_se) = direct[n];
            assert!(
                within_3sigma(d, d_se, psi.value, psi.std_error),
                "{name} n={n}: census {d} +- {d_se} vs walk {} +- {}",
                psi.value,
                psi.std_error
            );
        }
    }
}

#[test]
fn generation_semigroup_composes_with_a_tabulated_inner_function() {
    // Psi_2[1](start) == Psi_1[g_hat](start) where g_hat is Psi_1[1]
    // tabulated on an (x, mu) grid. Slab symmetry makes (x, mu) sufficient.
    let (problem, _) = hetero3();
    let start = center_start(&problem);
    let nx = 32;
    let nmu = 16;
    let inner_histories = 20_000;
    let mut table = vec![0.0f64; nx * nmu];
    let mut max_inner_se = 0.0f64;
    for ix in 0..nx {
        for imu in 0..nmu {
            let x = 3.0 * (ix as f64 + 0.5) / nx as f64;
            let mu = -1.0 + 2.0 * (imu as f64 + 0.5) / nmu as f64;
            let s = (1.0 - mu * mu).sqrt();
            let p = PhasePoint::new(Vec3::new(x, 0.0, 0.0), Vec3::new(mu, s, 0.0));
            let est = psi_n_many_to_one(
                &problem,
                &p,
                1,
                &|_| 1.0,
                inner_histories,
                300 + (ix * nmu + imu) as u64,
            )
            .unwrap();
            table[ix * nmu + imu] = est.value;
            max_inner_se = max_inner_se.max(est.std_error);
        }
    }
    let g_hat = move |p: &PhasePoint<f64>| {
        let ix = ((p.r.x / 3.0 * nx as f64) as usize).min(nx - 1);
        let mu = p.v.x / p.speed();
        let imu = (((mu + 1.0) / 2.0 * nmu as f64) as usize).min(nmu - 1);
        table[ix * nmu + imu]
    };
    let outer_histories = 400_000;
    let lhs = psi_n_many_to_one(&problem, &start, 2, &|_| 1.0, outer_histories, 400).unwrap();
    let rhs = psi_n_many_to_one(&problem, &start, 1, &g_hat, outer_histories, 401).unwrap();
    // the inner-table noise enters the outer average damped; bound it by the
    // worst per-bin standard error
    let tol = 3.0 * (lhs.std_error.powi(2) + rhs.std_error.powi(2) + max_inner_se.powi(2)).sqrt();
    assert!(
        (lhs.value - rhs.value).abs() < tol,
        "Psi_2[1] = {} +- {} vs Psi_1[Psi_1[1]] = {} +- {} (tol {tol})",
        lhs.value,
        lhs.std_error,
        rhs.value,
        rhs.std_error
    );
}

#[test]
fn time_snapshot_population_matches_time_semigroup() {
    let (problem, _) = hetero3();
    let start = center_start(&problem);
    let t = 2.0;
    let runs = 100_000usize;
    let streams = Streams::new(500);
    let chunks = nte_core::parallel::par_chunk_fold(
        runs,
        || Accum::<f64>::default(),
        |acc, i| {
            let init = GenerationCensus::single(start);
            let out = simulate_time(&problem, &init, t, &streams, i as u64, 100_000).unwrap();
            acc.push(out.len() as f64);
        },
    );
    let mut total = Accum::default();
    for c in &chunks {
        total.merge(&c);
    }
    let psi = psi_t_many_to_one(&problem, &start, t, &|_| 1.0, runs, 501).unwrap();
    assert!(
        within_3sigma(total.mean(), total.std_error(), psi.value, psi.std_error),
        "<1, X_t> = {} +- {} vs psi_t[1] = {} +- {}",
        total.mean(),
        total.std_error(),
        psi.value,
        psi.std_error
    );
}

#[test]
fn log_growth_batches_see_positive_tails_on_the_reference_model() {
    // guards the tail-window plumbing the estimators rely on
    let (problem, _) = hetero3();
    let start = center_start(&problem);
    let chunks = psi_n_profile_chunks(&problem, &start, 4, &|_| 1.0, 64_000, 600).unwrap();
    let batches = group_chunks_into_batches(&chunks, 16);
    assert_eq!(batches.len(), 16);
    for b in &batches {
        for acc in b.iter().skip(1) {
            assert!(acc.mean() > 0.0);
        }
    }
}

/// Shared-event-log genealogy: simulate single lineages event by event and
/// check every first-generation fission child is born at exactly one
/// collision index.
#[test]
fn fission_generation_children_nest_in_collision_generations() {
    let (problem, _) = hetero3();
    let start = center_start(&problem);
    let streams = Streams::new(700);
    let mut found_fission = 0u32;
    for run in 0..2000u64 {
        let mut rng = streams.stream(1, run, 0);
        // event log of the root lineage: (collision index, was_fission,
        // offspring count)
        let mut point = start;
        let mut log: Vec<(u32, bool, u32)> = Vec::new();
        let mut collision = 0u32;
        loop {
            let flight = sample_flight(&problem, &point, RateField::TotalCollision, &mut rng)
                .expect("flight");
            match flight.kind {
                FlightKind::ExitedDomain => break,
                FlightKind::Event => {
                    collision += 1;
                    let (ci, bi) = flight.cell_band.unwrap();
                    let ss = problem.model.sigma_s(ci, bi);
                    let sf = problem.model.sigma_f(ci, bi);
                    let u: f64 = rng.gen();
                    if u < ss / (ss + sf) {
                        let v = problem.model.cells[ci].scatter[bi].sample_velocity(&mut rng);
                        log.push((collision, false, 1));
                        point = PhasePoint::new(flight.endpoint.r, v);
                    } else {
                        let n = problem.model.cells[ci].offspring.sample(&mut rng);
                        log.push((collision, true, n));
                        break;
                    }
                }
                FlightKind::TimeCap => unreachable!(),
            }
        }
        // stopping-line check: the lineage reaches at most one fission event,
        // and its children sit at exactly one collision index
        let fission_events: Vec<_> = log.iter().filter(|(_, f, _)| *f).collect();
        assert!(fission_events.len() <= 1);
        if let Some((j, _, n)) = fission_events.first() {
            found_fission += 1;
            assert!(*j >= 1);
            assert_eq!(
                log.iter().filter(|(jj, f, _)| jj == j && *f).count(),
                1,
                "children assigned to more than one collision generation"
            );
            assert!(*n <= 3);
        }
    }
    assert!(found_fission > 500, "model should produce fissions regularly");
}

#[test]
fn uniform_source_stays_inside_domain_and_velocity_set() {
    let (problem, _) = hetero3();
    let source = sample_uniform_source(&problem, 20_000, 800);
    for (p, w) in &source.particles {
        assert_eq!(*w, 1.0);
        assert!(problem.domain.contains(p.r));
        assert!((p.speed() - 1.0).abs() < 1e-12);
    }
}
