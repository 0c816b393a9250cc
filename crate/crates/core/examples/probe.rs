use nte_core::config::{build_problem, parse_document};
use nte_core::nbp::sample_uniform_source;
use nte_core::oracle::{assemble, tune_to_k, OracleParams, SlabConfig};
use nte_core::{
    collision_c_estimate, lambda_time_estimate, superhistory_k, power_iteration_k,
    HistogramSpec, PowerSettings, PhasePoint, Vec3,
};

fn main() {
    let text = std::fs::read_to_string("configs/slab.toml").unwrap();
    let raw = parse_document(&text).unwrap();
    let (problem, _) = build_problem::<f64>(&raw).unwrap();
    let slab = SlabConfig::from_problem(&problem).unwrap();
    let params = OracleParams { n_x: 200, n_mu: 16, ..Default::default() };

    // focus: the k=1.00 tuned config
    let (tslab, scale) = tune_to_k(&slab, &params, 1.0, 0.001).unwrap();
    let k200 = assemble(&tslab, &params).unwrap().power_iterate(1e-12, 200_000).unwrap().k;
    let hi = OracleParams { n_x: 400, n_mu: 32, ..Default::default() };
    let k400 = assemble(&tslab, &hi).unwrap().power_iterate(1e-12, 200_000).unwrap().k;
    println!("oracle k: n200/mu16 = {k200:.6}, n400/mu32 = {k400:.6}, shift = {:+.2e}", k400 - k200);

    let raw_t = raw.scale_yield(scale).unwrap();
    let (prob_t, _) = build_problem::<f64>(&raw_t).unwrap();
    let (lo, hic) = prob_t.domain.bounding_box();
    let start = PhasePoint::new((lo + hic) * 0.5, Vec3::new(1.0, 0.0, 0.0));

    for (t_max, hist) in [(25.0, 200_000), (50.0, 400_000), (100.0, 800_000)] {
        let lam = lambda_time_estimate(&prob_t, &start, t_max, hist, 2).unwrap();
        println!("lambda(t_max={t_max}, hist={hist}) = {:+.6} +- {:.6}", lam.value, lam.std_error);
    }

    let source = sample_uniform_source(&prob_t, 10_000, 42);
    for (ni, na) in [(20u32, 100u32), (150, 100), (300, 200)] {
        let settings = PowerSettings {
            population_target: 10_000, n_inactive: ni, n_active: na,
            population_cap: 10_000_000,
            hist: HistogramSpec::slab(lo, hic, 1.0, 1.0, 24),
        };
        let cout = collision_c_estimate(&prob_t, &source, &settings, 3).unwrap();
        println!("c(inactive={ni},active={na}) = {:.5} +- {:.5}", cout.estimate.value, cout.estimate.std_error);
    }

    // thick slab for the superhistory correlation contrast
    let thick = format!(r#"
n_max = 3

[domain]
shape = "box"
lower = [0.0, -300.0, -300.0]
upper = [20.0, 300.0, 300.0]

[velocity_set]
v_min = 1.0
v_max = 1.0

[[cells]]
lower = [0.0, -300.0, -300.0]
upper = [20.0, 300.0, 300.0]
sigma_s = 0.7
sigma_f = 0.3
scatter_kernel = {{ weights = [1.0] }}
fission_kernel = {{ weights = [{m}] }}
offspring = [{p0}, 0.0, {p2}]
"#, m = 1.08, p0 = 1.0 - 0.54, p2 = 0.54);
    let (prob_k, _) = build_problem::<f64>(&parse_document(&thick).unwrap()).unwrap();
    let (lo2, hi2) = prob_k.domain.bounding_box();
    let src = sample_uniform_source(&prob_k, 5_000, 7);
    let settings = PowerSettings {
        population_target: 5_000, n_inactive: 30, n_active: 200,
        population_cap: 10_000_000,
        hist: HistogramSpec::slab(lo2, hi2, 1.0, 1.0, 24),
    };
    let p = power_iteration_k(&prob_k, &src, &settings, 5).unwrap();
    let s = superhistory_k(&prob_k, &src, 10, &settings, 5).unwrap();
    println!("thick slab: power k = {:.4} lag1 = {:?}", p.cycle.estimate.value, p.cycle.estimate.lag1_autocorr);
    println!("            superhist k = {:.4} lag1 = {:?}", s.estimate.value, s.estimate.lag1_autocorr);
}
