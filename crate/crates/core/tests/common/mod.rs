//! Shared fixtures for the integration suites.

use nte_core::config::{build_problem, parse_document, RawConfig};
use nte_core::{PhasePoint, Problem, Vec3};

pub fn repo_config(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

pub fn load(text: &str) -> (Problem<f64>, RawConfig) {
    let raw = parse_document(text).expect("config parses");
    let (problem, _report) = build_problem::<f64>(&raw).expect("config validates");
    (problem, raw)
}

/// Heterogeneous 3-cell slab, 3 mean free paths thick, subcritical: the
/// workhorse for the two-representation identities.
pub fn hetero3() -> (Problem<f64>, RawConfig) {
    load(
        r#"
n_max = 3

[domain]
shape = "box"
lower = [0.0, -200.0, -200.0]
upper = [3.0, 200.0, 200.0]

[velocity_set]
v_min = 1.0
v_max = 1.0

[[cells]]
lower = [0.0, -200.0, -200.0]
upper = [1.0, 200.0, 200.0]
sigma_s = 0.9
sigma_f = 0.3
scatter_kernel = { weights = [1.0] }
fission_kernel = { weights = [1.9] }
offspring = [0.2, 0.1, 0.3, 0.4]

[[cells]]
lower = [1.0, -200.0, -200.0]
upper = [2.0, 200.0, 200.0]
sigma_s = 0.5
sigma_f = 0.6
scatter_kernel = { weights = [1.0] }
fission_kernel = { weights = [1.2] }
offspring = [0.3, 0.2, 0.5]

[[cells]]
lower = [2.0, -200.0, -200.0]
upper = [3.0, 200.0, 200.0]
sigma_s = 1.1
sigma_f = 0.2
scatter_kernel = { weights = [1.0] }
fission_kernel = { weights = [1.5] }
offspring = [0.2, 0.3, 0.3, 0.2]
"#,
    )
}

pub fn center_start(problem: &Problem<f64>) -> PhasePoint<f64> {
    let (lo, hi) = problem.domain.bounding_box();
    PhasePoint::new((lo + hi) * 0.5, Vec3::new(1.0, 0.0, 0.0))
}

/// |a - b| within 3 combined standard errors (plus a tiny float cushion).
pub fn within_3sigma(a: f64, se_a: f64, b: f64, se_b: f64) -> bool {
    (a - b).abs() <= 3.0 * (se_a * se_a + se_b * se_b).sqrt() + 1e-12
}
