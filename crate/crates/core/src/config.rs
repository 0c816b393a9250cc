//! Configuration ingestion and validation.
//!
//! The document is TOML with sections `domain`, `velocity_set`, `cells[]`,
//! `assumptions` and an optional `oracle` section. Unknown keys are
//! rejected. Loading either produces a validated [`Problem`] together with
//! a full (H1)-(H5) report, or fails with a violation naming the assumption
//! it breaks.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::ConvexDomain;
use crate::phase::{
    Cell, MaterialModel, OffspringLaw, Problem, VelocityKernel, VelocitySet, MASS_TOL,
};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n_max: u32,
    pub domain: RawDomain,
    pub velocity_set: RawVelocitySet,
    #[serde(default)]
    pub assumptions: RawAssumptions,
    pub cells: Vec<RawCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<RawOracle>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDomain {
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVelocitySet {
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default)]
    pub speed_bands: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAssumptions {
    #[serde(default)]
    pub strict_positivity: bool,
    #[serde(default)]
    pub assume_h3star: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCell {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub sigma_s: ScalarOrVec,
    pub sigma_f: ScalarOrVec,
    pub scatter_kernel: OneOrMany,
    pub fission_kernel: OneOrMany,
    /// Offspring pmf p_0..p_N.
    pub offspring: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn expand(&self, n_bands: usize, what: &str, cell: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            ScalarOrVec::Scalar(x) => Ok(vec![*x; n_bands]),
            ScalarOrVec::Vec(v) if v.len() == n_bands => Ok(v.clone()),
            ScalarOrVec::Vec(v) => Err(ConfigError::Violation(format!(
                "cell {cell}: {what} has {} entries but there are {n_bands} speed bands",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(RawKernel),
    Many(Vec<RawKernel>),
}

impl OneOrMany {
    fn expand(&self, n_bands: usize, what: &str, cell: usize) -> Result<Vec<RawKernel>, ConfigError> {
        match self {
            OneOrMany::One(k) => Ok(vec![k.clone(); n_bands]),
            OneOrMany::Many(ks) if ks.len() == n_bands => Ok(ks.clone()),
            OneOrMany::Many(ks) => Err(ConfigError::Violation(format!(
                "cell {cell}: {what} has {} kernels but there are {n_bands} speed bands",
                ks.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawKernel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_edges: Option<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

fn default_nx() -> usize {
    200
}
fn default_nmu() -> usize {
    16
}
fn default_tol() -> f64 {
    1e-3
}
fn default_sweep_tol() -> f64 {
    1e-10
}
fn default_power_tol() -> f64 {
    1e-12
}
fn default_max_power_iter() -> usize {
    100_000
}

/// Deterministic-oracle parameters, overridable from the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOracle {
    #[serde(default = "default_nx")]
    pub n_x: usize,
    #[serde(default = "default_nmu")]
    pub n_mu: usize,
    /// Tuning tolerance on k.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_sweep_tol")]
    pub sweep_tol: f64,
    #[serde(default = "default_power_tol")]
    pub power_tol: f64,
    #[serde(default = "default_max_power_iter")]
    pub max_power_iter: usize,
}

impl Default for RawOracle {
    fn default() -> Self {
        Self {
            n_x: default_nx(),
            n_mu: default_nmu(),
            tol: default_tol(),
            sweep_tol: default_sweep_tol(),
            power_tol: default_power_tol(),
            max_power_iter: default_max_power_iter(),
        }
    }
}

/// Which of (H1)-(H5) hold for a loaded model.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h3_star: bool,
    pub h4: bool,
    pub h5: bool,
    pub n_max: u32,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn holds(&self, name: &str) -> Option<bool> {
        match name {
            "h1" => Some(self.h1),
            "h2" => Some(self.h2),
            "h3" => Some(self.h3),
            "h3star" => Some(self.h3_star),
            "h4" => Some(self.h4),
            "h5" => Some(self.h5),
            _ => None,
        }
    }
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |b: bool| if b { "\u{2713}" } else { "\u{2717}" };
        write!(
            f,
            "H1 {} H2 {} H3 {} H3* {} H4 {} H5 {} (N_max={})",
            mark(self.h1),
            mark(self.h2),
            mark(self.h3),
            mark(self.h3_star),
            mark(self.h4),
            mark(self.h5),
            self.n_max
        )?;
        for n in &self.notes {
            write!(f, "\n  {n}")?;
        }
        Ok(())
    }
}

pub fn parse_document(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

impl RawConfig {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Scale the fission yield by `s`: fission-kernel masses and the
    /// positive part of every offspring pmf are multiplied by `s`, with the
    /// remainder moved to p_0. Leaves sigma_f and the flight dynamics alone.
    pub fn scale_yield(&self, s: f64) -> Result<RawConfig, ConfigError> {
        if s <= 0.0 {
            return Err(ConfigError::Violation(format!(
                "yield scale must be positive, got {s}"
            )));
        }
        let mut out = self.clone();
        for (i, cell) in out.cells.iter_mut().enumerate() {
            let tail: f64 = cell.offspring.iter().skip(1).sum();
            if s * tail > 1.0 + MASS_TOL {
                return Err(ConfigError::Violation(format!(
                    "cell {i}: yield scale {s} would need p_0 < 0"
                )));
            }
            for p in cell.offspring.iter_mut().skip(1) {
                *p *= s;
            }
            cell.offspring[0] = (1.0 - s * tail).max(0.0);
            let scale_kernel = |k: &mut RawKernel| {
                for w in &mut k.weights {
                    *w *= s;
                }
                if let Some(m) = &mut k.mass {
                    *m *= s;
                }
            };
            match &mut cell.fission_kernel {
                OneOrMany::One(k) => scale_kernel(k),
                OneOrMany::Many(ks) => ks.iter_mut().for_each(scale_kernel),
            }
        }
        Ok(out)
    }
}

fn clip_interval(lo: f64, hi: f64, dlo: f64, dhi: f64) -> (f64, f64) {
    (lo.max(dlo), hi.min(dhi))
}

struct KernelChecked<F> {
    kernel: VelocityKernel<F>,
}

fn build_kernel<F: Scalar>(
    raw: &RawKernel,
    vset: &VelocitySet<F>,
    cell: usize,
    what: &str,
    required_mass: Option<f64>,
) -> Result<KernelChecked<F>, ConfigError> {
    let v_min = vset.v_min.to_f();
    let v_max = vset.v_max.to_f();
    let edges: Vec<f64> = raw
        .speed_edges
        .clone()
        .unwrap_or_else(|| vec![v_min, v_max]);
    if edges.len() != raw.weights.len() + 1 {
        return Err(ConfigError::Violation(format!(
            "cell {cell}: {what} needs {} speed edges for {} weights",
            raw.weights.len() + 1,
            raw.weights.len()
        )));
    }
    for w in edges.windows(2) {
        if w[1] < w[0] {
            return Err(ConfigError::Violation(format!(
                "cell {cell}: {what} speed edges must be nondecreasing"
            )));
        }
    }
    if edges[0] < v_min - MASS_TOL || edges[edges.len() - 1] > v_max + MASS_TOL {
        return Err(ConfigError::Violation(format!(
            "cell {cell}: {what} speed support [{}, {}] leaves V = [{v_min}, {v_max}]",
            edges[0],
            edges[edges.len() - 1]
        )));
    }
    for w in &raw.weights {
        if !w.is_finite() || *w < 0.0 {
            return Err(ConfigError::Violation(format!(
                "H1: cell {cell}: {what} weights must be finite and nonnegative"
            )));
        }
    }
    let total: f64 = raw.weights.iter().sum();
    let declared = raw.mass.unwrap_or(match required_mass {
        Some(m) => m,
        None => total,
    });
    if total <= 0.0 && declared.abs() > MASS_TOL {
        return Err(ConfigError::Violation(format!(
            "cell {cell}: {what} has zero total weight but mass {declared}"
        )));
    }
    let kernel = VelocityKernel::new(
        edges.iter().map(|e| F::from_f(*e)).collect(),
        raw.weights.iter().map(|w| F::from_f(*w)).collect(),
        F::from_f(declared),
    );
    let integral = kernel.quadrature_mass().to_f();
    if (integral - declared).abs() > MASS_TOL {
        return Err(ConfigError::Violation(format!(
            "kernel mass mismatch: cell {cell} {what} declares {declared} but integrates to {integral}"
        )));
    }
    if let Some(m) = required_mass {
        if (declared - m).abs() > MASS_TOL {
            return Err(ConfigError::Violation(format!(
                "kernel mass mismatch: cell {cell} {what} must have mass {m}, got {declared}"
            )));
        }
    }
    Ok(KernelChecked { kernel })
}

/// Parse + validate a configuration document.
pub fn load_config<F: Scalar>(text: &str) -> Result<(Problem<F>, AssumptionReport), ConfigError> {
    let raw = parse_document(text)?;
    build_problem(&raw)
}

/// Validate a parsed document and build the typed model.
pub fn build_problem<F: Scalar>(
    raw: &RawConfig,
) -> Result<(Problem<F>, AssumptionReport), ConfigError> {
    // --- domain ---
    let domain: ConvexDomain<F> = match raw.domain.shape.as_str() {
        "box" => {
            let lower = raw.domain.lower.ok_or_else(|| {
                ConfigError::Violation("domain: box requires `lower`".into())
            })?;
            let upper = raw.domain.upper.ok_or_else(|| {
                ConfigError::Violation("domain: box requires `upper`".into())
            })?;
            ConvexDomain::Box {
                lower: Vec3::from_f64(lower),
                upper: Vec3::from_f64(upper),
            }
        }
        "sphere" => {
            let center = raw.domain.center.ok_or_else(|| {
                ConfigError::Violation("domain: sphere requires `center`".into())
            })?;
            let radius = raw.domain.radius.ok_or_else(|| {
                ConfigError::Violation("domain: sphere requires `radius`".into())
            })?;
            ConvexDomain::Sphere {
                center: Vec3::from_f64(center),
                radius: F::from_f(radius),
            }
        }
        other => {
            return Err(ConfigError::Violation(format!(
                "domain: unknown shape `{other}` (expected box or sphere)"
            )))
        }
    };
    if !domain.is_valid() {
        return Err(ConfigError::Violation(
            "domain: empty interior (check bounds/radius)".into(),
        ));
    }

    // --- velocity set ---
    let vs = &raw.velocity_set;
    if !(vs.v_min > 0.0) {
        return Err(ConfigError::Violation(format!(
            "velocity_set: v_min must be > 0 (advection transience), got {}",
            vs.v_min
        )));
    }
    if vs.v_max < vs.v_min {
        return Err(ConfigError::Violation(format!(
            "velocity_set: v_max {} < v_min {}",
            vs.v_max, vs.v_min
        )));
    }
    let mut breaks = vs.speed_bands.clone();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for b in &breaks {
        if *b <= vs.v_min || *b >= vs.v_max {
            return Err(ConfigError::Violation(format!(
                "velocity_set: speed band break {b} outside ({}, {})",
                vs.v_min, vs.v_max
            )));
        }
    }
    let vset: VelocitySet<F> = VelocitySet::new(
        F::from_f(vs.v_min),
        F::from_f(vs.v_max),
        &breaks.iter().map(|b| F::from_f(*b)).collect::<Vec<_>>(),
    );
    let n_bands = vset.n_bands();

    // --- H4 structure ---
    if raw.n_max < 1 {
        return Err(ConfigError::Violation(format!(
            "H4: N_max must be >= 1, got {}",
            raw.n_max
        )));
    }
    if raw.cells.is_empty() {
        return Err(ConfigError::Violation("cells: at least one cell required".into()));
    }

    // --- cells ---
    let (dlo, dhi) = domain.bounding_box();
    let mut cells: Vec<Cell<F>> = Vec::with_capacity(raw.cells.len());
    let mut clipped_volumes = Vec::with_capacity(raw.cells.len());
    for (i, rc) in raw.cells.iter().enumerate() {
        for a in 0..3 {
            if !(rc.lower[a] < rc.upper[a]) {
                return Err(ConfigError::Violation(format!(
                    "cell {i}: bounds must satisfy lower < upper on every axis"
                )));
            }
        }
        let sigma_s = rc.sigma_s.expand(n_bands, "sigma_s", i)?;
        let sigma_f = rc.sigma_f.expand(n_bands, "sigma_f", i)?;
        for s in sigma_s.iter().chain(sigma_f.iter()) {
            if !s.is_finite() || *s < 0.0 {
                return Err(ConfigError::Violation(format!(
                    "H1: cell {i}: cross sections must be finite and nonnegative"
                )));
            }
        }

        // offspring pmf
        let pmf = &rc.offspring;
        if pmf.is_empty() {
            return Err(ConfigError::Violation(format!("cell {i}: empty offspring pmf")));
        }
        for (j, p) in pmf.iter().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(ConfigError::Violation(format!(
                    "cell {i}: offspring p_{j} must be finite and nonnegative"
                )));
            }
            if j > raw.n_max as usize && *p > 0.0 {
                return Err(ConfigError::Violation(format!(
                    "H4: p_{j} > 0 but N_max = {}",
                    raw.n_max
                )));
            }
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(ConfigError::Violation(format!(
                "cell {i}: offspring pmf sums to {total}, expected 1"
            )));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(j, p)| j as f64 * p).sum();

        let scatter_raw = rc.scatter_kernel.expand(n_bands, "scatter_kernel", i)?;
        let fission_raw = rc.fission_kernel.expand(n_bands, "fission_kernel", i)?;
        let fissile = sigma_f.iter().any(|s| *s > 0.0);
        let mut scatter = Vec::with_capacity(n_bands);
        let mut fission = Vec::with_capacity(n_bands);
        for b in 0..n_bands {
            scatter.push(build_kernel::<F>(&scatter_raw[b], &vset, i, "scatter_kernel", Some(1.0))?.kernel);
            // fission kernel mass must equal the offspring mean (first-moment
            // consistency of the offspring point process)
            fission.push(build_kernel::<F>(&fission_raw[b], &vset, i, "fission_kernel", Some(mean))?.kernel);
        }
        if fissile && mean <= 0.0 {
            return Err(ConfigError::Violation(format!(
                "cell {i}: mean yield m = {mean} must be positive in a fissile cell"
            )));
        }
        if mean > raw.n_max as f64 + MASS_TOL {
            return Err(ConfigError::Violation(format!(
                "H4: cell {i}: mean yield m = {mean} exceeds N_max = {}",
                raw.n_max
            )));
        }

        // clip to the domain bounding box
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        let mut vol = 1.0;
        for a in 0..3 {
            let (l, h) = clip_interval(
                rc.lower[a],
                rc.upper[a],
                dlo.component(a).to_f(),
                dhi.component(a).to_f(),
            );
            lo[a] = l;
            hi[a] = h;
            vol *= (h - l).max(0.0);
        }
        clipped_volumes.push(vol);
        cells.push(Cell {
            lower: Vec3::from_f64(lo),
            upper: Vec3::from_f64(hi),
            sigma_s: sigma_s.iter().map(|x| F::from_f(*x)).collect(),
            sigma_f: sigma_f.iter().map(|x| F::from_f(*x)).collect(),
            scatter,
            fission,
            offspring: OffspringLaw::new(pmf.iter().map(|p| F::from_f(*p)).collect()),
        });
    }

    // --- partition of the bounding box: disjoint and covering ---
    let bbox_vol = {
        let d = dhi - dlo;
        (d.x * d.y * d.z).to_f()
    };
    let covered: f64 = clipped_volumes.iter().sum();
    if (covered - bbox_vol).abs() > MASS_TOL * bbox_vol.max(1.0) {
        return Err(ConfigError::Violation(format!(
            "cells do not partition the domain: covered volume {covered}, domain box volume {bbox_vol}"
        )));
    }
    for i in 0..cells.len() {
        for j in (i + 1)..cells.len() {
            let mut overlap = 1.0;
            for a in 0..3 {
                let lo = cells[i].lower.component(a).max(cells[j].lower.component(a)).to_f();
                let hi = cells[i].upper.component(a).min(cells[j].upper.component(a)).to_f();
                overlap *= (hi - lo).max(0.0);
            }
            if overlap > MASS_TOL * bbox_vol.max(1.0) {
                return Err(ConfigError::Violation(format!(
                    "cells {i} and {j} overlap (volume {overlap})"
                )));
            }
        }
    }

    // --- assumption report ---
    let mut notes = Vec::new();
    let h1 = true; // finiteness enforced structurally above
    let mut h2 = true;
    let mut h3_star = true;
    let mut h5 = true;
    let mut h3 = false;
    for (i, c) in cells.iter().enumerate() {
        let mut cell_fissile_everywhere = true;
        for b in 0..n_bands {
            let ss = c.sigma_s[b];
            let sf = c.sigma_f[b];
            let s_pos = ss > F::zero() && c.scatter[b].positive_everywhere(&vset);
            let f_pos = sf > F::zero() && c.fission[b].positive_everywhere(&vset);
            if !(s_pos && f_pos) {
                h5 = false;
            }
            if !f_pos {
                h3_star = false;
                cell_fissile_everywhere = false;
            }
            // H2: sigma_s pi_s + sigma_f pi_f > 0 pointwise in outgoing speed
            if !h2_holds(&vset, ss, &c.scatter[b], sf, &c.fission[b]) {
                h2 = false;
                notes.push(format!("H2 fails in cell {i} band {b}"));
            }
        }
        if cell_fissile_everywhere && clipped_volumes[i] > 0.0 {
            h3 = true;
        }
    }
    let h4 = true; // structural: pmf support bounded by N_max, checked above

    if raw.assumptions.strict_positivity && !h5 {
        return Err(ConfigError::Violation(
            "H5: strict positivity requested but sigma_s*pi_s or sigma_f*pi_f vanishes somewhere"
                .into(),
        ));
    }
    if raw.assumptions.assume_h3star && !h3_star {
        return Err(ConfigError::Violation(
            "H3*: fission cross section not bounded below".into(),
        ));
    }

    let report = AssumptionReport {
        h1,
        h2,
        h3,
        h3_star,
        h4,
        h5,
        n_max: raw.n_max,
        notes,
    };
    let model = MaterialModel {
        cells,
        n_max: raw.n_max,
        vset,
    };
    Ok((Problem { domain, model }, report))
}

/// sigma_s h_s(s) + sigma_f h_f(s) > 0 for every outgoing speed s in V.
fn h2_holds<F: Scalar>(
    vset: &VelocitySet<F>,
    sigma_s: F,
    scatter: &VelocityKernel<F>,
    sigma_f: F,
    fission: &VelocityKernel<F>,
) -> bool {
    // merge edges and test each sub-interval midpoint (densities are
    // piecewise constant, so midpoints decide)
    let mut edges: Vec<F> = scatter
        .edges
        .iter()
        .chain(fission.edges.iter())
        .copied()
        .collect();
    edges.push(vset.v_min);
    edges.push(vset.v_max);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() <= F::from_f(MASS_TOL));
    if edges.len() == 1 {
        // single-speed set: atoms carry the mass
        let s = edges[0];
        let d = sigma_s * atom_mass(scatter, s) + sigma_f * atom_mass(fission, s);
        return d > F::zero();
    }
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = (w[0] + w[1]) / F::from_f(2.0);
        let d = sigma_s * scatter.speed_density(mid) + sigma_f * fission.speed_density(mid);
        if !(d > F::zero()) {
            return false;
        }
    }
    true
}

fn atom_mass<F: Scalar>(k: &VelocityKernel<F>, s: F) -> F {
    let mut m = F::zero();
    for (b, w) in k.weights.iter().enumerate() {
        if k.edges[b + 1] <= k.edges[b] && (k.edges[b] - s).abs() <= F::from_f(MASS_TOL) {
            m += *w;
        }
    }
    m
}
