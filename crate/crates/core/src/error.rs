//! Error types shared across the crate.

use thiserror::Error;

/// Configuration ingestion failures. `Parse` maps to a usage error (exit 2
/// in the CLI), `Violation` to a physics/validation failure (exit 1).
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Violation(String),
}

/// Runtime failures of the stochastic engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("phase point outside the domain or material partition")]
    OutsideDomain,
    #[error("total scatter rate is zero at the event point (config violates H2)")]
    ZeroScatterRate,
    #[error("population exceeded the hard cap of {cap} particles (supercritical blow-up)")]
    PopulationCap { cap: usize },
    #[error("estimator called with zero histories")]
    NoHistories,
    #[error("tail window empty: all histories dead before the fit window")]
    TailWindowEmpty,
    #[error("degenerate eigenvalue estimate k = {0} (must be > 0)")]
    DegenerateK(f64),
}

/// Deterministic oracle failures.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("slab reduction: {0}")]
    SlabReduction(String),
    #[error("inner source iteration did not converge within {0} sweeps (scattering ratio >= 1?)")]
    InnerIteration(usize),
    #[error("power iteration exceeded {0} iterations")]
    MaxIterExceeded(usize),
    #[error("tuning target k = {target} unreachable within the scale bracket")]
    TargetUnreachable { target: f64 },
}
