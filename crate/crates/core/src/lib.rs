//! Monte Carlo neutron transport engine.
//!
//! Simulates the neutron branching process and its weighted single-walk
//! (many-to-one) reduction over a convex domain with cell-wise material
//! data, and estimates the k-effective eigenvalue, its right eigenfunction
//! and left eigenmeasure, plus the time-eigenvalue and collision-eigenvalue
//! cross-checks. A deterministic discrete-ordinates slab solver serves as
//! the validation oracle.
//!
//! The core is generic over the scalar type ([`scalar::Scalar`]); the
//! aliases below pin the production types to `f64`.

pub mod config;
pub mod error;
pub mod eigen;
pub mod geometry;
pub mod hist;
pub mod nbp;
pub mod nrw;
pub mod oracle;
pub mod parallel;
pub mod phase;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod transport;
pub mod vec3;

pub use config::{load_config, AssumptionReport, RawConfig};
pub use nbp::{
    next_collision_generation, next_fission_generation, simulate_time, CensusKind,
    GenerationCensus, DEFAULT_POPULATION_CAP,
};
pub use nrw::{
    nrw_scatter, psi_dagger_survival, psi_n_many_to_one, psi_t_many_to_one, run_to_generation,
    Estimate, NrwEvent, WalkState,
};
pub use eigen::{
    collision_c_estimate, eigenfunction_pairing, lambda_time_estimate, log_growth_k,
    martingale_diagnostic, power_iteration_k, superhistory_k, CycleEstimate, EigenEstimate,
    MartingaleTrace, Method, PairingOutput, PowerIterationOutput, PowerSettings,
};
pub use error::{ConfigError, OracleError, SimError};
pub use hist::{HistogramSpec, Normalization, PhaseHistogram};
pub use oracle::{
    assemble, gauss_legendre, power_iterate_dense, tune_to_k, DiscreteTransport, OracleEigen,
    OracleParams, SlabCell, SlabConfig,
};
pub use geometry::ConvexDomain;
pub use phase::{MaterialModel, OffspringLaw, PhasePoint, Problem, VelocityKernel, VelocitySet};
pub use rng::Streams;
pub use scalar::Scalar;
pub use transport::{advect_indicator, exit_time, sample_flight, FlightKind, FlightOutcome, RateField};
pub use vec3::Vec3;

/// Production scalar type.
pub type Real = f64;
pub type Point3 = Vec3<Real>;
pub type Phase = PhasePoint<Real>;
pub type Domain = ConvexDomain<Real>;
pub type Model = MaterialModel<Real>;
pub type ProblemF64 = Problem<Real>;
pub type Census = GenerationCensus<Real>;
