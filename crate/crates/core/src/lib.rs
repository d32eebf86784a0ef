//! Placement of blockchain functions on mobile-edge servers.
//!
//! Devices hand the functions needed to add a block (transaction
//! generation, verification, block generation, mining, broadcasting, ...)
//! to a pool of edge servers. The crate models the resulting energy,
//! latency and mining rewards, solves the placement with a penalised
//! relaxation, evaluates a mining-only offloading baseline and checks the
//! closed-form probabilities by simulation.
//!
//! Everything is generic over the floating-point type; the aliases at the
//! crate root fix it to `f64`.

pub mod analytics;
pub mod baseline;
pub mod domain;
pub mod generate;
pub mod placement;
pub mod scalar;
pub mod validation;
pub mod workload;

pub use analytics::{evaluate, AnalyticsError, ConstraintViolation};
pub use baseline::{evaluate_baseline, evaluate_baseline_detailed, MiningPlacement};
pub use domain::{
    validate_instance, BlockchainFunctionKind, DemandKey, DeviceClass, ServerId, UserId,
    ValidationErrors, Violation,
};
pub use placement::{
    brute_force_solve, mm_solve, repair, solve_with_fallback, sweep_block_size, PlacementError,
    SolveStatus, Termination,
};
pub use scalar::Scalar;
pub use validation::{cross_check, McConfig, SimulationError};
pub use workload::{build_chain, ChainRole};

pub type Instance = domain::Instance<f64>;
pub type Server = domain::Server<f64>;
pub type Link = domain::Link<f64>;
pub type ServerGraph = domain::ServerGraph<f64>;
pub type UserDevice = domain::UserDevice<f64>;
pub type BlockchainParams = domain::BlockchainParams<f64>;
pub type CostTable = domain::CostTable<f64>;
pub type FunctionDemand = workload::FunctionDemand<f64>;
pub type FunctionChain = workload::FunctionChain<f64>;
pub type Placement = analytics::Placement<f64>;
pub type EvaluationReport = analytics::EvaluationReport<f64>;
pub type MmSettings = placement::MmSettings<f64>;
pub type MmSolution = placement::MmSolution<f64>;
pub type SolverTrace = placement::SolverTrace<f64>;
pub type LinearProgram = placement::LinearProgram<f64>;
pub type CrossCheckReport = validation::CrossCheckReport<f64>;
