//! Stochastic multi-armed bandits with the kl-UCB++ policy.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the simulator and the command-line
//! tool use.

pub mod cli;
pub mod config;
pub mod error;
pub mod exp_family;
pub mod index;
pub mod policies;
pub mod report;
pub mod scalar;
pub mod simulator;
pub mod verification;

pub use error::{Error, Result};
pub use exp_family::FamilyKind;
pub use index::ExplorationSchedule;
pub use policies::{BanditPolicy, PolicyKind};
pub use scalar::Real;
pub use simulator::{ActionLog, Execution};

pub type Family = exp_family::Family<f64>;
pub type ArmDistribution = exp_family::ArmDistribution<f64>;
pub type FamilyBounds = exp_family::FamilyBounds<f64>;
pub type BanditModel = exp_family::BanditModel<f64>;
pub type PolicyState = policies::PolicyState<f64>;
pub type IndexPolicy = policies::IndexPolicy<f64>;
pub type RunTrace = simulator::RunTrace<f64>;
pub type AggregateStats = simulator::AggregateStats<f64>;
pub type ExperimentPlan = simulator::ExperimentPlan<f64>;
