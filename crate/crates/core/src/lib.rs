//! Neuro-evolved local search for pseudo-Boolean optimization.
//!
//! A small permutation-equivariant network scores every one-flip move of the
//! current solution; CMA-ES tunes its weights to maximize the best fitness
//! reached within a fixed move budget. The crate also provides the NK and
//! QUBO instance generators, the hill-climbing baselines, and the statistics
//! used to compare strategies on shared start points.

pub mod cmaes;
pub mod error;
pub mod evaluation;
pub mod instances;
pub mod observations;
pub mod policies;
pub mod provenance;
pub mod search;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
pub use instances::{Instance, InstanceSet, NkInstance, QuboInstance};
pub use observations::{ObservationKind, ObservationMatrix};
pub use policies::{NeuroLsPolicy, Policy, Strategy};
pub use search::{Landscape, Solution, TrajectoryRecord};
