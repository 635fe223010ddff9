//! Moran model with recombination: partition lattice, type-space measures,
//! recombination and sampling operators, the forward population process,
//! its backward partitioning dual, and expectation engines.

pub mod backward;
pub mod error;
pub mod expectation;
pub mod forward;
pub mod generator;
pub mod measure;
pub mod partition;
pub mod recombination;
pub mod rng;

pub use error::{Error, Result};
pub use measure::{Measure, PopulationState, SiteSpace};
pub use partition::{mobius, Partition, SiteSet};
pub use recombination::{DiffusionRates, RecombinationDistribution};
pub use forward::{EventMode, ForwardModel, TrajectoryRecord};
pub use generator::GeneratorMatrix;
pub use backward::{BackwardModel, PartitionTrajectory, Variant};
