//! Two-level map equation for undirected weighted graphs: visit rates,
//! codelength, incremental move deltas, a multi-trial optimizer and an
//! exhaustive oracle for small graphs.
//!
//! Everything here is generic over the scalar type; see [`crate::Real`].

mod codelength;
mod exhaustive;
mod flow;
mod optimize;

pub use codelength::{
    codelength, compact_labels, partition_codelength, CodelengthBreakdown, ModuleStats, MoveState,
    Partition, Target,
};
pub use exhaustive::{brute_force_optimum, for_each_set_partition, MAX_EXHAUSTIVE_NODES};
pub use flow::{visit_rates, FlowDistribution, FlowGraph};
pub use optimize::{optimize, trial_seed, OptimizeConfig, Optimized};
