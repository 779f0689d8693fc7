//! Round-based data-gathering simulator for wireless sensor networks.
//!
//! Each round every sensor produces one packet; packets are aggregated inside
//! the network into a single packet of the same size that reaches a distant
//! sink. The main protocol builds an energy-aware maximal-leaf spanning tree
//! every round ([`tree`]); [`baselines`] provides LEACH, PEGASIS (TDMA and
//! CDMA) and direct transmission for comparison. [`sim`] runs trials until the
//! first node exhausts its battery and aggregates the results.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod output;
pub mod radio;
pub mod rng;
pub mod sim;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::{build_graph, deploy, is_connected, FieldConfig, NetworkSnapshot, NodeState, Point};
pub use radio::{tree_round_energy, EnergyLedger, RadioParams};
pub use sim::{
    compare_protocols, range_sweep, run_experiment, run_trial, run_trials, ExperimentSummary, Protocol, SimConfig,
    SimulationReport, StopRule,
};
pub use tree::{compute_delay, construct_tree, validate_tree, GatherTree, TreeOutcome};
