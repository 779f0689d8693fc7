//! Comparison protocols. Every round function returns the energy ledger, the
//! delay in slots (the final transmission to the sink is not counted) and the
//! list of in-network transfers in the order they are scheduled.

mod direct;
mod leach;
mod pegasis;

pub use direct::direct_round;
pub use leach::{leach_round, ClusterAssignment, LeachElection};
pub use pegasis::{
    build_chain, pegasis_cdma_round, pegasis_cdma_round_at, pegasis_tdma_round, pegasis_tdma_round_at, Chain,
};

use crate::radio::EnergyLedger;

/// One node-to-node packet. Transfers sharing a `channel` must use distinct
/// slots; transfers on different channels may overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRound {
    pub ledger: EnergyLedger,
    pub delay: u64,
    pub transfers: Vec<Transfer>,
}
