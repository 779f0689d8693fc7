//! First-order radio model and per-round energy ledgers.
//!
//! Transmitting `k` bits over `d` meters costs `e_elec * k + eps_amp * k * d^2`,
//! receiving costs `e_elec * k`, and fusing `s` signals of `k` bits costs
//! `e_fuse * k * s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NodeState, Point};
use crate::tree::GatherTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Amplifier energy, J/bit/m^2.
    pub eps_amp: f64,
    /// Fusion energy, J/bit/signal.
    pub e_fuse: f64,
    pub packet_bits: u64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self { e_elec: 50e-9, eps_amp: 100e-12, e_fuse: 5e-9, packet_bits: 2000 }
    }
}

fn check_distance(distance: f64) -> Result<()> {
    if distance >= 0.0 && distance.is_finite() {
        Ok(())
    } else {
        Err(Error::Usage(format!("distance must be finite and >= 0, got {distance}")))
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [("e_elec", self.e_elec), ("eps_amp", self.eps_amp), ("e_fuse", self.e_fuse)];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.packet_bits == 0 {
            return Err(Error::InvalidConfig("packet size must be at least 1 bit".into()));
        }
        Ok(())
    }

    pub fn tx_energy(&self, bits: u64, distance: f64) -> Result<f64> {
        check_distance(distance)?;
        Ok(self.tx_unchecked(bits, distance))
    }

    pub fn rx_energy(&self, bits: u64) -> f64 {
        self.e_elec * bits as f64
    }

    pub fn fuse_energy(&self, bits: u64, signal_count: u64) -> f64 {
        self.e_fuse * bits as f64 * signal_count as f64
    }

    fn tx_unchecked(&self, bits: u64, distance: f64) -> f64 {
        let k = bits as f64;
        self.e_elec * k + self.eps_amp * k * distance * distance
    }

    /// Cost of sending one data packet over `distance` meters.
    pub fn packet_tx(&self, distance: f64) -> f64 {
        debug_assert!(distance >= 0.0);
        self.tx_unchecked(self.packet_bits, distance)
    }

    pub fn packet_rx(&self) -> f64 {
        self.rx_energy(self.packet_bits)
    }

    pub fn packet_fuse(&self, signal_count: u64) -> f64 {
        self.fuse_energy(self.packet_bits, signal_count)
    }
}

/// Energy charged to one node in one round, split by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Debit {
    pub tx: f64,
    pub rx: f64,
    pub fuse: f64,
}

impl Debit {
    pub fn total(&self) -> f64 {
        self.tx + self.rx + self.fuse
    }
}

/// Per-node debits for one round plus transmission counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub debits: Vec<Debit>,
    /// Node-to-node transmissions.
    pub in_network_tx: usize,
    /// Transmissions received by the sink.
    pub sink_tx: usize,
}

impl EnergyLedger {
    pub fn new(node_count: usize) -> Self {
        Self { debits: vec![Debit::default(); node_count], in_network_tx: 0, sink_tx: 0 }
    }

    /// Sum of all debits, accumulated in node-id order.
    pub fn total(&self) -> f64 {
        self.debits.iter().map(Debit::total).sum()
    }

    pub fn debit(&self, node: usize) -> f64 {
        self.debits[node].total()
    }

    /// `from` sends one packet to `to`; the receiver pays reception only.
    pub fn transfer(&mut self, params: &RadioParams, from: usize, to: usize, distance: f64) {
        self.debits[from].tx += params.packet_tx(distance);
        self.debits[to].rx += params.packet_rx();
        self.in_network_tx += 1;
    }

    pub fn to_sink(&mut self, params: &RadioParams, from: usize, distance: f64) {
        self.debits[from].tx += params.packet_tx(distance);
        self.sink_tx += 1;
    }

    /// Charges an aggregating node for fusing `signal_count` packets.
    pub fn fuse(&mut self, params: &RadioParams, node: usize, signal_count: u64) {
        self.debits[node].fuse += params.packet_fuse(signal_count);
    }
}

/// Debits of one round of aggregation along `tree`.
///
/// Leaves pay one transmission to their parent. Intermediate nodes with `c`
/// children pay `c` receptions, fusion of `c + 1` signals, and one
/// transmission to their parent; the root transmits to the sink.
pub fn tree_round_energy(
    tree: &GatherTree,
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
) -> Result<EnergyLedger> {
    let n = nodes.len();
    if tree.level.len() != n || tree.root >= n {
        return Err(Error::Usage(format!("tree spans {} node slots but {n} node states were given", tree.level.len())));
    }
    let mut ledger = EnergyLedger::new(n);
    for u in 0..n {
        if tree.level[u].is_none() {
            continue;
        }
        let kids = &tree.children[u];
        if !kids.is_empty() || u == tree.root {
            ledger.fuse(params, u, kids.len() as u64 + 1);
        }
        match tree.predecessor[u] {
            Some(p) => ledger.transfer(params, u, p, nodes[u].position.distance(nodes[p].position)),
            None => ledger.to_sink(params, u, nodes[u].position.distance(sink)),
        }
    }
    Ok(ledger)
}
