//! Clustering with rotating, self-elected cluster heads.

use rand::Rng;

use super::{ProtocolRound, Transfer};
use crate::geometry::{NodeState, Point};
use crate::radio::{EnergyLedger, RadioParams};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// Sorted ascending, nonempty whenever some node is alive.
    pub heads: Vec<usize>,
    /// Head of each alive non-head node; `None` for heads and dead nodes.
    pub membership: Vec<Option<usize>>,
}

impl ClusterAssignment {
    pub fn members_of(&self, head: usize) -> impl Iterator<Item = usize> + '_ {
        self.membership.iter().enumerate().filter_map(move |(u, h)| (*h == Some(head)).then_some(u))
    }
}

/// Head-election state: which nodes already served in the current epoch of
/// `ceil(1 / p_head)` rounds.
#[derive(Debug, Clone)]
pub struct LeachElection {
    p_head: f64,
    epoch_len: u64,
    served_in_epoch: Vec<Option<u64>>,
}

impl LeachElection {
    pub fn new(p_head: f64, node_count: usize) -> Self {
        assert!(p_head > 0.0 && p_head <= 1.0, "head fraction must lie in (0, 1], got {p_head}");
        Self { p_head, epoch_len: (1.0 / p_head).ceil() as u64, served_in_epoch: vec![None; node_count] }
    }

    pub fn epoch_len(&self) -> u64 {
        self.epoch_len
    }

    /// Election probability for an eligible node in round `round_index`.
    pub fn threshold(&self, round_index: u64) -> f64 {
        let r = (round_index % self.epoch_len) as f64;
        (self.p_head / (1.0 - self.p_head * r)).min(1.0)
    }

    /// Elects heads for `round_index` (0-based) and assigns every other alive
    /// node to its nearest head.
    ///
    /// Eligible nodes draw in id order; the draw repeats until at least one
    /// head exists. If every alive node already served this epoch, all alive
    /// nodes are treated as eligible for this round.
    pub fn elect(&mut self, round_index: u64, nodes: &[NodeState], seed: u64) -> ClusterAssignment {
        let epoch = round_index / self.epoch_len;
        let alive: Vec<usize> = (0..nodes.len()).filter(|&u| nodes[u].alive).collect();
        let mut membership = vec![None; nodes.len()];
        if alive.is_empty() {
            return ClusterAssignment { heads: Vec::new(), membership };
        }
        let mut eligible: Vec<usize> =
            alive.iter().copied().filter(|&u| self.served_in_epoch[u] != Some(epoch)).collect();
        if eligible.is_empty() {
            eligible = alive.clone();
        }

        let threshold = self.threshold(round_index);
        let mut rng = rng::seeded(seed);
        let mut heads = Vec::new();
        while heads.is_empty() {
            heads.extend(eligible.iter().copied().filter(|_| rng.random::<f64>() < threshold));
        }
        for &h in &heads {
            self.served_in_epoch[h] = Some(epoch);
        }

        for &u in &alive {
            if heads.binary_search(&u).is_ok() {
                continue;
            }
            let here = nodes[u].position;
            let nearest = heads
                .iter()
                .map(|&h| (h, here.distance(nodes[h].position)))
                .fold((heads[0], f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
                .0;
            membership[u] = Some(nearest);
        }
        ClusterAssignment { heads, membership }
    }
}

/// Members send to their head; each head fuses its cluster and sends to the
/// sink. Clusters collect in parallel (one slot per member), then heads reach
/// the sink one after another.
pub fn leach_round(
    assignment: &ClusterAssignment,
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
) -> ProtocolRound {
    let mut ledger = EnergyLedger::new(nodes.len());
    let mut members = vec![0u64; nodes.len()];
    let mut transfers = Vec::new();
    for (u, head) in assignment.membership.iter().enumerate() {
        if let Some(h) = *head {
            ledger.transfer(params, u, h, nodes[u].position.distance(nodes[h].position));
            members[h] += 1;
            transfers.push(Transfer { from: u, to: h, channel: h });
        }
    }
    for &h in &assignment.heads {
        ledger.fuse(params, h, members[h] + 1);
        ledger.to_sink(params, h, nodes[h].position.distance(sink));
    }
    let widest = assignment.heads.iter().map(|&h| members[h]).max().unwrap_or(0);
    ProtocolRound { ledger, delay: widest + assignment.heads.len() as u64, transfers }
}
