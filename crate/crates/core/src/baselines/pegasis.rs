//! Chain-based gathering: greedy chain construction plus the TDMA (sequential
//! chain sides) and CDMA (binary pairing) round variants.

use rand::Rng;

use super::{ProtocolRound, Transfer};
use crate::geometry::{NodeState, Point};
use crate::radio::{EnergyLedger, RadioParams};
use crate::rng;

/// Node ids in chain order. Built once; dead nodes are skipped at round time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub order: Vec<usize>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Chain restricted to alive nodes, keeping chain order.
    pub fn alive_order(&self, nodes: &[NodeState]) -> Vec<usize> {
        self.order.iter().copied().filter(|&u| nodes[u].alive).collect()
    }

    /// Distances between consecutive chain members.
    pub fn hop_lengths(&self, nodes: &[NodeState]) -> Vec<f64> {
        self.order.windows(2).map(|w| nodes[w[0]].position.distance(nodes[w[1]].position)).collect()
    }
}

/// Greedy chain over the alive nodes: start at the node farthest from the
/// sink, then repeatedly append the nearest node not yet in the chain.
/// Distance ties go to the lower id.
pub fn build_chain(nodes: &[NodeState], sink: Point) -> Chain {
    let mut remaining: Vec<usize> = (0..nodes.len()).filter(|&u| nodes[u].alive).collect();
    let mut order = Vec::with_capacity(remaining.len());
    let Some(start_idx) = remaining.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (i, &u)| {
        let d = nodes[u].position.distance(sink);
        match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((i, d)),
        }
    }) else {
        return Chain { order };
    };
    let mut current = remaining.remove(start_idx.0);
    order.push(current);
    while !remaining.is_empty() {
        let here = nodes[current].position;
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, &u)| (i, here.distance(nodes[u].position)))
            .fold((0, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
        current = remaining.remove(idx);
        order.push(current);
    }
    Chain { order }
}

fn pick_leader(alive: usize, leader_seed: u64) -> usize {
    rng::seeded(leader_seed).random_range(0..alive)
}

/// Applies the transfers to a ledger: each sender transmits once, each node
/// that received packets (and the leader) fuses them with its own reading,
/// and the leader forwards to the sink.
fn settle(
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
    transfers: &[Transfer],
    leader: usize,
) -> EnergyLedger {
    let mut ledger = EnergyLedger::new(nodes.len());
    let mut received = vec![0u64; nodes.len()];
    for t in transfers {
        ledger.transfer(params, t.from, t.to, nodes[t.from].position.distance(nodes[t.to].position));
        received[t.to] += 1;
    }
    for (u, &r) in received.iter().enumerate() {
        if r > 0 || u == leader {
            ledger.fuse(params, u, r + 1);
        }
    }
    ledger.to_sink(params, leader, nodes[leader].position.distance(sink));
    ledger
}

/// TDMA round with the leader at position `leader_pos` of the alive sub-chain.
///
/// Both sides pass a running aggregate toward the leader one hop per slot;
/// the two sides run in parallel, so the delay is the longer side.
pub fn pegasis_tdma_round_at(
    chain: &Chain,
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
    leader_pos: usize,
) -> ProtocolRound {
    let active = chain.alive_order(nodes);
    let m = active.len();
    if m == 0 {
        return ProtocolRound { ledger: EnergyLedger::new(nodes.len()), delay: 0, transfers: Vec::new() };
    }
    assert!(leader_pos < m, "leader position {leader_pos} outside alive chain of {m}");
    let mut transfers = Vec::with_capacity(m - 1);
    for i in 0..leader_pos {
        transfers.push(Transfer { from: active[i], to: active[i + 1], channel: 0 });
    }
    for i in (leader_pos + 1..m).rev() {
        transfers.push(Transfer { from: active[i], to: active[i - 1], channel: 1 });
    }
    let leader = active[leader_pos];
    let ledger = settle(nodes, sink, params, &transfers, leader);
    let delay = leader_pos.max(m - 1 - leader_pos) as u64;
    ProtocolRound { ledger, delay, transfers }
}

/// TDMA round with a leader drawn uniformly among alive chain members.
pub fn pegasis_tdma_round(
    chain: &Chain,
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
    leader_seed: u64,
) -> ProtocolRound {
    let m = chain.alive_order(nodes).len();
    let pos = if m == 0 { 0 } else { pick_leader(m, leader_seed) };
    pegasis_tdma_round_at(chain, nodes, sink, params, pos)
}

/// CDMA round with the leader at position `leader_pos` of the alive sub-chain.
///
/// At each level the surviving nodes are paired in chain order; in every pair
/// the leader (if present) or else the lower chain position receives, and an
/// odd node out rises unpaired. Pairs transmit in parallel under the
/// receivers' codes, one level per slot.
pub fn pegasis_cdma_round_at(
    chain: &Chain,
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
    leader_pos: usize,
) -> ProtocolRound {
    let active = chain.alive_order(nodes);
    let m = active.len();
    if m == 0 {
        return ProtocolRound { ledger: EnergyLedger::new(nodes.len()), delay: 0, transfers: Vec::new() };
    }
    assert!(leader_pos < m, "leader position {leader_pos} outside alive chain of {m}");
    let mut rising: Vec<usize> = (0..m).collect();
    let mut transfers = Vec::with_capacity(m - 1);
    let mut levels = 0u64;
    while rising.len() > 1 {
        levels += 1;
        let mut next = Vec::with_capacity(rising.len().div_ceil(2));
        for pair in rising.chunks(2) {
            match *pair {
                [solo] => next.push(solo),
                [a, b] => {
                    let (rx, tx) = if b == leader_pos { (b, a) } else { (a, b) };
                    // One code per receiving node.
                    transfers.push(Transfer { from: active[tx], to: active[rx], channel: active[rx] });
                    next.push(rx);
                }
                _ => unreachable!(),
            }
        }
        rising = next;
    }
    debug_assert_eq!(rising, [leader_pos]);
    let ledger = settle(nodes, sink, params, &transfers, active[leader_pos]);
    ProtocolRound { ledger, delay: levels, transfers }
}

/// CDMA round with a leader drawn uniformly among alive chain members.
pub fn pegasis_cdma_round(
    chain: &Chain,
    nodes: &[NodeState],
    sink: Point,
    params: &RadioParams,
    leader_seed: u64,
) -> ProtocolRound {
    let m = chain.alive_order(nodes).len();
    let pos = if m == 0 { 0 } else { pick_leader(m, leader_seed) };
    pegasis_cdma_round_at(chain, nodes, sink, params, pos)
}
