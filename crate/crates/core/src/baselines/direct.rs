use super::ProtocolRound;
use crate::geometry::{NodeState, Point};
use crate::radio::{EnergyLedger, RadioParams};

/// Every alive node sends its own packet straight to the sink, one slot each.
pub fn direct_round(nodes: &[NodeState], sink: Point, params: &RadioParams) -> ProtocolRound {
    let mut ledger = EnergyLedger::new(nodes.len());
    let mut delay = 0;
    for (u, node) in nodes.iter().enumerate().filter(|(_, n)| n.alive) {
        ledger.to_sink(params, u, node.position.distance(sink));
        delay += 1;
    }
    ProtocolRound { ledger, delay, transfers: Vec::new() }
}
