//! Round loop, lifetime accounting and aggregation over trials.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    build_chain, direct_round, leach_round, pegasis_cdma_round, pegasis_tdma_round, Chain, LeachElection,
};
use crate::error::{Error, Result};
use crate::geometry::{build_graph, deploy, FieldConfig, NetworkSnapshot, NodeState};
use crate::radio::{tree_round_energy, EnergyLedger, RadioParams};
use crate::rng::{self, Stream};
use crate::tree::{compute_delay, construct_tree, GatherTree, TreeOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "emln")]
    Emln,
    #[serde(rename = "leach")]
    Leach,
    #[serde(rename = "pegasis-tdma")]
    PegasisTdma,
    #[serde(rename = "pegasis-cdma")]
    PegasisCdma,
    #[serde(rename = "direct")]
    Direct,
}

impl Protocol {
    pub const ALL: [Protocol; 5] =
        [Protocol::Emln, Protocol::Leach, Protocol::PegasisTdma, Protocol::PegasisCdma, Protocol::Direct];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Emln => "emln",
            Protocol::Leach => "leach",
            Protocol::PegasisTdma => "pegasis-tdma",
            Protocol::PegasisCdma => "pegasis-cdma",
            Protocol::Direct => "direct",
        }
    }

    /// Only the tree protocol builds a range-limited graph.
    pub fn uses_range(self) -> bool {
        self == Protocol::Emln
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown protocol `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    /// Stop at the first round in which some node cannot pay its debit.
    FirstDeath,
    /// Keep running with the survivors until no node (or no connected tree) is left.
    EnergyExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub field: FieldConfig,
    pub radio: RadioParams,
    pub protocol: Protocol,
    /// Graph range in meters for the tree protocol.
    pub range: f64,
    pub initial_energy: f64,
    pub max_rounds: u64,
    pub trials: usize,
    pub master_seed: u64,
    /// Rounds between tree rebuilds.
    pub rebuild_period: u64,
    pub stop_rule: StopRule,
    /// Desired cluster-head fraction for LEACH.
    pub leach_p: f64,
    /// Fixed topology used for every trial instead of random deployment.
    pub placement: Option<Vec<NodeState>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            field: FieldConfig::default(),
            radio: RadioParams::default(),
            protocol: Protocol::Emln,
            range: 25.0,
            initial_energy: 1.0,
            max_rounds: 100_000,
            trials: 1,
            master_seed: 0,
            rebuild_period: 1,
            stop_rule: StopRule::FirstDeath,
            leach_p: 0.05,
            placement: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.radio.validate()?;
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if self.max_rounds == 0 {
            return invalid("max rounds must be at least 1".into());
        }
        if self.rebuild_period == 0 {
            return invalid("rebuild period must be at least 1".into());
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return invalid(format!("range must be positive, got {}", self.range));
        }
        if !(self.initial_energy >= 0.0 && self.initial_energy.is_finite()) {
            return invalid(format!("initial energy must be >= 0, got {}", self.initial_energy));
        }
        if !(self.leach_p > 0.0 && self.leach_p <= 1.0) {
            return invalid(format!("LEACH head fraction must lie in (0, 1], got {}", self.leach_p));
        }
        if let Some(nodes) = &self.placement {
            if nodes.is_empty() {
                return invalid("placement has no nodes".into());
            }
        }
        Ok(())
    }

    pub fn with_protocol(&self, protocol: Protocol) -> Self {
        Self { protocol, ..self.clone() }
    }

    pub fn with_range(&self, range: f64) -> Self {
        Self { range, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShape {
    pub leaves: usize,
    pub intermediates: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// 1-based.
    pub round: u64,
    pub energy_lost: f64,
    pub delay: u64,
    pub energy_delay: f64,
    /// Alive nodes at the start of the round.
    pub alive: usize,
    /// Total residual energy after the round.
    pub residual: f64,
    pub tree: Option<TreeShape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trial_seed: u64,
    pub protocol: Protocol,
    /// False when the initial tree-protocol graph is disconnected; such a trial
    /// runs no rounds.
    pub connected: bool,
    /// Completed rounds before the first node failure.
    pub lifetime: u64,
    pub first_failure: Option<usize>,
    pub rounds: Vec<RoundMetrics>,
    pub initial_energy_total: f64,
    pub final_energy_total: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl SimulationReport {
    /// Rounds sustained before the first failure.
    pub fn completed(&self) -> &[RoundMetrics] {
        &self.rounds[..self.lifetime as usize]
    }

    pub fn mean_energy(&self) -> Option<f64> {
        mean(self.completed().iter().map(|r| r.energy_lost))
    }

    pub fn mean_delay(&self) -> Option<f64> {
        mean(self.completed().iter().map(|r| r.delay as f64))
    }

    pub fn mean_energy_delay(&self) -> Option<f64> {
        mean(self.completed().iter().map(|r| r.energy_delay))
    }

    pub fn mean_leaf_count(&self) -> Option<f64> {
        mean(self.completed().iter().filter_map(|r| r.tree.map(|t| t.leaves as f64)))
    }

    pub fn mean_leaf_fraction(&self) -> Option<f64> {
        mean(self.completed().iter().filter_map(|r| r.tree.map(|t| t.leaves as f64 / r.alive as f64)))
    }

    /// Intermediate-node fraction of the first tree.
    pub fn first_intermediate_fraction(&self) -> Option<f64> {
        let r = self.rounds.first()?;
        r.tree.map(|t| t.intermediates as f64 / r.alive as f64)
    }
}

/// Per-protocol state that lives across rounds of one trial.
enum Engine {
    Tree { graph: NetworkSnapshot, cached: Option<GatherTree>, range: f64 },
    Chain(Chain),
    Leach(LeachElection),
    Direct,
}

struct RoundResult {
    ledger: EnergyLedger,
    delay: u64,
    tree: Option<TreeShape>,
}

impl Engine {
    /// `None` when the tree protocol can no longer span the survivors.
    fn play(&mut self, cfg: &SimConfig, nodes: &[NodeState], seed: u64, round: u64) -> Result<Option<RoundResult>> {
        let sink = cfg.field.sink;
        let radio = &cfg.radio;
        let result = match self {
            Engine::Tree { graph, cached, range } => {
                let alive_changed = graph.nodes.iter().zip(nodes).any(|(a, b)| a.alive != b.alive);
                if alive_changed {
                    *graph = build_graph(nodes, *range);
                    *cached = None;
                }
                if cached.is_none() || (round - 1).is_multiple_of(cfg.rebuild_period) {
                    let energies: Vec<f64> = nodes.iter().map(|n| n.energy).collect();
                    let tie_seed = rng::stream_seed(seed, Stream::TreeTies, round);
                    *cached = match construct_tree(graph, &energies, tie_seed)? {
                        TreeOutcome::Tree(t) => Some(t),
                        TreeOutcome::Disconnected => return Ok(None),
                    };
                }
                let tree = cached.as_ref().expect("tree built above");
                RoundResult {
                    ledger: tree_round_energy(tree, nodes, sink, radio)?,
                    delay: compute_delay(tree),
                    tree: Some(TreeShape {
                        leaves: tree.leaf_set.len(),
                        intermediates: tree.intermediate_set.len(),
                        height: tree.height,
                    }),
                }
            }
            Engine::Chain(chain) => {
                let leader_seed = rng::stream_seed(seed, Stream::Leader, round);
                let r = if cfg.protocol == Protocol::PegasisTdma {
                    pegasis_tdma_round(chain, nodes, sink, radio, leader_seed)
                } else {
                    pegasis_cdma_round(chain, nodes, sink, radio, leader_seed)
                };
                RoundResult { ledger: r.ledger, delay: r.delay, tree: None }
            }
            Engine::Leach(election) => {
                let assignment = election.elect(round - 1, nodes, rng::stream_seed(seed, Stream::Election, round));
                let r = leach_round(&assignment, nodes, sink, radio);
                RoundResult { ledger: r.ledger, delay: r.delay, tree: None }
            }
            Engine::Direct => {
                let r = direct_round(nodes, sink, radio);
                RoundResult { ledger: r.ledger, delay: r.delay, tree: None }
            }
        };
        Ok(Some(result))
    }
}

/// Runs one trial: deploy, then play rounds until the stop rule or `max_rounds`.
///
/// A round is completed when every alive node can pay its debit. Under
/// [`StopRule::FirstDeath`] the failing round is not applied; under
/// [`StopRule::EnergyExhausted`] failing nodes are drained to zero, marked dead
/// and the simulation continues with the survivors.
pub fn run_trial(config: &SimConfig, trial_seed: u64) -> Result<SimulationReport> {
    config.validate()?;
    let mut nodes = match &config.placement {
        Some(fixed) => fixed.clone(),
        None => deploy(&config.field, config.initial_energy, trial_seed)?,
    };
    let initial_energy_total: f64 = nodes.iter().map(|n| n.energy).sum();
    let mut report = SimulationReport {
        trial_seed,
        protocol: config.protocol,
        connected: true,
        lifetime: 0,
        first_failure: None,
        rounds: Vec::new(),
        initial_energy_total,
        final_energy_total: initial_energy_total,
    };

    let mut engine = match config.protocol {
        Protocol::Emln => {
            let graph = build_graph(&nodes, config.range);
            if !graph.is_connected() {
                report.connected = false;
                return Ok(report);
            }
            Engine::Tree { graph, cached: None, range: config.range }
        }
        Protocol::PegasisTdma | Protocol::PegasisCdma => Engine::Chain(build_chain(&nodes, config.field.sink)),
        Protocol::Leach => Engine::Leach(LeachElection::new(config.leach_p, nodes.len())),
        Protocol::Direct => Engine::Direct,
    };

    let mut residual = initial_energy_total;
    for round in 1..=config.max_rounds {
        let alive = nodes.iter().filter(|n| n.alive).count();
        if alive == 0 {
            break;
        }
        let Some(played) = engine.play(config, &nodes, trial_seed, round)? else {
            break;
        };
        let failing: Vec<usize> =
            (0..nodes.len()).filter(|&u| nodes[u].alive && nodes[u].energy - played.ledger.debit(u) < 0.0).collect();
        if !failing.is_empty() && report.first_failure.is_none() {
            report.first_failure = Some(failing[0]);
            if config.stop_rule == StopRule::FirstDeath {
                break;
            }
        }

        let mut energy_lost = 0.0;
        for (u, node) in nodes.iter_mut().enumerate() {
            let debit = played.ledger.debit(u);
            if debit == 0.0 {
                continue;
            }
            let paid = debit.min(node.energy);
            node.energy -= paid;
            energy_lost += paid;
            if paid < debit {
                node.energy = 0.0;
                node.alive = false;
            }
        }
        residual -= energy_lost;
        if report.first_failure.is_none() {
            report.lifetime = round;
        }
        report.rounds.push(RoundMetrics {
            round,
            energy_lost,
            delay: played.delay,
            energy_delay: energy_lost * played.delay as f64,
            alive,
            residual,
            tree: played.tree,
        });
    }
    report.final_energy_total = nodes.iter().map(|n| n.energy).sum();
    Ok(report)
}

/// Condensed view of one trial used for aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub connected: bool,
    pub lifetime: u64,
    pub mean_energy: Option<f64>,
    pub mean_delay: Option<f64>,
    pub mean_energy_delay: Option<f64>,
    pub mean_leaf_fraction: Option<f64>,
    pub mean_leaf_count: Option<f64>,
    pub first_intermediate_fraction: Option<f64>,
}

impl TrialSummary {
    pub fn from_report(trial: usize, r: &SimulationReport) -> Self {
        Self {
            trial,
            connected: r.connected,
            lifetime: r.lifetime,
            mean_energy: r.mean_energy(),
            mean_delay: r.mean_delay(),
            mean_energy_delay: r.mean_energy_delay(),
            mean_leaf_fraction: r.mean_leaf_fraction(),
            mean_leaf_count: r.mean_leaf_count(),
            first_intermediate_fraction: r.first_intermediate_fraction(),
        }
    }
}

/// Aggregates of one experiment. Lifetime statistics cover connected trials;
/// per-round statistics cover connected trials with at least one completed
/// round. Statistics without samples are 0; standard deviations are
/// population deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub protocol: Protocol,
    pub range: Option<f64>,
    pub trials: usize,
    pub connected_trials: usize,
    pub connectivity: f64,
    pub mean_lifetime: f64,
    pub sd_lifetime: f64,
    pub mean_energy_per_round: f64,
    pub sd_energy_per_round: f64,
    pub mean_delay_per_round: f64,
    pub sd_delay_per_round: f64,
    pub mean_energy_delay: f64,
    pub sd_energy_delay: f64,
    pub mean_leaf_fraction: Option<f64>,
    pub mean_leaf_count: Option<f64>,
    pub mean_first_intermediate_fraction: Option<f64>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Order-insensitive: summaries are sorted by trial index before summing.
pub fn aggregate(config: &SimConfig, summaries: &[TrialSummary]) -> ExperimentSummary {
    let mut sorted: Vec<&TrialSummary> = summaries.iter().collect();
    sorted.sort_by_key(|s| s.trial);
    let connected: Vec<&TrialSummary> = sorted.iter().copied().filter(|s| s.connected).collect();
    let collect = |f: fn(&TrialSummary) -> Option<f64>| -> Vec<f64> { connected.iter().filter_map(|s| f(s)).collect() };

    let lifetimes: Vec<f64> = connected.iter().map(|s| s.lifetime as f64).collect();
    let (mean_lifetime, sd_lifetime) = mean_sd(&lifetimes);
    let (mean_energy, sd_energy) = mean_sd(&collect(|s| s.mean_energy));
    let (mean_delay, sd_delay) = mean_sd(&collect(|s| s.mean_delay));
    let (mean_ed, sd_ed) = mean_sd(&collect(|s| s.mean_energy_delay));
    let tree_stat = |f: fn(&TrialSummary) -> Option<f64>| config.protocol.uses_range().then(|| mean_sd(&collect(f)).0);

    ExperimentSummary {
        protocol: config.protocol,
        range: config.protocol.uses_range().then_some(config.range),
        trials: sorted.len(),
        connected_trials: connected.len(),
        connectivity: if sorted.is_empty() { 0.0 } else { connected.len() as f64 / sorted.len() as f64 },
        mean_lifetime,
        sd_lifetime,
        mean_energy_per_round: mean_energy,
        sd_energy_per_round: sd_energy,
        mean_delay_per_round: mean_delay,
        sd_delay_per_round: sd_delay,
        mean_energy_delay: mean_ed,
        sd_energy_delay: sd_ed,
        mean_leaf_fraction: tree_stat(|s| s.mean_leaf_fraction),
        mean_leaf_count: tree_stat(|s| s.mean_leaf_count),
        mean_first_intermediate_fraction: tree_stat(|s| s.first_intermediate_fraction),
    }
}

/// Runs every trial and keeps the full reports, in trial order.
pub fn run_trials(config: &SimConfig) -> Result<Vec<SimulationReport>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, rng::trial_seed(config.master_seed, t as u64)))
        .collect()
}

pub fn run_experiment(config: &SimConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let summaries = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let report = run_trial(config, rng::trial_seed(config.master_seed, t as u64))?;
            Ok(TrialSummary::from_report(t, &report))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config, &summaries))
}

/// One experiment per range with identical seeds.
pub fn range_sweep(config: &SimConfig, ranges: &[f64]) -> Result<Vec<ExperimentSummary>> {
    if ranges.is_empty() {
        return Err(Error::Usage("range sweep needs at least one range".into()));
    }
    ranges.iter().map(|&r| run_experiment(&config.with_range(r))).collect()
}

/// Every protocol on the same deployments.
pub fn compare_protocols(config: &SimConfig) -> Result<Vec<ExperimentSummary>> {
    Protocol::ALL.iter().map(|&p| run_experiment(&config.with_protocol(p))).collect()
}
