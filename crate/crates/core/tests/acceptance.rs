//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs the full 1000-trial experiments, so build it with
//! optimisations (the workspace test profile already does).

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use emln_dg::baselines::{build_chain, pegasis_cdma_round_at, pegasis_tdma_round_at, Transfer};
use emln_dg::rng::{seeded, trial_seed};
use emln_dg::sim::{aggregate, TrialSummary};
use emln_dg::{
    build_graph, compute_delay, construct_tree, deploy, run_trial, tree_round_energy, validate_tree, ExperimentSummary,
    FieldConfig, GatherTree, NetworkSnapshot, NodeState, Point, Protocol, RadioParams, SimConfig,
};

const TRIALS: usize = 1000;
const MASTER_SEED: u64 = 2024;
const CONSERVATION_TOL: f64 = 1e-9;

struct Check {
    pass: bool,
    text: String,
}

impl Check {
    fn new(pass: bool, text: impl Into<String>) -> Self {
        Self { pass, text: text.into() }
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

/// An experiment plus the worst energy-bookkeeping errors seen in it.
struct Run {
    summary: ExperimentSummary,
    worst_round_error: f64,
    worst_total_error_per_round: f64,
    rounds_checked: usize,
}

fn run(config: &SimConfig) -> Run {
    let mut summaries = Vec::with_capacity(config.trials);
    let mut worst_round_error: f64 = 0.0;
    let mut worst_total_error_per_round: f64 = 0.0;
    let mut rounds_checked = 0;
    for t in 0..config.trials {
        let report = run_trial(config, trial_seed(config.master_seed, t as u64)).expect("trial runs");
        let mut previous = report.initial_energy_total;
        let mut lost = 0.0;
        for r in &report.rounds {
            worst_round_error = worst_round_error.max((previous - r.residual - r.energy_lost).abs());
            previous = r.residual;
            lost += r.energy_lost;
        }
        if !report.rounds.is_empty() {
            let drift = (report.initial_energy_total - lost - report.final_energy_total).abs();
            worst_total_error_per_round = worst_total_error_per_round.max(drift / report.rounds.len() as f64);
        }
        rounds_checked += report.rounds.len();
        summaries.push(TrialSummary::from_report(t, &report));
    }
    Run { summary: aggregate(config, &summaries), worst_round_error, worst_total_error_per_round, rounds_checked }
}

fn defaults() -> SimConfig {
    SimConfig { trials: TRIALS, master_seed: MASTER_SEED, ..SimConfig::default() }
}

// ---------------------------------------------------------------------------
// 1, 2: geometry

fn connectivity() -> Check {
    let field = FieldConfig::default();
    let start = Instant::now();
    let fraction = |range: f64| {
        let connected = (0..TRIALS)
            .filter(|&t| {
                let nodes = deploy(&field, 1.0, trial_seed(MASTER_SEED, t as u64)).unwrap();
                build_graph(&nodes, range).is_connected()
            })
            .count();
        connected as f64 / TRIALS as f64
    };
    let at25 = fraction(25.0);
    let at35 = fraction(35.0);
    let elapsed = start.elapsed();
    Check::new(
        within(at25, 0.984, 1.0) && at35 >= 0.995 && elapsed < Duration::from_secs(10),
        format!(
            "connected fraction 25 m = {at25:.4} (want [0.984, 1.0]), 35 m = {at35:.4} (want >= 0.995), \
             {:.2} s (want < 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn mean_degree() -> Check {
    let field = FieldConfig::default();
    let total: f64 = (0..TRIALS)
        .map(|t| {
            let nodes = deploy(&field, 1.0, trial_seed(MASTER_SEED, t as u64)).unwrap();
            build_graph(&nodes, 25.0).mean_degree()
        })
        .sum();
    let mean = total / TRIALS as f64;
    Check::new((mean - 19.6).abs() <= 1.0, format!("mean degree at 25 m = {mean:.3} (want 19.6 +- 1.0)"))
}

// ---------------------------------------------------------------------------
// 3-5: EMLN against range

fn intermediate_fraction(by_range: &[(f64, Run)]) -> Check {
    let limits = [(15.0, 0.35), (25.0, 0.15), (50.0, 0.04)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (range, limit) in limits {
        let frac = summary_at(by_range, range).mean_first_intermediate_fraction.unwrap_or(f64::NAN);
        pass &= frac < limit;
        parts.push(format!("{range} m = {:.2}% (want < {:.0}%)", frac * 100.0, limit * 100.0));
    }
    Check::new(pass, format!("round-1 intermediate fraction {}", parts.join(", ")))
}

fn energy_growth(by_range: &[(f64, Run)]) -> Check {
    let base = summary_at(by_range, 15.0).mean_energy_per_round;
    let r30 = summary_at(by_range, 30.0).mean_energy_per_round / base;
    let r45 = summary_at(by_range, 45.0).mean_energy_per_round / base;
    Check::new(
        r30 <= 1.28 && r45 <= 1.60,
        format!("energy/round vs 15 m: 30 m = {r30:.3}x (want <= 1.28), 45 m = {r45:.3}x (want <= 1.60)"),
    )
}

fn lifetime_vs_range(by_range: &[(f64, Run)]) -> Check {
    let base = summary_at(by_range, 25.0).mean_lifetime;
    let r35 = summary_at(by_range, 35.0).mean_lifetime / base;
    let r50 = summary_at(by_range, 50.0).mean_lifetime / base;
    Check::new(
        within(r35, 0.80, 0.95) && within(r50, 0.55, 0.75),
        format!("lifetime vs 25 m: 35 m = {r35:.3}x (want [0.80, 0.95]), 50 m = {r50:.3}x (want [0.55, 0.75])"),
    )
}

fn summary_at(by_range: &[(f64, Run)], range: f64) -> &ExperimentSummary {
    &by_range.iter().find(|(r, _)| *r == range).expect("range was run").1.summary
}

// ---------------------------------------------------------------------------
// 6-9: protocol comparison

struct Compared<'a> {
    emln: &'a ExperimentSummary,
    leach: &'a ExperimentSummary,
    tdma: &'a ExperimentSummary,
    cdma: &'a ExperimentSummary,
    direct: &'a ExperimentSummary,
}

fn energy_ordering(c: &Compared) -> Check {
    let e = |s: &ExperimentSummary| s.mean_energy_per_round;
    let ordered = e(c.tdma) < e(c.emln) && e(c.emln) < e(c.cdma) && e(c.cdma) < e(c.leach);
    let vs_leach = e(c.emln) / e(c.leach);
    let vs_tdma = e(c.emln) / e(c.tdma);
    let vs_cdma = e(c.emln) / e(c.cdma);
    Check::new(
        ordered && within(vs_leach, 0.25, 0.55) && within(vs_tdma, 1.0, 1.25) && within(vs_cdma, 0.80, 1.0),
        format!(
            "J/round tdma {:.5} < emln {:.5} < cdma {:.5} < leach {:.5}: {ordered}; \
             emln/leach = {vs_leach:.3} (want [0.25, 0.55]), emln/tdma = {vs_tdma:.3} (want [1.0, 1.25]), \
             emln/cdma = {vs_cdma:.3} (want [0.80, 1.0])",
            e(c.tdma),
            e(c.emln),
            e(c.cdma),
            e(c.leach)
        ),
    )
}

fn lifetime_ordering(c: &Compared) -> Check {
    let l = |s: &ExperimentSummary| s.mean_lifetime;
    let ordered =
        l(c.emln) > l(c.tdma).max(l(c.cdma)) && l(c.tdma).min(l(c.cdma)) > l(c.direct) && l(c.emln) > l(c.leach);
    let vs_leach = l(c.emln) / l(c.leach);
    let vs_tdma = l(c.emln) / l(c.tdma);
    let vs_cdma = l(c.emln) / l(c.cdma);
    let direct_ok = l(c.direct) < l(c.emln) / 20.0;
    Check::new(
        ordered && within(vs_leach, 2.3, 4.5) && within(vs_tdma, 1.7, 3.0) && within(vs_cdma, 1.7, 3.0) && direct_ok,
        format!(
            "rounds emln {:.1}, leach {:.1}, tdma {:.1}, cdma {:.1}, direct {:.1}; ordering {ordered}; \
             emln/leach = {vs_leach:.3} (want [2.3, 4.5]), emln/tdma = {vs_tdma:.3} and emln/cdma = {vs_cdma:.3} \
             (want [1.7, 3.0]), direct < emln/20: {direct_ok}",
            l(c.emln),
            l(c.leach),
            l(c.tdma),
            l(c.cdma),
            l(c.direct)
        ),
    )
}

fn delay_ordering(c: &Compared) -> Check {
    let d = |s: &ExperimentSummary| s.mean_delay_per_round;
    let cdma_exact = d(c.cdma) == 7.0 && c.cdma.sd_delay_per_round == 0.0;
    let emln_cdma = d(c.emln) / d(c.cdma);
    let tdma_emln = d(c.tdma) / d(c.emln);
    let leach_emln = d(c.leach) / d(c.emln);
    Check::new(
        cdma_exact && within(emln_cdma, 2.0, 3.5) && within(tdma_emln, 3.0, 4.7) && within(leach_emln, 1.2, 2.2),
        format!(
            "slots cdma {:.3} (want 7 exactly), emln {:.3}, leach {:.3}, tdma {:.3}; \
             emln/cdma = {emln_cdma:.3} (want [2.0, 3.5]), tdma/emln = {tdma_emln:.3} (want [3.0, 4.7]), \
             leach/emln = {leach_emln:.3} (want [1.2, 2.2])",
            d(c.cdma),
            d(c.emln),
            d(c.leach),
            d(c.tdma)
        ),
    )
}

fn energy_delay(c: &Compared) -> Check {
    let ed = |s: &ExperimentSummary| s.mean_energy_delay;
    let direct = ed(c.direct) / ed(c.emln);
    let cdma = ed(c.emln) / ed(c.cdma);
    Check::new(
        direct >= 50.0 && within(cdma, 1.8, 3.2),
        format!("direct/emln = {direct:.1} (want >= 50), emln/cdma = {cdma:.3} (want [1.8, 3.2])"),
    )
}

// ---------------------------------------------------------------------------
// 10a: maximum-leaf spanning trees by exhaustive enumeration

fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> NetworkSnapshot {
    let nodes: Vec<NodeState> = (0..n).map(|i| NodeState::new(i, Point::new(i as f64, 0.0), 1.0)).collect();
    loop {
        let p: f64 = rng.random_range(0.25..0.8);
        let mut adjacency = vec![Vec::new(); n];
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
        }
        let graph = NetworkSnapshot { nodes: nodes.clone(), range: 1.0, adjacency };
        if graph.is_connected() {
            return graph;
        }
    }
}

/// Largest number of childless nodes over every rooted spanning tree of the
/// graph, by decoding every Pruefer sequence.
fn max_leaf_brute_force(graph: &NetworkSnapshot) -> usize {
    let n = graph.len();
    if n <= 2 {
        return n - 1;
    }
    let mut seq = vec![0usize; n - 2];
    let mut best = 0;
    loop {
        if let Some(degree) = pruefer_tree_degrees(&seq, graph) {
            // With at least three nodes some node has degree >= 2 and can be
            // the root, so every degree-1 node is childless.
            best = best.max(degree.iter().filter(|&&d| d == 1).count());
        }
        let mut i = 0;
        while i < seq.len() {
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
            i += 1;
        }
        if i == seq.len() {
            return best;
        }
    }
}

/// Degrees of the labelled tree encoded by `seq`, or `None` if one of its
/// edges is missing from the graph.
fn pruefer_tree_degrees(seq: &[usize], graph: &NetworkSnapshot) -> Option<Vec<usize>> {
    let n = seq.len() + 2;
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let final_degree = degree.clone();
    for &s in seq {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf always exists");
        if !graph.has_edge(leaf, s) {
            return None;
        }
        degree[leaf] = 0;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    graph.has_edge(rest[0], rest[1]).then_some(final_degree)
}

fn max_leaf_oracle() -> Check {
    let mut rng = seeded(0xA11CE);
    let mut ok = 0;
    let mut failures = Vec::new();
    let (mut emln_leaves, mut best_leaves) = (0usize, 0usize);
    for case in 0..200 {
        let n = rng.random_range(1..=8);
        let graph = random_connected_graph(&mut rng, n);
        let energies: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..=1.0)).collect();
        let tree = construct_tree(&graph, &energies, rng.random()).unwrap().tree().expect("graph is connected");
        let best = max_leaf_brute_force(&graph);
        emln_leaves += tree.leaf_set.len();
        best_leaves += best;
        if validate_tree(&tree, &graph) && tree.leaf_set.len() <= best {
            ok += 1;
        } else if failures.len() < 3 {
            failures.push(format!("case {case}: {} leaves vs optimum {best}", tree.leaf_set.len()));
        }
    }
    Check::new(
        ok == 200,
        format!(
            "{ok}/200 graphs valid with leaves <= optimum (total leaves {emln_leaves} vs optimum {best_leaves}){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------------------
// 10b: delay against every collection order

fn random_gather_tree(rng: &mut ChaCha8Rng) -> GatherTree {
    let limit = rng.random_range(1..=30);
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut level = vec![Some(0usize)];
    let mut predecessor = vec![None];
    let mut frontier = vec![0usize];
    while let Some(u) = frontier.pop() {
        let k = rng.random_range(0..=6).min(limit - children.len());
        for _ in 0..k {
            let v = children.len();
            children.push(Vec::new());
            level.push(Some(level[u].unwrap() + 1));
            predecessor.push(Some(u));
            children[u].push(v);
            frontier.insert(0, v);
        }
    }
    let n = children.len();
    let height = level.iter().map(|l| l.unwrap()).max().unwrap();
    let mut nodes_at_level = vec![Vec::new(); height + 1];
    for u in 0..n {
        nodes_at_level[level[u].unwrap()].push(u);
    }
    let intermediate_set: BTreeSet<usize> = (0..n).filter(|&u| u == 0 || !children[u].is_empty()).collect();
    let leaf_set = (0..n).filter(|u| !intermediate_set.contains(u)).collect();
    GatherTree { root: 0, predecessor, children, level, intermediate_set, leaf_set, height, nodes_at_level }
}

fn permutations(items: &[u64]) -> Vec<Vec<u64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Earliest slot at which `u` holds its subtree's aggregate, minimised over
/// every order in which it could collect from its children.
fn best_schedule(tree: &GatherTree, u: usize) -> u64 {
    let ready: Vec<u64> = tree.children[u].iter().map(|&v| best_schedule(tree, v)).collect();
    permutations(&ready)
        .into_iter()
        .map(|order| {
            let mut slot = 0;
            for ready_at in order {
                // The child transmits in the first free slot after it is ready.
                slot = (slot + 1).max(ready_at + 1);
            }
            slot
        })
        .min()
        .unwrap()
}

fn delay_oracle() -> Check {
    let mut rng = seeded(0xDE1A7);
    let mut ok = 0;
    for _ in 0..200 {
        let tree = random_gather_tree(&mut rng);
        let delay = compute_delay(&tree);
        let widest = tree.children.iter().map(Vec::len).max().unwrap() as u64;
        if delay == best_schedule(&tree, tree.root) && delay >= tree.height as u64 && delay >= widest {
            ok += 1;
        }
    }
    Check::new(ok == 200, format!("{ok}/200 random trees match the best collection order"))
}

// ---------------------------------------------------------------------------
// 10c: chain delays against a slot-by-slot schedule

/// Plays the transfers slot by slot, as early as possible: a node sends once
/// it has received every packet addressed to it, and a channel carries one
/// packet per slot. Packets on different channels may arrive at the same node
/// in the same slot. Returns the number of slots used.
fn simulate_slots(transfers: &[Transfer], node_count: usize) -> u64 {
    let mut awaiting = vec![0usize; node_count];
    for t in transfers {
        awaiting[t.to] += 1;
    }
    let mut sent = vec![false; transfers.len()];
    let mut slots = 0;
    while sent.iter().any(|s| !s) {
        slots += 1;
        let mut channels = BTreeSet::new();
        let mut delivered = Vec::new();
        for (i, t) in transfers.iter().enumerate() {
            if sent[i] || awaiting[t.from] > 0 || channels.contains(&t.channel) {
                continue;
            }
            channels.insert(t.channel);
            sent[i] = true;
            delivered.push(t.to);
        }
        assert!(!delivered.is_empty(), "schedule deadlocked");
        for to in delivered {
            awaiting[to] -= 1;
        }
    }
    slots
}

fn chain_oracle() -> Check {
    let mut rng = seeded(0xC4A1);
    let sink = FieldConfig::default().sink;
    let radio = RadioParams::default();
    let (mut cases, mut ok) = (0, 0);
    for n in 1..=10usize {
        for rep in 0..10u64 {
            let field = FieldConfig { node_count: n, ..FieldConfig::default() };
            let mut nodes = deploy(&field, 1.0, rng.random()).unwrap();
            let chain = build_chain(&nodes, sink);
            if rep % 2 == 1 {
                // Knock out some nodes, keeping at least one alive.
                let mut ids: Vec<usize> = (0..n).collect();
                ids.shuffle(&mut rng);
                for &u in ids.iter().take(rng.random_range(0..n)) {
                    nodes[u].alive = false;
                }
            }
            let m = nodes.iter().filter(|x| x.alive).count();
            for leader in 0..m {
                for round in [
                    pegasis_tdma_round_at(&chain, &nodes, sink, &radio, leader),
                    pegasis_cdma_round_at(&chain, &nodes, sink, &radio, leader),
                ] {
                    cases += 1;
                    let transmissions_ok = round.transfers.len() == m - 1;
                    if transmissions_ok && simulate_slots(&round.transfers, n) == round.delay {
                        ok += 1;
                    }
                }
            }
        }
    }
    Check::new(ok == cases, format!("{ok}/{cases} chain rounds match the slot simulator"))
}

// ---------------------------------------------------------------------------
// 10d: energy conservation

/// Round-one energy of an EMLN tree written out from the radio formulas.
fn hand_tree_energy(tree: &GatherTree, nodes: &[NodeState], sink: Point, p: &RadioParams) -> f64 {
    let k = p.packet_bits as f64;
    let tx = |d: f64| p.e_elec * k + p.eps_amp * k * d * d;
    let mut total = 0.0;
    for (u, node) in nodes.iter().enumerate() {
        let Some(_) = tree.level[u] else { continue };
        let c = tree.children[u].len() as f64;
        total += c * p.e_elec * k;
        if tree.intermediate_set.contains(&u) {
            total += p.e_fuse * k * (c + 1.0);
        }
        total += match tree.predecessor[u] {
            Some(parent) => tx(node.position.distance(nodes[parent].position)),
            None => tx(node.position.distance(sink)),
        };
    }
    total
}

fn conservation(runs: &[&Run]) -> Check {
    let worst_round = runs.iter().map(|r| r.worst_round_error).fold(0.0, f64::max);
    let worst_total = runs.iter().map(|r| r.worst_total_error_per_round).fold(0.0, f64::max);
    let rounds: usize = runs.iter().map(|r| r.rounds_checked).sum();

    let field = FieldConfig::default();
    let radio = RadioParams::default();
    let mut worst_formula: f64 = 0.0;
    for t in 0..200u64 {
        let nodes = deploy(&field, 1.0, trial_seed(MASTER_SEED, t)).unwrap();
        let graph = build_graph(&nodes, 25.0);
        let energies: Vec<f64> = nodes.iter().map(|n| n.energy).collect();
        let Some(tree) = construct_tree(&graph, &energies, t).unwrap().tree() else { continue };
        let ledger = tree_round_energy(&tree, &nodes, field.sink, &radio).unwrap();
        worst_formula = worst_formula.max((ledger.total() - hand_tree_energy(&tree, &nodes, field.sink, &radio)).abs());
    }
    Check::new(
        worst_round <= CONSERVATION_TOL && worst_total <= CONSERVATION_TOL && worst_formula <= CONSERVATION_TOL,
        format!(
            "{rounds} rounds: worst per-round residual error {worst_round:.2e} J, worst node-level drift \
             {worst_total:.2e} J/round, worst ledger-vs-formula gap {worst_formula:.2e} J (want <= 1e-9)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 11: determinism

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_emln-dg"))
                .args(["--compare", "--trials", "20", "--seed", "11", "--out"])
                .arg(&path)
                .status()
                .expect("binary runs");
            assert!(status.success());
            std::fs::read(&path).unwrap()
        })
        .collect();
    let identical = outputs[0] == outputs[1] && !outputs[0].is_empty();
    Check::new(identical, format!("two --compare runs, {} bytes each, identical: {identical}", outputs[0].len()))
}

fn main() {
    let mut checks: Vec<(&str, Check)> = Vec::new();
    let mut report = |id: &'static str, check: Check| {
        println!("{} {id:>3}  {}", if check.pass { "PASS" } else { "FAIL" }, check.text);
        checks.push((id, check));
    };

    report("1", connectivity());
    report("2", mean_degree());

    let base = defaults();
    let by_range: Vec<(f64, Run)> =
        [15.0, 25.0, 30.0, 35.0, 45.0, 50.0].into_iter().map(|r| (r, run(&base.with_range(r)))).collect();
    report("3", intermediate_fraction(&by_range));
    report("4", energy_growth(&by_range));
    report("5", lifetime_vs_range(&by_range));

    let baselines: Vec<Run> = [Protocol::Leach, Protocol::PegasisTdma, Protocol::PegasisCdma, Protocol::Direct]
        .into_iter()
        .map(|p| run(&base.with_protocol(p)))
        .collect();
    let compared = Compared {
        emln: summary_at(&by_range, 25.0),
        leach: &baselines[0].summary,
        tdma: &baselines[1].summary,
        cdma: &baselines[2].summary,
        direct: &baselines[3].summary,
    };
    report("6", energy_ordering(&compared));
    report("7", lifetime_ordering(&compared));
    report("8", delay_ordering(&compared));
    report("9", energy_delay(&compared));

    report("10a", max_leaf_oracle());
    report("10b", delay_oracle());
    report("10c", chain_oracle());
    let all_runs: Vec<&Run> = by_range.iter().map(|(_, r)| r).chain(baselines.iter()).collect();
    report("10d", conservation(&all_runs));
    report("11", determinism());

    let failed: Vec<&str> = checks.iter().filter(|(_, c)| !c.pass).map(|(id, _)| *id).collect();
    println!("{} of {} criteria passed", checks.len() - failed.len(), checks.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
