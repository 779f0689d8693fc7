//! Energy-aware maximal-leaf data gathering tree.
//!
//! The tree is grown from the node with the largest weight, where a node's
//! weight is its number of uncovered neighbors times its residual energy.
//! Each iteration promotes the heaviest covered, non-intermediate node that
//! still has uncovered neighbors; those neighbors become its children. Nodes
//! never promoted stay leaves.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::NetworkSnapshot;
use crate::rng;

/// Weight of a node during construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeWeight {
    pub uncovered_count: usize,
    pub energy: f64,
    pub weight: f64,
}

impl NodeWeight {
    pub fn new(uncovered_count: usize, energy: f64) -> Self {
        Self { uncovered_count, energy, weight: uncovered_count as f64 * energy }
    }
}

/// Rooted spanning tree over the alive nodes of a [`NetworkSnapshot`].
///
/// Per-node vectors are indexed by node id and sized to the whole snapshot;
/// nodes outside the tree (dead nodes) have no level and no parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatherTree {
    pub root: usize,
    pub predecessor: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub level: Vec<Option<usize>>,
    pub intermediate_set: BTreeSet<usize>,
    pub leaf_set: BTreeSet<usize>,
    pub height: usize,
    pub nodes_at_level: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeOutcome {
    Tree(GatherTree),
    /// Some alive node cannot be reached from the root.
    Disconnected,
}

impl TreeOutcome {
    pub fn tree(self) -> Option<GatherTree> {
        match self {
            TreeOutcome::Tree(t) => Some(t),
            TreeOutcome::Disconnected => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Root,
    Intermediate,
    Leaf,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Root => "root",
            Role::Intermediate => "intermediate",
            Role::Leaf => "leaf",
        }
    }
}

impl GatherTree {
    pub fn spanned_count(&self) -> usize {
        self.intermediate_set.len() + self.leaf_set.len()
    }

    pub fn role(&self, u: usize) -> Option<Role> {
        if u == self.root {
            Some(Role::Root)
        } else if self.intermediate_set.contains(&u) {
            Some(Role::Intermediate)
        } else if self.leaf_set.contains(&u) {
            Some(Role::Leaf)
        } else {
            None
        }
    }

    /// One line per spanned node: `id level parent role`, parent `-` for the root.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for u in 0..self.level.len() {
            let (Some(level), Some(role)) = (self.level[u], self.role(u)) else {
                continue;
            };
            let parent = self.predecessor[u].map_or_else(|| "-".to_string(), |p| p.to_string());
            let _ = writeln!(out, "{u} {level} {parent} {}", role.as_str());
        }
        out
    }
}

/// Picks the index of the maximum weight; ties broken uniformly at random.
/// Candidates must be given in a deterministic order.
fn pick_max<R: Rng>(candidates: &[usize], weight: impl Fn(usize) -> f64, rng: &mut R) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut ties = 0usize;
    for &u in candidates {
        let w = weight(u);
        if w > best {
            best = w;
            ties = 1;
        } else if w == best {
            ties += 1;
        }
    }
    if ties == 0 {
        return None;
    }
    let mut pick = if ties > 1 { rng.random_range(0..ties) } else { 0 };
    for &u in candidates {
        if weight(u) == best {
            if pick == 0 {
                return Some(u);
            }
            pick -= 1;
        }
    }
    unreachable!("tie set counted above")
}

struct Builder<'a> {
    graph: &'a NetworkSnapshot,
    covered: Vec<bool>,
    uncovered: Vec<usize>,
    tree: GatherTree,
    covered_count: usize,
}

impl Builder<'_> {
    fn cover(&mut self, v: usize, parent: Option<usize>, level: usize) {
        debug_assert!(!self.covered[v]);
        self.covered[v] = true;
        self.covered_count += 1;
        for &w in self.graph.neighbors(v) {
            self.uncovered[w] -= 1;
        }
        self.tree.predecessor[v] = parent;
        self.tree.level[v] = Some(level);
        if self.tree.nodes_at_level.len() <= level {
            self.tree.nodes_at_level.resize_with(level + 1, Vec::new);
        }
        self.tree.nodes_at_level[level].push(v);
        self.tree.height = self.tree.height.max(level);
    }

    /// Makes `u` an intermediate node and attaches its uncovered neighbors as children.
    fn promote(&mut self, u: usize) -> Vec<usize> {
        self.tree.leaf_set.remove(&u);
        self.tree.intermediate_set.insert(u);
        let level = self.tree.level[u].expect("promoted node is covered") + 1;
        let mut added = Vec::new();
        for &v in self.graph.neighbors(u) {
            if !self.covered[v] {
                self.cover(v, Some(u), level);
                self.tree.leaf_set.insert(v);
                self.tree.children[u].push(v);
                added.push(v);
            }
        }
        added
    }
}

/// Builds the tree over the alive nodes of `graph` using `energies[u]` as the
/// residual energy of node `u`.
///
/// Ties between equal maximum weights are resolved with a `ChaCha8Rng` seeded
/// from `tie_seed`. Returns [`TreeOutcome::Disconnected`] when the alive nodes
/// do not form a connected graph.
pub fn construct_tree(graph: &NetworkSnapshot, energies: &[f64], tie_seed: u64) -> Result<TreeOutcome> {
    let n = graph.len();
    if energies.len() != n {
        return Err(Error::Usage(format!("energy vector has {} entries for a {n}-node graph", energies.len())));
    }
    if let Some(u) = energies.iter().position(|e| e.is_nan() || *e < 0.0) {
        return Err(Error::Usage(format!("node {u} has invalid energy {}", energies[u])));
    }
    let alive: Vec<usize> = (0..n).filter(|&u| graph.is_alive(u)).collect();
    if alive.is_empty() {
        return Err(Error::Usage("graph has no alive nodes".into()));
    }

    let mut rng = rng::seeded(tie_seed);
    let mut b = Builder {
        graph,
        covered: vec![false; n],
        uncovered: (0..n).map(|u| graph.neighbors(u).len()).collect(),
        tree: GatherTree {
            root: 0,
            predecessor: vec![None; n],
            children: vec![Vec::new(); n],
            level: vec![None; n],
            intermediate_set: BTreeSet::new(),
            leaf_set: BTreeSet::new(),
            height: 0,
            nodes_at_level: Vec::new(),
        },
        covered_count: 0,
    };

    let root = pick_max(&alive, |u| NodeWeight::new(b.uncovered[u], energies[u]).weight, &mut rng)
        .expect("alive set is nonempty");
    b.tree.root = root;
    b.cover(root, None, 0);
    b.tree.intermediate_set.insert(root);
    let mut candidates = b.promote(root);

    let mut pool = Vec::with_capacity(n);
    while b.covered_count < alive.len() {
        // Covered nodes that are not intermediate and still see an uncovered neighbor.
        candidates.retain(|&u| !b.tree.intermediate_set.contains(&u));
        pool.clear();
        pool.extend(candidates.iter().copied().filter(|&u| b.uncovered[u] > 0));
        pool.sort_unstable();
        let Some(next) = pick_max(&pool, |u| NodeWeight::new(b.uncovered[u], energies[u]).weight, &mut rng) else {
            return Ok(TreeOutcome::Disconnected);
        };
        let added = b.promote(next);
        candidates.extend(added);
    }

    Ok(TreeOutcome::Tree(b.tree))
}

/// Fold over child delays sorted ascending: `t = max(t + 1, d + 1)`.
pub fn fold_child_delays(sorted: &[u64]) -> u64 {
    sorted.iter().fold(0, |t, &d| (t + 1).max(d + 1))
}

/// Number of time slots until the root holds the aggregate of every node.
///
/// Leaves have delay 0. Each intermediate node collects from its children one
/// slot at a time, in increasing order of child delay; levels are processed
/// from `height - 1` up to the root.
pub fn compute_delay(tree: &GatherTree) -> u64 {
    let mut delay = vec![0u64; tree.level.len()];
    let mut scratch = Vec::new();
    for level in (0..tree.height).rev() {
        for &u in &tree.nodes_at_level[level] {
            let kids = &tree.children[u];
            if kids.is_empty() {
                continue;
            }
            scratch.clear();
            scratch.extend(kids.iter().map(|&v| delay[v]));
            scratch.sort_unstable();
            delay[u] = fold_child_delays(&scratch);
        }
    }
    delay[tree.root]
}

/// Checks every structural property of `tree` against `graph`.
pub fn validate_tree(tree: &GatherTree, graph: &NetworkSnapshot) -> bool {
    let n = graph.len();
    if tree.predecessor.len() != n || tree.children.len() != n || tree.level.len() != n {
        return false;
    }
    if tree.root >= n || !graph.is_alive(tree.root) {
        return false;
    }
    if !tree.intermediate_set.is_disjoint(&tree.leaf_set) || !tree.intermediate_set.contains(&tree.root) {
        return false;
    }
    if tree.level[tree.root] != Some(0) || tree.predecessor[tree.root].is_some() {
        return false;
    }

    // Spanning: exactly the alive nodes.
    for u in 0..n {
        let spanned = tree.intermediate_set.contains(&u) || tree.leaf_set.contains(&u);
        if spanned != graph.is_alive(u) || spanned != tree.level[u].is_some() {
            return false;
        }
        if !spanned && (tree.predecessor[u].is_some() || !tree.children[u].is_empty()) {
            return false;
        }
    }

    let mut max_level = 0;
    for u in 0..n {
        let Some(level) = tree.level[u] else { continue };
        max_level = max_level.max(level);
        if u != tree.root {
            let Some(p) = tree.predecessor[u] else { return false };
            if tree.level[p].map(|l| l + 1) != Some(level) {
                return false;
            }
            if !graph.has_edge(u, p) || tree.children[p].binary_search(&u).is_err() {
                return false;
            }
        }
        let kids = &tree.children[u];
        if !kids.windows(2).all(|w| w[0] < w[1]) {
            return false;
        }
        if kids.iter().any(|&v| tree.predecessor[v] != Some(u)) {
            return false;
        }
        if !kids.is_empty() && !tree.intermediate_set.contains(&u) {
            return false;
        }
    }
    if max_level != tree.height {
        return false;
    }

    // nodes_at_level lists each spanned node once, at its level.
    let mut listed = 0;
    for (level, ids) in tree.nodes_at_level.iter().enumerate() {
        for &u in ids {
            if u >= n || tree.level[u] != Some(level) {
                return false;
            }
            listed += 1;
        }
    }
    if listed != tree.spanned_count() {
        return false;
    }

    // Intermediate nodes dominate the graph; connectivity of the intermediate
    // subtree follows from every intermediate's parent having a child.
    let dominated = (0..n).filter(|&u| graph.is_alive(u)).all(|u| {
        tree.intermediate_set.contains(&u) || graph.neighbors(u).iter().any(|v| tree.intermediate_set.contains(v))
    });
    let rooted = tree
        .intermediate_set
        .iter()
        .all(|&u| u == tree.root || tree.predecessor[u].is_some_and(|p| tree.intermediate_set.contains(&p)));
    dominated && rooted
}
