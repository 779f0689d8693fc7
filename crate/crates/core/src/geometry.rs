//! Node deployment and the range-induced network graph.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// One sensor: position in meters, residual energy in Joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    pub position: Point,
    pub energy: f64,
    pub alive: bool,
}

impl NodeState {
    pub fn new(id: usize, position: Point, energy: f64) -> Self {
        Self { id, position, energy, alive: true }
    }
}

/// Rectangular deployment field `[0, width] x [0, height]` and the sink location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub width: f64,
    pub height: f64,
    pub node_count: usize,
    /// May lie outside the field.
    pub sink: Point,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self { width: 100.0, height: 100.0, node_count: 100, sink: Point::new(50.0, 300.0) }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) || !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "field must have positive finite dimensions, got {} x {}",
                self.width, self.height
            )));
        }
        if self.node_count == 0 {
            return Err(Error::InvalidConfig("node count must be at least 1".into()));
        }
        if !(self.sink.x.is_finite() && self.sink.y.is_finite()) {
            return Err(Error::InvalidConfig("sink position must be finite".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

/// Places `node_count` nodes independently and uniformly in the field.
///
/// Coordinates are drawn x then y per node from a `ChaCha8Rng` seeded with `seed`.
pub fn deploy(field: &FieldConfig, initial_energy: f64, seed: u64) -> Result<Vec<NodeState>> {
    field.validate()?;
    if !(initial_energy >= 0.0 && initial_energy.is_finite()) {
        return Err(Error::InvalidConfig(format!("initial energy must be a finite value >= 0, got {initial_energy}")));
    }
    let mut rng = rng::seeded(seed);
    Ok((0..field.node_count)
        .map(|id| {
            let x = rng.random::<f64>() * field.width;
            let y = rng.random::<f64>() * field.height;
            NodeState::new(id, Point::new(x, y), initial_energy)
        })
        .collect())
}

/// The graph `G = (V, E)`: an edge joins two distinct alive nodes iff their
/// distance is at most `range`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot {
    pub nodes: Vec<NodeState>,
    pub range: f64,
    /// Sorted ascending; empty for dead nodes.
    pub adjacency: Vec<Vec<usize>>,
}

pub fn build_graph(nodes: &[NodeState], range: f64) -> NetworkSnapshot {
    let n = nodes.len();
    let mut adjacency = vec![Vec::new(); n];
    let range_sq = range * range;
    for u in 0..n {
        if !nodes[u].alive {
            continue;
        }
        for v in (u + 1)..n {
            if nodes[v].alive && nodes[u].position.distance_sq(nodes[v].position) <= range_sq {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    // v is pushed to adj[u] in increasing order; u's pushes to adj[v] happen in
    // increasing u as well, so every list is already sorted.
    NetworkSnapshot { nodes: nodes.to_vec(), range, adjacency }
}

impl NetworkSnapshot {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.len() && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn is_alive(&self, u: usize) -> bool {
        self.nodes[u].alive
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Mean degree over alive nodes.
    pub fn mean_degree(&self) -> f64 {
        let alive = self.alive_count();
        if alive == 0 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / alive as f64
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self)
    }
}

/// True iff every alive node is reachable from every other alive node.
/// A graph without alive nodes is reported as not connected.
pub fn is_connected(graph: &NetworkSnapshot) -> bool {
    let Some(start) = graph.nodes.iter().position(|n| n.alive) else {
        return false;
    };
    let mut seen = vec![false; graph.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 1;
    while let Some(u) = stack.pop() {
        for &v in graph.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                stack.push(v);
            }
        }
    }
    reached == graph.alive_count()
}

/// Parses a node-placement file: one node per line, `id x y energy`.
///
/// Blank lines and lines starting with `#` are skipped. Ids must be exactly
/// `0..n` in order.
pub fn parse_placement(text: &str) -> Result<Vec<NodeState>> {
    let mut nodes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Placement { line: line_no, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields `id x y energy`, found {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|_| err(format!("bad id `{}`", fields[0])))?;
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| err(format!("bad {what} `{s}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("{what} must be finite")))
            }
        };
        let x = num(fields[1], "x")?;
        let y = num(fields[2], "y")?;
        let energy = num(fields[3], "energy")?;
        if energy < 0.0 {
            return Err(err("energy must be >= 0".into()));
        }
        if id != nodes.len() {
            return Err(err(format!("expected id {}, found {id}", nodes.len())));
        }
        nodes.push(NodeState::new(id, Point::new(x, y), energy));
    }
    Ok(nodes)
}

pub fn format_placement(nodes: &[NodeState]) -> String {
    let mut out = String::new();
    for n in nodes {
        let _ = writeln!(out, "{} {} {} {}", n.id, n.position.x, n.position.y, n.energy);
    }
    out
}
