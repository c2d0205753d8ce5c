//! Multigraph growth by preferential attachment with node entry.
//!
//! The network starts with `n0` nodes, each carrying one self-loop. Every step
//! adds one link. Each endpoint is a brand-new node with probability `a`;
//! otherwise it is an existing node, chosen uniformly with probability `b` and
//! proportionally to its attachment weight with probability `1 - b`. The
//! attachment weight of a node is its link count plus one for an
//! initialization self-loop, so the normalizer is the realized weight mass
//! `2(t-1) + n0`. The target draw excludes the source node.

mod fenwick;
mod theory;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use fenwick::Fenwick;

pub use theory::theoretical_degree_model;

/// Largest node count a single run may reach.
pub const MAX_NODES: usize = u32::MAX as usize;

/// Parameters of one generation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConfig {
    /// Probability that an endpoint is a new node.
    pub a: f64,
    /// Probability that an existing endpoint is chosen uniformly.
    pub b: f64,
    pub n0: usize,
    /// Number of links to add (self-loops excluded).
    pub m: usize,
    pub seed: u64,
}

impl GrowthConfig {
    pub fn new(a: f64, b: f64, n0: usize, m: usize, seed: u64) -> Self {
        Self { a, b, n0, m, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::InvalidConfig(format!("a must lie in [0, 1], got {}", self.a)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!("b must lie in [0, 1], got {}", self.b)));
        }
        if self.n0 == 0 {
            return Err(Error::InvalidConfig("n0 must be at least 1".into()));
        }
        if self.n0 == 1 && self.a == 0.0 && self.m > 0 {
            return Err(Error::InvalidConfig(
                "with a = 0 and n0 = 1 no link can join two distinct nodes".into(),
            ));
        }
        Ok(())
    }

    /// Expected number of entrant nodes, `2am`.
    pub fn expected_entrants(&self) -> f64 {
        2.0 * self.a * self.m as f64
    }
}

/// Evolving state of a growth run.
#[derive(Debug, Clone)]
pub struct GrowthState {
    t: usize,
    n0: usize,
    degrees: Vec<u64>,
    edges: Vec<(usize, usize)>,
    weights: Fenwick,
}

impl GrowthState {
    /// Fresh state with `n0` self-looped nodes.
    pub fn init(n0: usize) -> Result<Self> {
        Self::with_capacity(n0, 0)
    }

    fn with_capacity(n0: usize, m: usize) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidConfig("n0 must be at least 1".into()));
        }
        let max_nodes = m
            .checked_mul(2)
            .and_then(|x| x.checked_add(n0))
            .filter(|&x| x <= MAX_NODES)
            .ok_or_else(|| Error::Capacity(format!("n0={n0}, m={m} exceeds {MAX_NODES} nodes")))?;
        let cap_err = |e| Error::Capacity(format!("cannot allocate for {max_nodes} nodes: {e}"));
        let mut weights = Fenwick::with_capacity(max_nodes).map_err(cap_err)?;
        let mut degrees = Vec::new();
        degrees.try_reserve_exact(max_nodes).map_err(cap_err)?;
        let mut edges = Vec::new();
        edges.try_reserve_exact(m).map_err(cap_err)?;
        for _ in 0..n0 {
            weights.push(1);
            degrees.push(0);
        }
        Ok(Self { t: 0, n0, degrees, edges, weights })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Link counts, self-loops excluded.
    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Attachment weight of a node: link count plus its initialization self-loop.
    pub fn attachment_weight(&self, node: usize) -> u64 {
        self.degrees[node] + u64::from(node < self.n0)
    }

    /// Probability that `node` is drawn as source in the next step.
    pub fn source_probability(&self, node: usize, a: f64, b: f64) -> f64 {
        let n = self.node_count() as f64;
        let d = self.weights.total() as f64;
        (1.0 - a) * ((1.0 - b) * self.attachment_weight(node) as f64 / d + b / n)
    }

    /// Adds one link according to `config`.
    pub fn grow_step<R: Rng + ?Sized>(&mut self, config: &GrowthConfig, rng: &mut R) -> Result<()> {
        let existing = self.node_count();
        let source = if rng.random_bool(config.a) {
            None
        } else {
            Some(self.pick(config.b, None, rng))
        };
        let can_pick_target = match source {
            Some(_) => existing >= 2,
            None => existing >= 1,
        };
        let target = if rng.random_bool(config.a) || !can_pick_target {
            None
        } else {
            Some(self.pick(config.b, source, rng))
        };

        let source = source.unwrap_or_else(|| self.add_node());
        let target = target.unwrap_or_else(|| self.add_node());
        if source == target {
            return Err(Error::Internal(format!("self-edge drawn at t={}", self.t + 1)));
        }
        for node in [source, target] {
            self.degrees[node] += 1;
            self.weights.add(node, 1);
        }
        self.edges.push((source, target));
        self.t += 1;
        Ok(())
    }

    fn add_node(&mut self) -> usize {
        self.degrees.push(0);
        self.weights.push(0);
        self.degrees.len() - 1
    }

    /// Draws an existing node, excluding `exclude` if given.
    fn pick<R: Rng + ?Sized>(&self, b: f64, exclude: Option<usize>, rng: &mut R) -> usize {
        let n = self.weights.len();
        if rng.random_bool(b) {
            match exclude {
                None => rng.random_range(0..n),
                Some(i) => {
                    let j = rng.random_range(0..n - 1);
                    if j >= i {
                        j + 1
                    } else {
                        j
                    }
                }
            }
        } else {
            match exclude {
                None => self.weights.find(rng.random_range(0..self.weights.total())),
                Some(i) => {
                    let wi = self.attachment_weight(i);
                    let mut r = rng.random_range(0..self.weights.total() - wi);
                    if r >= self.weights.prefix(i) {
                        r += wi;
                    }
                    self.weights.find(r)
                }
            }
        }
    }

    pub fn into_graph(self) -> MultiGraph {
        MultiGraph {
            node_count: self.degrees.len(),
            self_loops: (0..self.n0).collect(),
            links: self.edges,
        }
    }
}

/// Undirected multigraph. Self-loops only mark initialization nodes and are
/// excluded from every analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    pub node_count: usize,
    pub self_loops: Vec<usize>,
    pub links: Vec<(usize, usize)>,
}

impl MultiGraph {
    pub fn from_links(node_count: usize, links: Vec<(usize, usize)>) -> Result<Self> {
        let g = Self { node_count, self_loops: Vec::new(), links };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for &v in &self.self_loops {
            if v >= self.node_count {
                return Err(Error::Data(format!("self-loop on unknown node {v}")));
            }
        }
        for (k, &(s, t)) in self.links.iter().enumerate() {
            if s >= self.node_count || t >= self.node_count {
                return Err(Error::Data(format!("link {k} ({s}, {t}) has an endpoint outside [0, {})", self.node_count)));
            }
            if s == t {
                return Err(Error::Data(format!("link {k} joins node {s} to itself")));
            }
        }
        Ok(())
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Edge id of link `k`; self-loops take ids `0..self_loops.len()`.
    pub fn link_edge_id(&self, k: usize) -> usize {
        self.self_loops.len() + k
    }

    /// Per-node link counts; with `include_self_loops` each self-loop adds one.
    pub fn degree_sequence(&self, include_self_loops: bool) -> Vec<u64> {
        let mut deg = vec![0u64; self.node_count];
        for &(s, t) in &self.links {
            deg[s] += 1;
            deg[t] += 1;
        }
        if include_self_loops {
            for &v in &self.self_loops {
                deg[v] += 1;
            }
        }
        deg
    }
}

/// Runs the growth process for `config.m` steps.
pub fn generate(config: &GrowthConfig) -> Result<MultiGraph> {
    config.validate()?;
    let mut state = GrowthState::with_capacity(config.n0, config.m)?;
    let mut rng = rng::stream(config.seed);
    for _ in 0..config.m {
        state.grow_step(config, &mut rng)?;
    }
    Ok(state.into_graph())
}
