//! Link weights under multiplicative (geometric Brownian) shocks.
//!
//! Weights are assigned after the topology is complete: each link draws an
//! initial lognormal weight and then evolves as `w(t+1) = w(t)·x(t)` with
//! i.i.d. lognormal shocks. Node strength is the sum of incident link weights.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::growth::MultiGraph;
use crate::rng;

/// Lognormal parameters of initial weights (`mu_w`, `sigma_w`) and shocks (`mu_x`, `sigma_x`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightModel {
    pub mu_w: f64,
    pub sigma_w: f64,
    pub mu_x: f64,
    pub sigma_x: f64,
}

impl WeightModel {
    pub fn new(mu_w: f64, sigma_w: f64, mu_x: f64, sigma_x: f64) -> Result<Self> {
        let m = Self { mu_w, sigma_w, mu_x, sigma_x };
        m.validate()?;
        Ok(m)
    }

    /// Sets `mu_x = -sigma_x²/2`, so shocks have unit mean.
    pub fn with_martingale_drift(mut self) -> Self {
        self.mu_x = -0.5 * self.sigma_x * self.sigma_x;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_w", self.mu_w), ("sigma_w", self.sigma_w), ("mu_x", self.mu_x), ("sigma_x", self.sigma_x)] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite, got {v}")));
            }
        }
        if self.sigma_w < 0.0 || self.sigma_x < 0.0 {
            return Err(Error::InvalidConfig("sigma_w and sigma_x must be non-negative".into()));
        }
        Ok(())
    }
}

fn lognormal_sampler(mu: f64, sigma: f64) -> Result<Normal<f64>> {
    Normal::new(mu, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Link weights per period plus the node strengths they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPanel {
    node_count: usize,
    links: Vec<(usize, usize)>,
    /// Edge id of each link in the source graph's edge list.
    edge_ids: Vec<usize>,
    /// `weights[period][link]`
    weights: Vec<Vec<f64>>,
    strengths: Vec<Vec<f64>>,
}

impl WeightedPanel {
    /// Builds a panel from explicit weights, one row per period.
    pub fn from_weights(graph: &MultiGraph, weights: Vec<Vec<f64>>) -> Result<Self> {
        graph.validate()?;
        if weights.is_empty() {
            return Err(Error::Data("a panel needs at least one period".into()));
        }
        for (t, row) in weights.iter().enumerate() {
            if row.len() != graph.links.len() {
                return Err(Error::Data(format!(
                    "period {t} has {} weights for {} links",
                    row.len(),
                    graph.links.len()
                )));
            }
            if let Some((k, w)) = row.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
                return Err(Error::Data(format!("weight of link {k} in period {t} is {w}; weights must be positive")));
            }
        }
        let edge_ids = (0..graph.links.len()).map(|k| graph.link_edge_id(k)).collect();
        let mut panel = Self {
            node_count: graph.node_count,
            links: graph.links.clone(),
            edge_ids,
            weights: Vec::new(),
            strengths: Vec::new(),
        };
        for row in weights {
            panel.push_period(row);
        }
        Ok(panel)
    }

    fn push_period(&mut self, row: Vec<f64>) {
        self.strengths.push(strengths_of(self.node_count, &self.links, &row));
        self.weights.push(row);
    }

    pub fn periods(&self) -> usize {
        self.weights.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn edge_ids(&self) -> &[usize] {
        &self.edge_ids
    }

    pub fn weights(&self, period: usize) -> Result<&[f64]> {
        self.weights.get(period).map(Vec::as_slice).ok_or(Error::Index { index: period, len: self.periods() })
    }

    /// Degree of each node in the panel's topology.
    pub fn degrees(&self) -> Vec<u64> {
        let mut d = vec![0; self.node_count];
        for &(s, t) in &self.links {
            d[s] += 1;
            d[t] += 1;
        }
        d
    }

    /// Strength of every node in `period`; nodes without links have strength 0.
    pub fn node_strength(&self, period: usize) -> Result<&[f64]> {
        self.strengths.get(period).map(Vec::as_slice).ok_or(Error::Index { index: period, len: self.periods() })
    }

    /// Log growth rates between consecutive periods.
    pub fn growth_rates(&self, level: Level) -> Result<GrowthRates> {
        if self.periods() < 2 {
            return Err(Error::InsufficientData("growth rates need at least two periods".into()));
        }
        let mut values = Vec::new();
        let mut skipped = 0;
        for t in 0..self.periods() - 1 {
            let (now, next) = match level {
                Level::Edge => (&self.weights[t], &self.weights[t + 1]),
                Level::Node => (&self.strengths[t], &self.strengths[t + 1]),
            };
            for (entity, (&w0, &w1)) in now.iter().zip(next).enumerate() {
                match log_growth(w0, w1) {
                    Some(g) => values.push(GrowthObservation { entity, period: t, initial: w0, g }),
                    None if level == Level::Node => skipped += 1,
                    None => {
                        return Err(Error::Data(format!(
                            "link {entity} has non-positive weight between periods {t} and {}",
                            t + 1
                        )))
                    }
                }
            }
        }
        Ok(GrowthRates { level, values, skipped })
    }
}

fn strengths_of(node_count: usize, links: &[(usize, usize)], weights: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; node_count];
    for (&(a, b), &w) in links.iter().zip(weights) {
        s[a] += w;
        s[b] += w;
    }
    s
}

/// `ln(next / now)` when both values are positive and the ratio is finite.
pub fn log_growth(now: f64, next: f64) -> Option<f64> {
    if now > 0.0 && next > 0.0 {
        let g = (next / now).ln();
        g.is_finite().then_some(g)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Node,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthObservation {
    /// Node id or link index.
    pub entity: usize,
    /// First period of the pair `(period, period + 1)`.
    pub period: usize,
    /// Value in `period`.
    pub initial: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRates {
    pub level: Level,
    pub values: Vec<GrowthObservation>,
    /// Entities skipped because a value was zero (node level only).
    pub skipped: usize,
}

impl GrowthRates {
    pub fn g(&self) -> Vec<f64> {
        self.values.iter().map(|o| o.g).collect()
    }
}

impl GrowthRates {
    /// Growth rates with each period's mean subtracted.
    pub fn centered(&self) -> Vec<f64> {
        let keys: Vec<usize> = self.values.iter().map(|o| o.period).collect();
        center_within(&self.g(), &keys).expect("one key per rate")
    }
}

/// Subtracts from each value the mean of the values sharing its key.
pub fn center_within<K: Ord + Clone>(values: &[f64], keys: &[K]) -> Result<Vec<f64>> {
    if values.len() != keys.len() {
        return Err(Error::Data(format!("{} values but {} group keys", values.len(), keys.len())));
    }
    let mut sums: std::collections::BTreeMap<K, (f64, usize)> = Default::default();
    for (v, k) in values.iter().zip(keys) {
        let e = sums.entry(k.clone()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    Ok(values.iter().zip(keys).map(|(v, k)| {
        let (s, n) = sums[k];
        v - s / n as f64
    }).collect())
}

/// Period-0 panel with independent lognormal weights on every link.
pub fn assign_initial_weights<R: Rng + ?Sized>(graph: &MultiGraph, model: &WeightModel, rng: &mut R) -> Result<WeightedPanel> {
    model.validate()?;
    let weights = if model.sigma_w == 0.0 {
        vec![model.mu_w.exp(); graph.links.len()]
    } else {
        let normal = lognormal_sampler(model.mu_w, model.sigma_w)?;
        (0..graph.links.len()).map(|_| normal.sample(rng).exp()).collect()
    };
    WeightedPanel::from_weights(graph, vec![weights])
}

/// Appends `steps` periods of multiplicative shocks.
///
/// Each link draws its shocks from its own sub-stream, keyed by a value taken
/// from `rng` and the link index, so the result does not depend on how the
/// work is split across threads.
pub fn evolve_weights<R: Rng + ?Sized>(
    panel: &WeightedPanel,
    model: &WeightModel,
    steps: usize,
    rng: &mut R,
) -> Result<WeightedPanel> {
    model.validate()?;
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    let key = rng.next_u64();
    let last = panel.weights.last().expect("panel has a period");
    let normal = lognormal_sampler(model.mu_x, model.sigma_x)?;
    let fixed_shock = (model.sigma_x == 0.0).then(|| model.mu_x.exp());

    // trajectories[link][step]
    let trajectories: Vec<Vec<f64>> = last
        .par_iter()
        .enumerate()
        .map(|(k, &w0)| {
            let mut stream = rng::substream(key, &[k as u64]);
            let mut w = w0;
            (0..steps)
                .map(|_| {
                    let x = fixed_shock.unwrap_or_else(|| normal.sample(&mut stream).exp());
                    w = (w * x).max(f64::MIN_POSITIVE);
                    w
                })
                .collect()
        })
        .collect();

    let mut out = panel.clone();
    for s in 0..steps {
        let row: Vec<f64> = trajectories.iter().map(|tr| tr[s]).collect();
        out.push_period(row);
    }
    Ok(out)
}
