//! Grid calibration of the growth parameters against a reference network.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::growth::{generate, GrowthConfig, MultiGraph};
use crate::rng;
use crate::stats::{ks_two_sample, mantel_test_sparse, SparseSymmetric};

/// Links per node pair; self-loops are dropped and the matrix is zero-padded
/// to `node_count`.
pub fn link_count_matrix(graph: &MultiGraph, node_count: usize) -> Result<SparseSymmetric> {
    graph.validate()?;
    if node_count < graph.node_count {
        return Err(Error::Domain(format!(
            "matrix size {node_count} is smaller than the graph's {} nodes",
            graph.node_count
        )));
    }
    let mut m = SparseSymmetric::new(node_count);
    for &(s, t) in &graph.links {
        m.add(s, t, 1.0);
    }
    Ok(m)
}

/// What a calibration run needs to know about the reference network.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSummary {
    pub node_count: usize,
    pub link_count: usize,
    pub link_counts: SparseSymmetric,
    /// Degree of each node, self-loops excluded.
    pub degrees: Vec<u64>,
}

impl ReferenceSummary {
    /// Empirical degree pmf as `(k, share)` pairs.
    pub fn degree_pmf(&self) -> Vec<(u64, f64)> {
        crate::stats::degree_pmf(&self.degrees)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 || self.link_count == 0 {
            return Err(Error::EmptyInput("reference has no nodes or links".into()));
        }
        if self.link_counts.dim() != self.node_count || self.degrees.len() != self.node_count {
            return Err(Error::Data("summary sizes disagree with node_count".into()));
        }
        let mut deg = vec![0u64; self.node_count];
        let mut total = 0u64;
        for (i, j, v) in self.link_counts.upper_entries() {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Data(format!("pair ({i}, {j}) has non-integer count {v}")));
            }
            deg[i] += v as u64;
            deg[j] += v as u64;
            total += v as u64;
        }
        if total != self.link_count as u64 {
            return Err(Error::Data(format!("pair counts sum to {total}, expected {}", self.link_count)));
        }
        if deg != self.degrees {
            return Err(Error::Data("degrees disagree with pair counts".into()));
        }
        Ok(())
    }
}

pub fn summarize_reference(graph: &MultiGraph) -> Result<ReferenceSummary> {
    if graph.node_count == 0 || graph.links.is_empty() {
        return Err(Error::EmptyInput("network has no nodes or links".into()));
    }
    Ok(ReferenceSummary {
        node_count: graph.node_count,
        link_count: graph.link_count(),
        link_counts: link_count_matrix(graph, graph.node_count)?,
        degrees: graph.degree_sequence(false),
    })
}

/// How simulated node ids are matched with reference ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    /// i-th largest simulated degree ↔ i-th largest reference degree (ties by id).
    #[default]
    DegreeRank,
    /// Uniformly random placement of simulated nodes.
    Random,
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alignment::DegreeRank => "degree_rank",
            Alignment::Random => "random",
        })
    }
}

impl FromStr for Alignment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree_rank" | "degree-rank" | "rank" => Ok(Alignment::DegreeRank),
            "random" => Ok(Alignment::Random),
            _ => Err(Error::InvalidConfig(format!("unknown alignment `{s}` (expected degree_rank or random)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    Mantel,
    Ks,
    #[default]
    Combined,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Mantel => "mantel",
            Criterion::Ks => "ks",
            Criterion::Combined => "combined",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mantel" => Ok(Criterion::Mantel),
            "ks" => Ok(Criterion::Ks),
            "combined" => Ok(Criterion::Combined),
            _ => Err(Error::InvalidConfig(format!("unknown criterion `{s}` (expected mantel, ks or combined)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub replicates: usize,
    /// Mantel permutations per replicate; 0 skips the test and reports p = 1.
    pub permutations: usize,
    pub alignment: Alignment,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { replicates: 3, permutations: 99, alignment: Alignment::DegreeRank, seed: 0 }
    }
}

/// Replicate means for one `(a, b)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub a: f64,
    pub b: f64,
    pub expected_entrants: f64,
    pub n0: usize,
    pub realized_entrants: f64,
    pub mantel_r: f64,
    pub mantel_r_se: f64,
    pub mantel_p: f64,
    pub ks_degree: f64,
    pub ks_degree_se: f64,
    pub replicates: usize,
}

/// Entry probability giving `entrants` expected new nodes over `m` links.
pub fn entrants_to_a(entrants: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidConfig("entrant parameterization needs m > 0".into()));
    }
    let a = entrants / (2.0 * m as f64);
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidConfig(format!("{entrants} entrants over {m} links is outside a ∈ [0, 1]")));
    }
    Ok(a)
}

/// Initial node budget for a cell: reference size minus expected entrants.
pub fn initial_nodes(a: f64, reference: &ReferenceSummary) -> Result<usize> {
    let e = 2.0 * a * reference.link_count as f64;
    let n = reference.node_count as f64;
    if e >= n {
        return Err(Error::InvalidCell {
            a,
            b: f64::NAN,
            reason: format!("{e} expected entrants ≥ {} reference nodes", reference.node_count),
        });
    }
    Ok(((n - e).round() as usize).max(1))
}

/// Ids sorted by decreasing degree, ties by id.
fn rank_order(degrees: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..degrees.len()).collect();
    idx.sort_by(|&i, &j| degrees[j].cmp(&degrees[i]).then(i.cmp(&j)));
    idx
}

struct Replicate {
    entrants: usize,
    r: f64,
    p: f64,
    ks: f64,
}

fn replicate(
    a: f64,
    b: f64,
    n0: usize,
    reference: &ReferenceSummary,
    opts: &CalibrationOptions,
    seed: u64,
) -> Result<Replicate> {
    let graph = generate(&GrowthConfig::new(a, b, n0, reference.link_count, seed))?;
    let n = graph.node_count.max(reference.node_count);
    let sim_deg = graph.degree_sequence(false);

    // map[simulated id] = position in the padded reference index space
    let mut map = vec![0usize; graph.node_count];
    match opts.alignment {
        Alignment::DegreeRank => {
            let mut ref_rank = rank_order(&reference.degrees);
            ref_rank.extend(reference.node_count..n);
            for (pos, sim) in rank_order(&sim_deg).into_iter().enumerate() {
                map[sim] = ref_rank[pos];
            }
        }
        Alignment::Random => {
            let mut slots: Vec<usize> = (0..n).collect();
            slots.shuffle(&mut rng::substream(seed, &[1]));
            map.copy_from_slice(&slots[..graph.node_count]);
        }
    }
    let sim = link_count_matrix(&graph, graph.node_count)?.relabeled(&map, n);
    let refm = reference.link_counts.relabeled(&(0..reference.node_count).collect::<Vec<_>>(), n);
    let mantel = mantel_test_sparse(&sim, &refm, opts.permutations, &mut rng::substream(seed, &[2]))?;

    let a_deg: Vec<f64> = sim_deg.iter().map(|&k| k as f64).collect();
    let b_deg: Vec<f64> = reference.degrees.iter().map(|&k| k as f64).collect();
    let ks = ks_two_sample(&a_deg, &b_deg)?;
    Ok(Replicate { entrants: graph.node_count - n0, r: mantel.r, p: mantel.p, ks })
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simulates `opts.replicates` networks at `(a, b)` and scores them against the reference.
pub fn evaluate_cell(a: f64, b: f64, reference: &ReferenceSummary, opts: &CalibrationOptions) -> Result<CellResult> {
    if opts.replicates == 0 {
        return Err(Error::InvalidConfig("replicates must be ≥ 1".into()));
    }
    reference.validate()?;
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidCell { a, b, reason: "probabilities must lie in [0, 1]".into() });
    }
    let n0 = initial_nodes(a, reference).map_err(|e| match e {
        Error::InvalidCell { reason, .. } => Error::InvalidCell { a, b, reason },
        other => other,
    })?;
    let cfg = GrowthConfig::new(a, b, n0, reference.link_count, 0);
    cfg.validate().map_err(|e| Error::InvalidCell { a, b, reason: e.to_string() })?;

    let reps: Vec<Replicate> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = rng::derive_seed(opts.seed, &[a.to_bits(), b.to_bits(), r as u64]);
            replicate(a, b, n0, reference, opts, seed)
        })
        .collect::<Result<_>>()?;

    let rs: Vec<f64> = reps.iter().map(|x| x.r).collect();
    let ks: Vec<f64> = reps.iter().map(|x| x.ks).collect();
    let (mantel_r, mantel_r_se) = mean_se(&rs);
    let (ks_degree, ks_degree_se) = mean_se(&ks);
    let n = reps.len() as f64;
    Ok(CellResult {
        a,
        b,
        expected_entrants: cfg.expected_entrants(),
        n0,
        realized_entrants: reps.iter().map(|x| x.entrants as f64).sum::<f64>() / n,
        mantel_r,
        mantel_r_se,
        mantel_p: reps.iter().map(|x| x.p).sum::<f64>() / n,
        ks_degree,
        ks_degree_se,
        replicates: reps.len(),
    })
}

/// Outcome of one grid cell; failures do not abort the sweep.
#[derive(Debug)]
pub struct CellOutcome {
    pub a: f64,
    pub b: f64,
    pub result: Result<CellResult>,
}

/// Evaluates every `(a, b)` pair, a-major, in parallel.
pub fn sweep(a_grid: &[f64], b_grid: &[f64], reference: &ReferenceSummary, opts: &CalibrationOptions) -> Result<Vec<CellOutcome>> {
    if a_grid.is_empty() || b_grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grids must be nonempty".into()));
    }
    reference.validate()?;
    let cells: Vec<(f64, f64)> = a_grid.iter().flat_map(|&a| b_grid.iter().map(move |&b| (a, b))).collect();
    Ok(cells
        .into_par_iter()
        .map(|(a, b)| CellOutcome { a, b, result: evaluate_cell(a, b, reference, opts) })
        .collect())
}

fn by_grid(x: &CellResult, y: &CellResult) -> std::cmp::Ordering {
    x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b))
}

/// Best cell under `criterion`. Ties go to the smaller `a`, then the smaller `b`.
/// `Combined` takes the smallest KS among cells whose Mantel r is within one
/// standard error of the best r.
pub fn select_best(results: &[CellResult], criterion: Criterion) -> Result<CellResult> {
    let best_r = results
        .iter()
        .min_by(|x, y| y.mantel_r.total_cmp(&x.mantel_r).then(by_grid(x, y)))
        .ok_or_else(|| Error::EmptyInput("no cell results".into()))?;
    let pick = match criterion {
        Criterion::Mantel => best_r,
        Criterion::Ks => results
            .iter()
            .min_by(|x, y| x.ks_degree.total_cmp(&y.ks_degree).then(by_grid(x, y)))
            .expect("nonempty"),
        Criterion::Combined => {
            let floor = best_r.mantel_r - best_r.mantel_r_se;
            results
                .iter()
                .filter(|c| c.mantel_r >= floor)
                .min_by(|x, y| x.ks_degree.total_cmp(&y.ks_degree).then(by_grid(x, y)))
                .expect("best cell passes its own floor")
        }
    };
    Ok(pick.clone())
}
