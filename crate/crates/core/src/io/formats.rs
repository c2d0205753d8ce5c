//! Artifact file formats.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::table::{fmt_sig, parse_field, write_header, write_row, TableReader};
use crate::calibration::{CellResult, ReferenceSummary};
use crate::dist::FitResult;
use crate::error::{Error, Result};
use crate::growth::{GrowthConfig, MultiGraph};
use crate::stats::SparseSymmetric;
use crate::weights::WeightedPanel;

pub const EDGE_HEADER: [&str; 4] = ["edge_id", "source", "target", "self_loop"];
pub const PANEL_HEADER: [&str; 3] = ["period", "edge_id", "weight"];
pub const STRENGTH_HEADER: [&str; 3] = ["period", "node", "strength"];
pub const SWEEP_HEADER: [&str; 7] = ["a", "b", "entrants_expected", "mantel_r", "mantel_p", "ks_degree", "replicates"];
pub const FIT_HEADER: [&str; 5] = ["family", "param_name", "value", "loglik", "n"];
pub const GOF_HEADER: [&str; 6] = ["family", "mean", "variance", "ks_raw", "ks_scaled", "ad"];

/// Self-loops first, then links, ids in row order.
pub fn write_edge_list<W: Write + ?Sized>(w: &mut W, g: &MultiGraph) -> Result<()> {
    write_header(w, &EDGE_HEADER)?;
    for (id, &v) in g.self_loops.iter().enumerate() {
        writeln!(w, "{id}\t{v}\t{v}\t1")?;
    }
    for (k, &(s, t)) in g.links.iter().enumerate() {
        writeln!(w, "{}\t{s}\t{t}\t0", g.link_edge_id(k))?;
    }
    Ok(())
}

/// Node count is one past the largest endpoint.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<MultiGraph> {
    let mut reader = TableReader::new(input, &EDGE_HEADER)?;
    let mut g = MultiGraph { node_count: 0, self_loops: Vec::new(), links: Vec::new() };
    let mut next_id = 0usize;
    while let Some((line, f)) = reader.next_row()? {
        let id: usize = parse_field(line, "edge_id", &f[0])?;
        if id != next_id {
            return Err(Error::Format { line, reason: format!("expected edge_id {next_id}, found {id}") });
        }
        next_id += 1;
        let s: usize = parse_field(line, "source", &f[1])?;
        let t: usize = parse_field(line, "target", &f[2])?;
        g.node_count = g.node_count.max(s + 1).max(t + 1);
        match f[3].as_str() {
            "1" if s == t => {
                if !g.links.is_empty() {
                    return Err(Error::Format { line, reason: "self-loops must precede links".into() });
                }
                g.self_loops.push(s);
            }
            "0" if s != t => g.links.push((s, t)),
            flag => {
                return Err(Error::Format {
                    line,
                    reason: format!("self_loop flag `{flag}` inconsistent with endpoints {s}, {t}"),
                })
            }
        }
    }
    Ok(g)
}

/// `key=value` lines; `#` comments and blank lines are ignored.
pub fn read_kv<R: BufRead>(input: R) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::Format { line: i + 1, reason: format!("expected key=value, found `{t}`") })?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Format { line: i + 1, reason: format!("duplicate key `{}`", k.trim()) });
        }
    }
    Ok(out)
}

pub fn write_kv<W: Write + ?Sized>(w: &mut W, entries: &BTreeMap<String, String>) -> Result<()> {
    for (k, v) in entries {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

fn kv_get<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = kv.get(key).ok_or_else(|| Error::InvalidConfig(format!("missing key `{key}`")))?;
    raw.parse().map_err(|_| Error::InvalidConfig(format!("cannot parse `{key}={raw}`")))
}

/// Shortest round-trip rendering, so floats survive exactly.
pub fn config_to_kv(c: &GrowthConfig) -> BTreeMap<String, String> {
    [("a", c.a.to_string()), ("b", c.b.to_string()), ("n0", c.n0.to_string()), ("m", c.m.to_string()), ("seed", c.seed.to_string())]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

pub fn config_from_kv(kv: &BTreeMap<String, String>) -> Result<GrowthConfig> {
    let c = GrowthConfig::new(kv_get(kv, "a")?, kv_get(kv, "b")?, kv_get(kv, "n0")?, kv_get(kv, "m")?, kv_get(kv, "seed")?);
    c.validate()?;
    Ok(c)
}

/// Link weights, one row per (period, link).
pub fn write_panel<W: Write + ?Sized>(w: &mut W, p: &WeightedPanel) -> Result<()> {
    write_header(w, &PANEL_HEADER)?;
    for t in 0..p.periods() {
        for (&id, &x) in p.edge_ids().iter().zip(p.weights(t)?) {
            writeln!(w, "{t}\t{id}\t{}", fmt_sig(x))?;
        }
    }
    Ok(())
}

/// Reads a panel written for `graph`; every period must list every link in order.
pub fn read_panel<R: BufRead>(input: R, graph: &MultiGraph) -> Result<WeightedPanel> {
    let mut reader = TableReader::new(input, &PANEL_HEADER)?;
    let links = graph.links.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while let Some((line, f)) = reader.next_row()? {
        let t: usize = parse_field(line, "period", &f[0])?;
        let id: usize = parse_field(line, "edge_id", &f[1])?;
        let x: f64 = parse_field(line, "weight", &f[2])?;
        if t == rows.len() && rows.last().is_none_or(|r| r.len() == links) {
            rows.push(Vec::with_capacity(links));
        }
        let current = rows.len();
        let row = match rows.last_mut() {
            Some(r) if t + 1 == current && r.len() < links => r,
            _ => return Err(Error::Format { line, reason: format!("unexpected period {t}") }),
        };
        let want = graph.link_edge_id(row.len());
        if id != want {
            return Err(Error::Format { line, reason: format!("expected edge_id {want}, found {id}") });
        }
        row.push(x);
    }
    if rows.last().is_some_and(|r| r.len() != links) {
        return Err(Error::Format { line: 0, reason: "last period is incomplete".into() });
    }
    WeightedPanel::from_weights(graph, rows)
}

pub fn write_strengths<W: Write + ?Sized>(w: &mut W, p: &WeightedPanel) -> Result<()> {
    write_header(w, &STRENGTH_HEADER)?;
    for t in 0..p.periods() {
        for (v, &s) in p.node_strength(t)?.iter().enumerate() {
            writeln!(w, "{t}\t{v}\t{}", fmt_sig(s))?;
        }
    }
    Ok(())
}

/// `strengths[period][node]`.
pub fn read_strengths<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut reader = TableReader::new(input, &STRENGTH_HEADER)?;
    let mut out: Vec<Vec<f64>> = Vec::new();
    while let Some((line, f)) = reader.next_row()? {
        let t: usize = parse_field(line, "period", &f[0])?;
        let v: usize = parse_field(line, "node", &f[1])?;
        let s: f64 = parse_field(line, "strength", &f[2])?;
        if t == out.len() {
            out.push(Vec::new());
        }
        if t + 1 != out.len() || v != out[t].len() {
            return Err(Error::Format { line, reason: format!("rows out of order at period {t}, node {v}") });
        }
        out[t].push(s);
    }
    Ok(out)
}

pub fn write_sweep_table<W: Write + ?Sized>(w: &mut W, cells: &[CellResult]) -> Result<()> {
    write_header(w, &SWEEP_HEADER)?;
    for c in cells {
        write_row(
            w,
            &[
                c.a.to_string(),
                c.b.to_string(),
                c.expected_entrants.to_string(),
                c.mantel_r.to_string(),
                c.mantel_p.to_string(),
                c.ks_degree.to_string(),
                c.replicates.to_string(),
            ],
        )?;
    }
    Ok(())
}

/// One row per fitted parameter.
pub fn write_fit_table<W: Write + ?Sized>(w: &mut W, fits: &[FitResult]) -> Result<()> {
    write_header(w, &FIT_HEADER)?;
    for f in fits {
        for (name, v) in f.model.params() {
            write_row(w, &[f.model.family().to_string(), name.to_string(), fmt_sig(v), fmt_sig(f.loglik), f.n.to_string()])?;
        }
    }
    Ok(())
}

/// One row of a goodness-of-fit comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GofRow {
    pub family: String,
    pub mean: f64,
    /// Model variance, or the scale parameter where the variance is infinite.
    pub variance: f64,
    pub ks_raw: f64,
    pub ks_scaled: f64,
    pub ad: Option<f64>,
}

pub fn write_gof_table<W: Write + ?Sized>(w: &mut W, rows: &[GofRow]) -> Result<()> {
    write_header(w, &GOF_HEADER)?;
    for r in rows {
        write_row(
            w,
            &[
                r.family.clone(),
                fmt_sig(r.mean),
                fmt_sig(r.variance),
                fmt_sig(r.ks_raw),
                fmt_sig(r.ks_scaled),
                r.ad.map_or_else(|| "nan".into(), fmt_sig),
            ],
        )?;
    }
    Ok(())
}

/// Reference summary: a `#summary` block of `key=value` lines, then the
/// degree and pair tables.
pub fn write_summary<W: Write + ?Sized>(w: &mut W, s: &ReferenceSummary) -> Result<()> {
    writeln!(w, "#summary")?;
    writeln!(w, "node_count={}", s.node_count)?;
    writeln!(w, "link_count={}", s.link_count)?;
    writeln!(w, "#degrees")?;
    writeln!(w, "node\tdegree")?;
    for (v, k) in s.degrees.iter().enumerate() {
        writeln!(w, "{v}\t{k}")?;
    }
    writeln!(w, "#pairs")?;
    writeln!(w, "i\tj\tlinks")?;
    for (i, j, c) in s.link_counts.upper_entries() {
        writeln!(w, "{i}\t{j}\t{}", c as u64)?;
    }
    Ok(())
}

pub fn read_summary<R: BufRead>(input: R) -> Result<ReferenceSummary> {
    let mut section = String::new();
    let mut kv = BTreeMap::new();
    let mut degrees = Vec::new();
    let mut pairs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        let bad = |reason: String| Error::Format { line: n, reason };
        if let Some(name) = line.strip_prefix('#') {
            section = name.trim().to_string();
            continue;
        }
        match section.as_str() {
            "summary" => {
                let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, found `{line}`")))?;
                kv.insert(k.to_string(), v.to_string());
            }
            "degrees" if line == "node\tdegree" => {}
            "degrees" => {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 2 || parse_field::<usize>(n, "node", f[0])? != degrees.len() {
                    return Err(bad(format!("bad degree row `{line}`")));
                }
                degrees.push(parse_field::<u64>(n, "degree", f[1])?);
            }
            "pairs" if line == "i\tj\tlinks" => {}
            "pairs" => {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 3 {
                    return Err(bad(format!("bad pair row `{line}`")));
                }
                pairs.push((
                    n,
                    parse_field::<usize>(n, "i", f[0])?,
                    parse_field::<usize>(n, "j", f[1])?,
                    parse_field::<u64>(n, "links", f[2])?,
                ));
            }
            _ => return Err(bad(format!("line outside a known section: `{line}`"))),
        }
    }
    let node_count: usize = kv_get(&kv, "node_count").map_err(|e| Error::Format { line: 0, reason: e.to_string() })?;
    let link_count: usize = kv_get(&kv, "link_count").map_err(|e| Error::Format { line: 0, reason: e.to_string() })?;
    let mut m = SparseSymmetric::new(node_count);
    for (n, i, j, c) in pairs {
        if i >= j || j >= node_count {
            return Err(Error::Format { line: n, reason: format!("pair ({i}, {j}) outside the upper triangle") });
        }
        m.add(i, j, c as f64);
    }
    let s = ReferenceSummary { node_count, link_count, link_counts: m, degrees };
    s.validate()?;
    Ok(s)
}
