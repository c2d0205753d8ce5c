//! Year-stamped bilateral flow records and their aggregation.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use super::table::{parse_field, write_header, write_row, TableReader};
use crate::error::{Error, Result};
use crate::growth::MultiGraph;
use crate::weights::{log_growth, GrowthObservation, GrowthRates, Level, WeightedPanel};

pub const FLOW_HEADER: [&str; 5] = ["year", "source", "target", "commodity", "value"];
pub const LABEL_HEADER: [&str; 2] = ["dense_id", "label"];

/// Reporting floor of the source data, in thousands.
pub const DEFAULT_THRESHOLD: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub year: i32,
    pub source: String,
    pub target: String,
    pub commodity: Option<String>,
    /// Thousands of currency units.
    pub value: f64,
    pub below_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Row rejected.
    Dropped,
    /// Row kept but marked.
    Flagged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub reason: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Dropped => "dropped",
            DiagnosticKind::Flagged => "flagged",
        };
        write!(f, "{}\t{kind}\t{}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOptions {
    pub threshold: f64,
    /// Inclusive year range; rows outside it are dropped.
    pub years: Option<(i32, i32)>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, years: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedFlows {
    pub records: Vec<FlowRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

fn parse_row(f: &[String], opts: &ParseOptions) -> std::result::Result<FlowRecord, String> {
    let year: i32 = f[0].trim().parse().map_err(|_| format!("unparseable year `{}`", f[0]))?;
    if let Some((lo, hi)) = opts.years {
        if year < lo || year > hi {
            return Err(format!("year {year} outside [{lo}, {hi}]"));
        }
    }
    let (source, target) = (f[1].trim(), f[2].trim());
    if source.is_empty() || target.is_empty() {
        return Err("empty node label".into());
    }
    if source == target {
        return Err(format!("source equals target `{source}`"));
    }
    let value: f64 = f[4].trim().parse().map_err(|_| format!("unparseable value `{}`", f[4]))?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(format!("value {value} is not a positive finite number"));
    }
    let commodity = Some(f[3].trim()).filter(|c| !c.is_empty()).map(str::to_string);
    Ok(FlowRecord {
        year,
        source: source.to_string(),
        target: target.to_string(),
        commodity,
        value,
        below_threshold: value < opts.threshold,
    })
}

/// Streams a flow file. Bad rows become diagnostics; only a bad header or an
/// I/O failure is fatal.
pub fn parse_flow_records<R: BufRead>(input: R, opts: &ParseOptions) -> Result<ParsedFlows> {
    let mut reader = TableReader::new(input, &FLOW_HEADER)?;
    let mut out = ParsedFlows::default();
    loop {
        let row = match reader.next_row() {
            Ok(Some(row)) => row,
            Ok(None) => break,
            Err(Error::Format { line, reason }) => {
                out.diagnostics.push(Diagnostic { line, kind: DiagnosticKind::Dropped, reason });
                continue;
            }
            Err(e) => return Err(e),
        };
        let (line, fields) = row;
        match parse_row(&fields, opts) {
            Ok(rec) => {
                if rec.below_threshold {
                    out.diagnostics.push(Diagnostic {
                        line,
                        kind: DiagnosticKind::Flagged,
                        reason: format!("value {} below reporting threshold {}", rec.value, opts.threshold),
                    });
                }
                out.records.push(rec);
            }
            Err(reason) => out.diagnostics.push(Diagnostic { line, kind: DiagnosticKind::Dropped, reason }),
        }
    }
    Ok(out)
}

/// Writes records so that [`parse_flow_records`] returns them unchanged.
pub fn write_flow_records<W: Write + ?Sized>(w: &mut W, records: &[FlowRecord]) -> Result<()> {
    write_header(w, &FLOW_HEADER)?;
    for r in records {
        write_row(
            w,
            &[
                r.year.to_string(),
                r.source.clone(),
                r.target.clone(),
                r.commodity.clone().unwrap_or_default(),
                r.value.to_string(),
            ],
        )?;
    }
    Ok(())
}

/// Bijection between node labels and dense ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelTable {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelTable {
    /// Sorted labels of every record endpoint.
    pub fn from_records<'a, I: IntoIterator<Item = &'a FlowRecord>>(records: I) -> Self {
        let mut t = Self::default();
        t.extend(records);
        t
    }

    /// Appends unseen labels, sorted, after the existing ids.
    pub fn extend<'a, I: IntoIterator<Item = &'a FlowRecord>>(&mut self, records: I) {
        let mut fresh: Vec<&str> = Vec::new();
        for r in records {
            for l in [&r.source, &r.target] {
                if !self.index.contains_key(l.as_str()) {
                    fresh.push(l);
                }
            }
        }
        fresh.sort_unstable();
        fresh.dedup();
        for l in fresh {
            self.index.insert(l.to_string(), self.labels.len());
            self.labels.push(l.to_string());
        }
    }

    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn write<W: Write + ?Sized>(&self, w: &mut W) -> Result<()> {
        write_header(w, &LABEL_HEADER)?;
        for (i, l) in self.labels.iter().enumerate() {
            write_row(w, &[i.to_string(), l.clone()])?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut reader = TableReader::new(input, &LABEL_HEADER)?;
        let mut labels = Vec::new();
        while let Some((line, f)) = reader.next_row()? {
            let id: usize = parse_field(line, "dense_id", &f[0])?;
            if id != labels.len() {
                return Err(Error::Format { line, reason: format!("expected dense_id {}, found {id}", labels.len()) });
            }
            labels.push(f[1].clone());
        }
        Self::from_labels(labels)
    }
}

/// One year of flows as a weighted multigraph.
#[derive(Debug, Clone, PartialEq)]
pub struct YearAggregate {
    pub year: i32,
    /// One link per (pair, commodity); node ids are label-table ids.
    pub graph: MultiGraph,
    /// Summed value of each link.
    pub weights: Vec<f64>,
    /// Total per pair: `(min, max)` keys when undirected, `(source, target)` otherwise.
    pub pair_flows: BTreeMap<(usize, usize), f64>,
    /// Sum of incident pair flows for every node active in the year.
    pub strengths: BTreeMap<usize, f64>,
}

impl YearAggregate {
    /// Single-period panel with the summed values as weights.
    pub fn to_panel(&self) -> Result<WeightedPanel> {
        WeightedPanel::from_weights(&self.graph, vec![self.weights.clone()])
    }
}

/// Aggregates the records of `year`. Returns `Ok(None)` when the year has no records.
///
/// Directions are summed into undirected pairs unless `directed` is set.
pub fn aggregate_pairs(records: &[FlowRecord], year: i32, labels: &LabelTable, directed: bool) -> Result<Option<YearAggregate>> {
    let mut links: BTreeMap<(usize, usize, Option<&str>), f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.year == year) {
        let id = |l: &str| labels.id(l).ok_or_else(|| Error::Data(format!("label `{l}` missing from the label table")));
        let (s, t) = (id(&r.source)?, id(&r.target)?);
        let key = if directed || s < t { (s, t) } else { (t, s) };
        *links.entry((key.0, key.1, r.commodity.as_deref())).or_insert(0.0) += r.value;
    }
    if links.is_empty() {
        return Ok(None);
    }
    let mut pair_flows: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut edges = Vec::with_capacity(links.len());
    let mut weights = Vec::with_capacity(links.len());
    for (&(s, t, _), &v) in &links {
        edges.push((s, t));
        weights.push(v);
        *pair_flows.entry((s, t)).or_insert(0.0) += v;
    }
    let mut strengths: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(s, t), &v) in &pair_flows {
        *strengths.entry(s).or_insert(0.0) += v;
        *strengths.entry(t).or_insert(0.0) += v;
    }
    Ok(Some(YearAggregate {
        year,
        graph: MultiGraph::from_links(labels.len(), edges)?,
        weights,
        pair_flows,
        strengths,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSummary {
    pub years: Vec<i32>,
    pub labels: LabelTable,
    pub pair_flows: BTreeMap<i32, BTreeMap<(usize, usize), f64>>,
    /// Nodes without flows in a year have no entry for it.
    pub node_strengths: BTreeMap<i32, BTreeMap<usize, f64>>,
}

/// Node growth rates between consecutive panel years.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelGrowth {
    /// `period` indexes the first year of each pair in [`PanelSummary::years`].
    pub rates: GrowthRates,
    /// Node-year pairs with an entry in only one of the two years.
    pub unmatched: usize,
}

impl PanelSummary {
    pub fn growth_rates(&self) -> Result<PanelGrowth> {
        if self.years.len() < 2 {
            return Err(Error::InsufficientData(format!("growth rates need two years, panel has {}", self.years.len())));
        }
        let mut values = Vec::new();
        let mut unmatched = 0;
        let mut skipped = 0;
        for (p, w) in self.years.windows(2).enumerate() {
            let (now, next) = (&self.node_strengths[&w[0]], &self.node_strengths[&w[1]]);
            for (&node, &w0) in now {
                match next.get(&node) {
                    Some(&w1) => match log_growth(w0, w1) {
                        Some(g) => values.push(GrowthObservation { entity: node, period: p, initial: w0, g }),
                        None => skipped += 1,
                    },
                    None => unmatched += 1,
                }
            }
            unmatched += next.keys().filter(|k| !now.contains_key(k)).count();
        }
        Ok(PanelGrowth { rates: GrowthRates { level: Level::Node, values, skipped }, unmatched })
    }
}

/// Per-year pair flows and node strengths over every year in `records`.
pub fn build_strength_panel(records: &[FlowRecord], labels: &LabelTable, directed: bool) -> Result<PanelSummary> {
    let mut years: Vec<i32> = records.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    let mut pair_flows = BTreeMap::new();
    let mut node_strengths = BTreeMap::new();
    for &y in &years {
        let agg = aggregate_pairs(records, y, labels, directed)?.expect("year taken from records");
        pair_flows.insert(y, agg.pair_flows);
        node_strengths.insert(y, agg.strengths);
    }
    Ok(PanelSummary { years, labels: labels.clone(), pair_flows, node_strengths })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(year: i32, s: &str, t: &str, c: &str, v: f64) -> FlowRecord {
        FlowRecord {
            year,
            source: s.into(),
            target: t.into(),
            commodity: Some(c.into()).filter(|c: &String| !c.is_empty()),
            value: v,
            below_threshold: v < DEFAULT_THRESHOLD,
        }
    }

    #[test]
    fn parsing_and_diagnostics() {
        let text = "year\tsource\ttarget\tcommodity\tvalue\n\
                    2000\tA\tB\t0711\t500\n\
                    2000\tA\tB\t0712\t50\n\
                    2000\tA\tA\t0712\t50\n\
                    x\tA\tB\t0712\t50\n\
                    2000\tA\tB\n\
                    2000\tA\tC\t\t-3\n";
        let p = parse_flow_records(text.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(p.records.len(), 2);
        assert!(p.records[1].below_threshold);
        let lines: Vec<(usize, DiagnosticKind)> = p.diagnostics.iter().map(|d| (d.line, d.kind)).collect();
        assert_eq!(
            lines,
            vec![
                (3, DiagnosticKind::Flagged),
                (4, DiagnosticKind::Dropped),
                (5, DiagnosticKind::Dropped),
                (6, DiagnosticKind::Dropped),
                (7, DiagnosticKind::Dropped)
            ]
        );
        let empty = parse_flow_records("year\tsource\ttarget\tcommodity\tvalue\n".as_bytes(), &ParseOptions::default()).unwrap();
        assert!(empty.records.is_empty() && empty.diagnostics.is_empty());
        assert!(matches!(
            parse_flow_records("year\tsrc\n".as_bytes(), &ParseOptions::default()),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn single_record_aggregate() {
        let r = vec![rec(2000, "A", "B", "0711", 500.0)];
        let labels = LabelTable::from_records(&r);
        let agg = aggregate_pairs(&r, 2000, &labels, false).unwrap().unwrap();
        assert_eq!(agg.weights, vec![500.0]);
        assert_eq!(agg.strengths.values().copied().collect::<Vec<_>>(), vec![500.0, 500.0]);
        assert!(aggregate_pairs(&r, 1999, &labels, false).unwrap().is_none());
    }

    #[test]
    fn commodities_add_up() {
        let r = vec![rec(2000, "A", "B", "1", 200.0), rec(2000, "A", "B", "2", 300.0), rec(2000, "B", "A", "2", 10.0)];
        let labels = LabelTable::from_records(&r);
        let agg = aggregate_pairs(&r, 2000, &labels, false).unwrap().unwrap();
        assert_eq!(agg.pair_flows[&(0, 1)], 510.0);
        assert_eq!(agg.graph.degree_sequence(false), vec![2, 2]);
        let dir = aggregate_pairs(&r, 2000, &labels, true).unwrap().unwrap();
        assert_eq!(dir.pair_flows[&(0, 1)], 500.0);
        assert_eq!(dir.pair_flows[&(1, 0)], 10.0);
        assert_eq!(dir.graph.degree_sequence(false), vec![3, 3]);
    }

    #[test]
    fn panel_growth() {
        let r = vec![rec(1990, "A", "B", "1", 100.0), rec(1991, "A", "B", "1", 200.0), rec(1991, "A", "C", "1", 5.0)];
        let labels = LabelTable::from_records(&r);
        let p = build_strength_panel(&r, &labels, false).unwrap();
        assert!(!p.node_strengths[&1990].contains_key(&2));
        let g = p.growth_rates().unwrap();
        assert_eq!(g.unmatched, 1);
        let b = g.rates.values.iter().find(|o| o.entity == 1).unwrap();
        assert!((b.g - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn label_table_roundtrip() {
        let r = vec![rec(2000, "DEU", "FRA", "", 1.0), rec(2000, "USA", "FRA", "", 1.0)];
        let t = LabelTable::from_records(&r);
        assert_eq!(t.labels(), ["DEU", "FRA", "USA"]);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(LabelTable::read(buf.as_slice()).unwrap(), t);
        let mut grown = t.clone();
        grown.extend(&[rec(2001, "AUT", "USA", "", 1.0)]);
        assert_eq!(grown.id("AUT"), Some(3));
        assert_eq!(grown.id("USA"), Some(2));
    }
}
