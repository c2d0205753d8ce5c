//! Subcommand bodies. Each returns the paths it wrote.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use wgrowth::calibration::{self, entrants_to_a, select_best, summarize_reference, Alignment, CalibrationOptions, Criterion};
use wgrowth::dist::{fit_mle, fit_powerlaw_tail, powerlaw::TailOptions, Family, FitResult};
use wgrowth::io::{self, fmt_sig, GofRow, LabelTable, ParseOptions};
use wgrowth::stats::{
    ad_test, ccdf, degree_pmf, fit_size_variance, fit_strength_degree, ks_test_model, log_bin, Binning, ScalingFit,
    SizeVarianceOptions, StrengthDegreeOptions,
};
use wgrowth::weights::{assign_initial_weights, evolve_weights, Level};
use wgrowth::{rng, Error, GrowthConfig, Result, WeightModel};

use crate::params::{create, ensure_dir, open, parse_grid, Params};
use crate::{AnalyzeArgs, EvolveArgs, GenerateArgs, GofArgs, IngestArgs, SweepArgs};

type Written = Vec<PathBuf>;

fn write_file<F: FnOnce(&mut dyn Write) -> Result<()>>(path: PathBuf, written: &mut Written, f: F) -> Result<()> {
    let mut w = create(&path)?;
    f(&mut w)?;
    w.flush()?;
    written.push(path);
    Ok(())
}

fn missing_input(flag: &str) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("no input given (--{flag})")))
}

fn read_graph(path: &Path) -> Result<wgrowth::MultiGraph> {
    io::read_edge_list(open(path)?)
}

pub fn generate(args: GenerateArgs) -> Result<Written> {
    let started = Instant::now();
    let mut p = Params::new(args.common.config.as_deref())?;
    let cfg = GrowthConfig::new(
        p.req("a", args.a)?,
        p.req("b", args.b)?,
        p.req("n0", args.n0)?,
        p.req("links", args.links)?,
        p.req("seed", args.seed)?,
    );
    let out = PathBuf::from(p.req::<String>("out", args.common.out)?);
    p.finish()?;
    cfg.validate()?;
    let g = wgrowth::generate(&cfg)?;

    ensure_dir(&out)?;
    let mut written = Vec::new();
    write_file(out.join("network.tsv"), &mut written, |w| io::write_edge_list(w, &g))?;
    write_file(out.join("config.txt"), &mut written, |w| io::write_kv(w, &io::config_to_kv(&cfg)))?;
    written.push(p.write_manifest("generate", &out, started)?);
    Ok(written)
}

pub fn evolve(args: EvolveArgs) -> Result<Written> {
    let started = Instant::now();
    let mut p = Params::new(args.common.config.as_deref())?;
    let input = p.opt::<String>("in", args.input)?;
    let mu_w = p.or("mu-w", args.mu_w, 0.0)?;
    let sigma_w = p.or("sigma-w", args.sigma_w, 0.0)?;
    let martingale = p.or("martingale", args.martingale, false)?;
    let mu_x = if martingale { p.or("mu-x", args.mu_x, 0.0)? } else { p.req("mu-x", args.mu_x)? };
    let sigma_x = p.req("sigma-x", args.sigma_x)?;
    let steps: usize = p.req("steps", args.steps)?;
    let seed: u64 = p.req("seed", args.seed)?;
    let out = PathBuf::from(p.req::<String>("out", args.common.out)?);
    p.finish()?;
    let mut model = WeightModel::new(mu_w, sigma_w, mu_x, sigma_x)?;
    if martingale {
        model = model.with_martingale_drift();
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("--steps must be at least 1".into()));
    }
    let input = PathBuf::from(input.ok_or_else(|| missing_input("in"))?);
    let g = read_graph(&input)?;

    let mut stream = rng::stream(seed);
    let start = assign_initial_weights(&g, &model, &mut stream)?;
    let panel = evolve_weights(&start, &model, steps, &mut stream)?;

    ensure_dir(&out)?;
    let mut written = Vec::new();
    write_file(out.join("weights.tsv"), &mut written, |w| io::write_panel(w, &panel))?;
    write_file(out.join("strengths.tsv"), &mut written, |w| io::write_strengths(w, &panel))?;
    written.push(p.write_manifest("evolve", &out, started)?);
    Ok(written)
}

fn write_pairs<W: Write + ?Sized>(w: &mut W, header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    writeln!(w, "{header}")?;
    for (x, y) in rows {
        writeln!(w, "{}\t{}", fmt_sig(x), fmt_sig(y))?;
    }
    Ok(())
}

fn write_log_bins(out: &Path, name: &str, samples: &[f64], bpd: usize, written: &mut Written) -> Result<()> {
    let positive: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
    if positive.is_empty() {
        eprintln!("warning: {name}: no positive values to bin");
        return Ok(());
    }
    let bins = log_bin(&positive, bpd)?;
    write_file(out.join(name), written, |w| {
        writeln!(w, "lo\thi\tcenter\tcount\tdensity")?;
        for b in &bins {
            writeln!(w, "{}\t{}\t{}\t{}\t{}", fmt_sig(b.lo), fmt_sig(b.hi), fmt_sig(b.center), b.count, fmt_sig(b.density))?;
        }
        Ok(())
    })
}

fn write_scaling(out: &Path, stem: &str, fit: &ScalingFit, written: &mut Written) -> Result<()> {
    write_file(out.join(format!("{stem}_bins.tsv")), written, |w| {
        writeln!(w, "x\ty\tsd\tcount")?;
        for b in &fit.bins {
            writeln!(w, "{}\t{}\t{}\t{}", fmt_sig(b.x), fmt_sig(b.y), fmt_sig(b.sd), b.count)?;
        }
        Ok(())
    })?;
    write_file(out.join(format!("{stem}_fit.tsv")), written, |w| {
        writeln!(w, "exponent\tintercept\tstderr\trange_lo\trange_hi\tn_used\tbinning")?;
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            fmt_sig(fit.exponent),
            fmt_sig(fit.intercept),
            fmt_sig(fit.stderr),
            fmt_sig(fit.range.0),
            fmt_sig(fit.range.1),
            fit.n_used,
            fit.binning
        )?;
        Ok(())
    })
}

/// Fits that fail on the data at hand are reported and skipped.
fn soft<T>(what: &str, r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::Io(_) | Error::Internal(_))) => Err(e),
        Err(e) => {
            eprintln!("warning: {what} skipped: {e}");
            Ok(None)
        }
    }
}

pub fn analyze(args: AnalyzeArgs) -> Result<Written> {
    let started = Instant::now();
    let mut p = Params::new(args.common.config.as_deref())?;
    let input = PathBuf::from(p.req::<String>("in", args.input)?);
    let panel_path = p.opt::<String>("panel", args.panel)?.map(PathBuf::from);
    let bpd = p.or("bins-per-decade", args.bins_per_decade, 5usize)?;
    let size_bins = p.or("size-bins", args.size_bins, 20usize)?;
    let binning = match p.or("size-binning", args.size_binning, "log".to_string())?.as_str() {
        "log" => Binning::LogWidth,
        "quantile" => Binning::Quantile,
        other => return Err(Error::InvalidConfig(format!("unknown --size-binning `{other}` (log or quantile)"))),
    };
    let central = p.or("central", args.central, 0.9)?;
    let k_min = p.opt::<f64>("k-min", args.k_min)?;
    let k_max = p.opt::<f64>("k-max", args.k_max)?;
    let out = PathBuf::from(p.req::<String>("out", args.common.out)?);
    p.finish()?;
    if bpd == 0 {
        return Err(Error::InvalidConfig("--bins-per-decade must be positive".into()));
    }
    let k_range = match (k_min, k_max) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(1.0), hi.unwrap_or(f64::INFINITY))),
    };

    let g = read_graph(&input)?;
    let panel = match &panel_path {
        Some(pp) => Some(io::read_panel(open(pp)?, &g).map_err(|e| match e {
            Error::Format { line, reason } => {
                Error::InvalidConfig(format!("panel does not match the network (line {line}): {reason}"))
            }
            other => other,
        })?),
        None => None,
    };

    ensure_dir(&out)?;
    let mut written = Vec::new();
    let deg = g.degree_sequence(false);
    let degf: Vec<f64> = deg.iter().map(|&k| k as f64).collect();
    write_file(out.join("degree_pmf.tsv"), &mut written, |w| {
        write_pairs(w, "k\tpmf", degree_pmf(&deg).into_iter().map(|(k, q)| (k as f64, q)))
    })?;
    if !degf.is_empty() {
        let c = ccdf(&degf)?;
        write_file(out.join("degree_ccdf.tsv"), &mut written, |w| write_pairs(w, "k\tccdf", c))?;
    }
    write_log_bins(&out, "degree_logbin.tsv", &degf, bpd, &mut written)?;
    let positive: Vec<f64> = degf.iter().copied().filter(|&k| k > 0.0).collect();
    if let Some(t) = soft("degree tail fit", fit_powerlaw_tail(&positive, TailOptions::default()))? {
        write_file(out.join("degree_tail.tsv"), &mut written, |w| {
            writeln!(w, "exponent\texponent_stderr\txmin\tn_tail\tks\tks_exponential")?;
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                fmt_sig(t.exponent),
                fmt_sig(t.exponent_stderr),
                fmt_sig(t.xmin),
                t.n_tail,
                fmt_sig(t.ks),
                fmt_sig(t.ks_exponential)
            )?;
            Ok(())
        })?;
    }

    if let Some(panel) = &panel {
        let last = panel.periods() - 1;
        let strengths = panel.node_strength(last)?;
        let positive_w: Vec<f64> = strengths.iter().copied().filter(|&x| x > 0.0).collect();
        if !positive_w.is_empty() {
            let c = ccdf(&positive_w)?;
            write_file(out.join("strength_ccdf.tsv"), &mut written, |w| write_pairs(w, "strength\tccdf", c))?;
        }
        write_log_bins(&out, "strength_logbin.tsv", strengths, bpd, &mut written)?;
        write_log_bins(&out, "weight_logbin.tsv", panel.weights(last)?, bpd, &mut written)?;

        let (k, s): (Vec<u64>, Vec<f64>) = deg.iter().zip(strengths).filter(|(&k, &s)| k > 0 && s > 0.0).map(|(&k, &s)| (k, s)).unzip();
        let opts = StrengthDegreeOptions { k_range, bins_per_decade: bpd };
        if let Some(fit) = soft("strength-degree fit", fit_strength_degree(&k, &s, &opts))? {
            write_scaling(&out, "strength_degree", &fit, &mut written)?;
        }

        if panel.periods() >= 2 {
            let rates = panel.growth_rates(Level::Node)?;
            if rates.skipped > 0 {
                eprintln!("note: {} node-periods with zero strength skipped", rates.skipped);
            }
            write_file(out.join("growth_rates.tsv"), &mut written, |w| {
                writeln!(w, "period\tnode\tinitial\tg")?;
                for o in &rates.values {
                    writeln!(w, "{}\t{}\t{}\t{}", o.period, o.entity, fmt_sig(o.initial), fmt_sig(o.g))?;
                }
                Ok(())
            })?;
            let initial: Vec<f64> = rates.values.iter().map(|o| o.initial).collect();
            let opts = SizeVarianceOptions { n_bins: size_bins, binning, central, fit_bins: None };
            if let Some(fit) = soft("size-variance fit", fit_size_variance(&initial, &rates.g(), &opts))? {
                write_scaling(&out, "size_variance", &fit, &mut written)?;
            }
        }
    }
    written.push(p.write_manifest("analyze", &out, started)?);
    Ok(written)
}

/// Reads the `g` column of a table, or the only column of a one-column table.
/// Growth rates from the `g` column, with the `period` or `year` column when present.
fn read_growth_column<R: BufRead>(input: R) -> Result<(Vec<f64>, Option<Vec<String>>)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format { line: 1, reason: "missing header".into() })??;
    let cols: Vec<&str> = header.split('\t').collect();
    let idx = match cols.iter().position(|&c| c == "g") {
        Some(i) => i,
        None if cols.len() == 1 => 0,
        None => return Err(Error::Format { line: 1, reason: "no `g` column".into() }),
    };
    let group = cols.iter().position(|&c| c == "period" || c == "year");
    let mut out = Vec::new();
    let mut groups = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != cols.len() {
            return Err(Error::Format { line: i + 2, reason: format!("expected {} fields, found {}", cols.len(), f.len()) });
        }
        out.push(io::table::parse_field(i + 2, "g", f[idx])?);
        if let Some(gi) = group {
            groups.push(f[gi].to_string());
        }
    }
    Ok((out, group.map(|_| groups)))
}

pub fn gof(args: GofArgs) -> Result<Written> {
    let started = Instant::now();
    let mut p = Params::new(args.common.config.as_deref())?;
    let input = PathBuf::from(p.req::<String>("in", args.input)?);
    let families: Vec<Family> = p
        .or("families", args.families, "gaussian,laplace,ged,eq4".to_string())?
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    let center = p.or("center", args.center, "none".to_string())?;
    if center != "none" && center != "mean" {
        return Err(Error::InvalidConfig(format!("--center must be `none` or `mean`, got `{center}`")));
    }
    let out = PathBuf::from(p.req::<String>("out", args.common.out)?);
    p.finish()?;
    let (mut g, groups) = read_growth_column(open(&input)?)?;
    if center == "mean" {
        let keys = groups.unwrap_or_else(|| vec![String::new(); g.len()]);
        g = wgrowth::weights::center_within(&g, &keys)?;
    }

    let mut fits: Vec<FitResult> = Vec::new();
    let mut rows = Vec::new();
    for fam in families {
        let fit = fit_mle(fam, &g)?;
        if !fit.converged {
            eprintln!("warning: {fam} fit did not converge");
        }
        let ks = ks_test_model(&g, &fit.model)?;
        let model = fit.model;
        let ad = match ad_test(&g, |x| model.cdf(x).unwrap_or(f64::NAN)) {
            Ok(r) => Some(r.statistic_raw),
            Err(e @ Error::TailSaturation { .. }) => {
                eprintln!("warning: {fam} AD not reported: {e}");
                None
            }
            Err(e) => return Err(e),
        };
        rows.push(GofRow {
            family: fam.to_string(),
            mean: model.mean().unwrap_or(f64::NAN),
            variance: model.dispersion().unwrap_or(f64::NAN),
            ks_raw: ks.statistic_raw,
            ks_scaled: ks.statistic_scaled,
            ad,
        });
        fits.push(fit);
    }

    ensure_dir(&out)?;
    let mut written = Vec::new();
    write_file(out.join("gof.tsv"), &mut written, |w| io::write_gof_table(w, &rows))?;
    write_file(out.join("fits.tsv"), &mut written, |w| io::write_fit_table(w, &fits))?;
    written.push(p.write_manifest("gof", &out, started)?);
    Ok(written)
}

fn read_reference(path: &Path) -> Result<calibration::ReferenceSummary> {
    let mut r = open(path)?;
    let starts_with_summary = r.fill_buf()?.starts_with(b"#summary");
    if starts_with_summary {
        io::read_summary(r)
    } else {
        summarize_reference(&io::read_edge_list(r)?)
    }
}

pub fn sweep(args: SweepArgs) -> Result<Written> {
    let started = Instant::now();
    let mut p = Params::new(args.common.config.as_deref())?;
    let reference_path = PathBuf::from(p.req::<String>("reference", args.reference)?);
    let a_grid_spec = p.opt::<String>("a-grid", args.a_grid)?;
    let entrants_spec = p.opt::<String>("entrants", args.entrants)?;
    let b_grid = parse_grid(&p.or("b-grid", args.b_grid, "0:1:0.05".to_string())?)?;
    let opts = CalibrationOptions {
        replicates: p.or("replicates", args.replicates, 3)?,
        permutations: p.or("permutations", args.permutations, 99)?,
        alignment: p.or("alignment", args.alignment, Alignment::DegreeRank.to_string())?.parse()?,
        seed: p.req("seed", args.seed)?,
    };
    let criterion: Criterion = p.or("criterion", args.criterion, Criterion::Combined.to_string())?.parse()?;
    let out = PathBuf::from(p.req::<String>("out", args.common.out)?);
    let reference = read_reference(&reference_path)?;
    let a_grid = match (a_grid_spec, entrants_spec) {
        (Some(a), _) => parse_grid(&a)?,
        (None, e) => {
            let spec = match e {
                Some(e) => e,
                // 21 points from no entry up to half the reference size
                None => {
                    let spec = format!("0:{}:{}", reference.node_count / 2, (reference.node_count / 2) as f64 / 20.0);
                    p.or("entrants", None, spec)?
                }
            };
            parse_grid(&spec)?.into_iter().map(|e| entrants_to_a(e, reference.link_count)).collect::<Result<_>>()?
        }
    };
    p.finish()?;

    let outcomes = calibration::sweep(&a_grid, &b_grid, &reference, &opts)?;
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o.result {
            Ok(c) => cells.push(c),
            Err(e) => {
                eprintln!("cell a={} b={} failed: {e}", o.a, o.b);
                failures.push((o.a, o.b, e.to_string()));
            }
        }
    }

    ensure_dir(&out)?;
    let mut written = Vec::new();
    write_file(out.join("sweep.tsv"), &mut written, |w| io::write_sweep_table(w, &cells))?;
    write_file(out.join("failures.tsv"), &mut written, |w| {
        writeln!(w, "a\tb\terror")?;
        for (a, b, e) in &failures {
            writeln!(w, "{a}\t{b}\t{e}")?;
        }
        Ok(())
    })?;
    if cells.is_empty() {
        return Err(Error::Data("every sweep cell failed".into()));
    }
    let best = select_best(&cells, criterion)?;
    write_file(out.join("best.tsv"), &mut written, |w| io::write_sweep_table(w, std::slice::from_ref(&best)))?;
    eprintln!(
        "best ({criterion}): a={} b={} entrants={} r={:.4} ks={:.4}",
        best.a, best.b, best.expected_entrants, best.mantel_r, best.ks_degree
    );
    written.push(p.write_manifest("sweep", &out, started)?);
    Ok(written)
}

pub fn ingest(args: IngestArgs) -> Result<Written> {
    let started = Instant::now();
    let mut p = Params::new(args.common.config.as_deref())?;
    let input = PathBuf::from(p.req::<String>("in", args.input)?);
    let year = p.opt::<i32>("year", args.year)?;
    let all_years = p.or("all-years", args.all_years, false)?;
    let threshold = p.or("threshold", args.threshold, io::flows::DEFAULT_THRESHOLD)?;
    let directed = p.or("directed", args.directed, false)?;
    let labels_path = p.opt::<String>("labels", args.labels)?.map(PathBuf::from);
    let out = PathBuf::from(p.req::<String>("out", args.common.out)?);
    p.finish()?;
    if year.is_some() == all_years {
        return Err(Error::InvalidConfig("give exactly one of --year and --all-years".into()));
    }

    let parsed = io::parse_flow_records(open(&input)?, &ParseOptions { threshold, years: None })?;
    let records: Vec<io::FlowRecord> = match year {
        Some(y) => parsed.records.into_iter().filter(|r| r.year == y).collect(),
        None => parsed.records,
    };
    let mut labels = match &labels_path {
        Some(lp) => LabelTable::read(open(lp)?)?,
        None => LabelTable::default(),
    };
    labels.extend(&records);

    ensure_dir(&out)?;
    let mut written = Vec::new();
    write_file(out.join("diagnostics.tsv"), &mut written, |w| {
        writeln!(w, "line\tkind\treason")?;
        for d in &parsed.diagnostics {
            writeln!(w, "{d}")?;
        }
        Ok(())
    })?;
    if !parsed.diagnostics.is_empty() {
        eprintln!("{} rows dropped or flagged; see diagnostics.tsv", parsed.diagnostics.len());
    }
    write_file(out.join("labels.tsv"), &mut written, |w| labels.write(w))?;

    if let Some(y) = year {
        let agg = io::aggregate_pairs(&records, y, &labels, directed)?
            .ok_or_else(|| Error::Data(format!("no valid records for year {y}")))?;
        let panel = agg.to_panel()?;
        let summary = summarize_reference(&agg.graph)?;
        write_file(out.join("network.tsv"), &mut written, |w| io::write_edge_list(w, &agg.graph))?;
        write_file(out.join("weights.tsv"), &mut written, |w| io::write_panel(w, &panel))?;
        write_file(out.join("strengths.tsv"), &mut written, |w| io::write_strengths(w, &panel))?;
        write_file(out.join("pair_flows.tsv"), &mut written, |w| {
            writeln!(w, "source\ttarget\tvalue")?;
            for (&(s, t), v) in &agg.pair_flows {
                writeln!(w, "{s}\t{t}\t{v}")?;
            }
            Ok(())
        })?;
        write_file(out.join("summary.txt"), &mut written, |w| io::write_summary(w, &summary))?;
        eprintln!("year {y}: {} nodes, {} links", summary.node_count, summary.link_count);
    } else {
        let panel = io::build_strength_panel(&records, &labels, directed)?;
        write_file(out.join("panel_strengths.tsv"), &mut written, |w| {
            writeln!(w, "year\tnode\tstrength")?;
            for (y, m) in &panel.node_strengths {
                for (v, s) in m {
                    writeln!(w, "{y}\t{v}\t{s}")?;
                }
            }
            Ok(())
        })?;
        write_file(out.join("pair_flows.tsv"), &mut written, |w| {
            writeln!(w, "year\tsource\ttarget\tvalue")?;
            for (y, m) in &panel.pair_flows {
                for (&(s, t), v) in m {
                    writeln!(w, "{y}\t{s}\t{t}\t{v}")?;
                }
            }
            Ok(())
        })?;
        if panel.years.len() >= 2 {
            let growth = panel.growth_rates()?;
            write_file(out.join("growth_rates.tsv"), &mut written, |w| {
                writeln!(w, "year\tnode\tinitial\tg")?;
                for o in &growth.rates.values {
                    writeln!(w, "{}\t{}\t{}\t{}", panel.years[o.period], o.entity, o.initial, o.g)?;
                }
                Ok(())
            })?;
            eprintln!(
                "{} growth rates; {} node-years without a neighbouring year, {} with zero strength",
                growth.rates.values.len(),
                growth.unmatched,
                growth.rates.skipped
            );
        }
    }
    written.push(p.write_manifest("ingest", &out, started)?);
    Ok(written)
}
