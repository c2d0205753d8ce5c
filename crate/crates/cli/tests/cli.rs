use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wgrowth::calibration::{evaluate_cell, CalibrationOptions};
use wgrowth::dist::DistributionModel;
use wgrowth::io::read_summary;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wgrowth"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

/// Every output file except the manifest, by name.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.txt")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn gen(dir: &Path, a: &str, b: &str, n0: &str, links: &str, seed: &str) -> PathBuf {
    ok(&["generate", "--a", a, "--b", b, "--n0", n0, "--links", links, "--seed", seed, "--out", s(dir)]);
    dir.join("network.tsv")
}

#[test]
fn generate_writes_the_requested_links() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0", "0", "100", "100000", "7");
    let text = read(net);
    let links = text.lines().skip(1).filter(|l| l.ends_with("\t0")).count();
    assert_eq!(links, 100_000);
    assert_eq!(text.lines().count(), 1 + 100 + 100_000);
    assert!(t.path().join("net/manifest.txt").exists());
}

#[test]
fn generate_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    gen(&t.path().join("x"), "0.2", "0.3", "5", "3000", "11");
    gen(&t.path().join("y"), "0.2", "0.3", "5", "3000", "11");
    assert_eq!(outputs(&t.path().join("x")), outputs(&t.path().join("y")));
}

#[test]
fn out_of_range_parameter_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&["generate", "--a", "1.5", "--b", "0", "--n0", "2", "--links", "10", "--seed", "1", "--out", s(t.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1]"));
    let o = run(&["generate", "--b", "0", "--n0", "2", "--links", "10", "--out", s(t.path())]);
    assert_eq!(o.status.code(), Some(2), "missing seed");
}

#[test]
fn version_names_the_format() {
    let o = ok(&["--version"]);
    let v = String::from_utf8_lossy(&o.stdout);
    assert!(v.contains(env!("CARGO_PKG_VERSION")));
    assert!(v.contains(&format!("format {}", wgrowth::FORMAT_VERSION)));
}

#[test]
fn evolve_without_shocks_is_constant() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.1", "0", "10", "2000", "1");
    let out = t.path().join("ev");
    ok(&[
        "evolve", "--in", s(&net), "--mu-w", "0.5", "--sigma-w", "0", "--mu-x", "0", "--sigma-x", "0", "--steps", "5", "--seed",
        "3", "--out", s(&out),
    ]);
    let text = read(out.join("weights.tsv"));
    let w: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap()).collect();
    assert_eq!(w.len(), 6 * 2000);
    assert!(w.iter().all(|x| *x == w[0]));
}

#[test]
fn strength_file_sums_match_weight_file() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.1", "0", "10", "2000", "1");
    let out = t.path().join("ev");
    ok(&[
        "evolve", "--in", s(&net), "--mu-w", "0", "--sigma-w", "1", "--mu-x", "0", "--sigma-x", "0.2", "--steps", "3", "--seed",
        "3", "--out", s(&out),
    ]);
    let mut w = [0.0f64; 4];
    for l in read(out.join("weights.tsv")).lines().skip(1) {
        let f: Vec<&str> = l.split('\t').collect();
        w[f[0].parse::<usize>().unwrap()] += f[2].parse::<f64>().unwrap();
    }
    let mut st = [0.0f64; 4];
    for l in read(out.join("strengths.tsv")).lines().skip(1) {
        let f: Vec<&str> = l.split('\t').collect();
        st[f[0].parse::<usize>().unwrap()] += f[2].parse::<f64>().unwrap();
    }
    for t in 0..4 {
        assert!((st[t] - 2.0 * w[t]).abs() < 1e-8 * st[t], "period {t}");
    }
}

#[test]
fn evolve_without_input_is_an_io_error() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&["evolve", "--mu-x", "0", "--sigma-x", "0", "--steps", "2", "--seed", "1", "--out", s(t.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--in"));
}

fn table_value(path: &Path, column: &str) -> f64 {
    let text = read(path);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let i = header.iter().position(|&c| c == column).unwrap();
    lines.next().unwrap().split('\t').nth(i).unwrap().parse().unwrap()
}

#[test]
fn equal_weights_give_unit_theta() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.05", "0", "20", "20000", "2");
    let ev = t.path().join("ev");
    ok(&[
        "evolve", "--in", s(&net), "--mu-w", "0", "--sigma-w", "0", "--mu-x", "0", "--sigma-x", "0", "--steps", "1", "--seed", "1",
        "--out", s(&ev),
    ]);
    let an = t.path().join("an");
    ok(&["analyze", "--in", s(&net), "--panel", s(&ev.join("weights.tsv")), "--out", s(&an)]);
    let theta_text = read(an.join("strength_degree_fit.tsv"));
    assert!(theta_text.lines().nth(1).unwrap().starts_with("1\t"), "{theta_text}");
    let an2 = t.path().join("an2");
    ok(&["analyze", "--in", s(&net), "--panel", s(&ev.join("weights.tsv")), "--out", s(&an2)]);
    assert_eq!(outputs(&an), outputs(&an2));
}

#[test]
fn mismatched_panel_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.05", "0", "20", "500", "2");
    let other = gen(&t.path().join("other"), "0.05", "0", "20", "400", "2");
    let ev = t.path().join("ev");
    ok(&[
        "evolve", "--in", s(&other), "--mu-x", "0", "--sigma-x", "0", "--steps", "1", "--seed", "1", "--out", s(&ev),
    ]);
    let o = run(&["analyze", "--in", s(&net), "--panel", s(&ev.join("weights.tsv")), "--out", s(&t.path().join("an"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_recovers_the_entry_exponent() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.2", "0", "10", "1000000", "4");
    let an = t.path().join("an");
    ok(&["analyze", "--in", s(&net), "--out", s(&an)]);
    let phi = table_value(&an.join("degree_tail.tsv"), "exponent");
    assert!((phi - 2.25).abs() < 0.15, "{phi}");
}

fn write_g(path: &Path, g: &[f64]) {
    let mut text = String::from("g\n");
    for x in g {
        text.push_str(&format!("{x}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn gof_ranks_the_generating_family_first() {
    let t = tempfile::tempdir().unwrap();
    let mut r = wgrowth::rng::stream(12);
    let m = DistributionModel::Eq4 { vg: 0.3658 };
    let g = m.sample(5000, &mut r).unwrap();
    let input = t.path().join("g.tsv");
    write_g(&input, &g);
    let out = t.path().join("gof");
    ok(&["gof", "--in", s(&input), "--families", "gauss,laplace,ged,eq4", "--out", s(&out)]);
    let text = read(out.join("gof.tsv"));
    let mut rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[3].parse().unwrap())
        })
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    assert_eq!(rows[0].0, "eq4", "{text}");
}

#[test]
fn gof_centers_within_periods() {
    let t = tempfile::tempdir().unwrap();
    let mut r = wgrowth::rng::stream(13);
    let g = DistributionModel::Eq4 { vg: 0.5 }.sample(2000, &mut r).unwrap();
    let input = t.path().join("g.tsv");
    let mut text = String::from("period\tnode\tinitial\tg\n");
    for (i, v) in g.iter().enumerate() {
        let shift = if i % 2 == 0 { 3.0 } else { -1.0 };
        text += &format!("{}\t{i}\t1\t{}\n", i % 2, v + shift);
    }
    fs::write(&input, text).unwrap();
    let out = t.path().join("gof");
    ok(&["gof", "--in", s(&input), "--families", "gauss", "--center", "mean", "--out", s(&out)]);
    let row = read(out.join("gof.tsv"));
    let mean: f64 = row.lines().nth(1).unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(mean.abs() < 1e-12, "{row}");
    let o = run(&["gof", "--in", s(&input), "--center", "median", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gof_rejects_bad_requests() {
    let t = tempfile::tempdir().unwrap();
    let few = t.path().join("few.tsv");
    write_g(&few, &[0.1, -0.2, 0.3]);
    let o = run(&["gof", "--in", s(&few), "--out", s(&t.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let many = t.path().join("many.tsv");
    write_g(&many, &(0..50).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>());
    let o = run(&["gof", "--in", s(&many), "--families", "gauss,cauchy", "--out", s(&t.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_cell_sweep_matches_library() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.005", "0", "30", "3000", "8");
    let out = t.path().join("sw");
    ok(&[
        "sweep", "--reference", s(&net), "--a-grid", "0.002", "--b-grid", "0.5", "--replicates", "2", "--permutations", "9",
        "--seed", "4", "--out", s(&out),
    ]);
    let reference = wgrowth::calibration::summarize_reference(&wgrowth::io::read_edge_list(std::io::BufReader::new(
        fs::File::open(&net).unwrap(),
    ))
    .unwrap())
    .unwrap();
    let opts = CalibrationOptions { replicates: 2, permutations: 9, seed: 4, ..Default::default() };
    let cell = evaluate_cell(0.002, 0.5, &reference, &opts).unwrap();
    let row = read(out.join("sweep.tsv"));
    let f: Vec<f64> = row.lines().nth(1).unwrap().split('\t').map(|x| x.parse().unwrap()).collect();
    assert_eq!(f, vec![cell.a, cell.b, cell.expected_entrants, cell.mantel_r, cell.mantel_p, cell.ks_degree, 2.0]);
}

const FLOW_HEADER: &str = "year\tsource\ttarget\tcommodity\tvalue\n";

#[test]
fn ingest_single_record() {
    let t = tempfile::tempdir().unwrap();
    let input = t.path().join("flows.tsv");
    fs::write(&input, format!("{FLOW_HEADER}2000\tA\tB\t0711\t500\n")).unwrap();
    let out = t.path().join("in");
    ok(&["ingest", "--in", s(&input), "--year", "2000", "--out", s(&out)]);
    let net = read(out.join("network.tsv"));
    assert_eq!(net, "edge_id\tsource\ttarget\tself_loop\n0\t0\t1\t0\n");
    assert_eq!(read(out.join("diagnostics.tsv")), "line\tkind\treason\n");
    let summary = read_summary(read(out.join("summary.txt")).as_bytes()).unwrap();
    assert_eq!((summary.node_count, summary.link_count), (2, 1));
}

#[test]
fn ingest_reports_format_errors_with_lines() {
    let t = tempfile::tempdir().unwrap();
    let input = t.path().join("flows.tsv");
    fs::write(&input, "year\tsrc\tdst\n2000\tA\tB\n").unwrap();
    let o = run(&["ingest", "--in", s(&input), "--year", "2000", "--out", s(&t.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn ingest_panel_growth() {
    let t = tempfile::tempdir().unwrap();
    let input = t.path().join("flows.tsv");
    fs::write(&input, format!("{FLOW_HEADER}1990\tA\tB\t1\t100\n1991\tA\tB\t1\t200\n1991\tA\tC\t1\t40\n")).unwrap();
    let out = t.path().join("in");
    ok(&["ingest", "--in", s(&input), "--all-years", "--out", s(&out)]);
    let g = read(out.join("growth_rates.tsv"));
    let b_row = g.lines().find(|l| l.starts_with("1990\t1\t")).unwrap();
    let v: f64 = b_row.rsplit('\t').next().unwrap().parse().unwrap();
    assert!((v - 2f64.ln()).abs() < 1e-15);
    assert!(read(out.join("diagnostics.tsv")).contains("below reporting threshold"));
}

#[test]
fn manifests_replay_bitwise() {
    let t = tempfile::tempdir().unwrap();
    let net = gen(&t.path().join("net"), "0.01", "0.1", "20", "4000", "21");
    let ev = t.path().join("ev");
    ok(&[
        "evolve", "--in", s(&net), "--mu-w", "0", "--sigma-w", "1", "--mu-x", "-0.01", "--sigma-x", "0.1", "--steps", "3", "--seed",
        "9", "--out", s(&ev),
    ]);
    let sw = t.path().join("sw");
    ok(&[
        "sweep", "--reference", s(&net), "--entrants", "0:60:30", "--b-grid", "0,1", "--replicates", "2", "--permutations", "9",
        "--seed", "2", "--out", s(&sw),
    ]);
    for dir in [t.path().join("net"), ev, sw] {
        let before = outputs(&dir);
        let manifest = read(dir.join("manifest.txt"));
        let sub = manifest.lines().find_map(|l| l.strip_prefix("subcommand=")).unwrap().to_string();
        fs::copy(dir.join("manifest.txt"), t.path().join("m.txt")).unwrap();
        for entry in fs::read_dir(&dir).unwrap() {
            fs::remove_file(entry.unwrap().path()).unwrap();
        }
        ok(&[&sub, "--config", s(&t.path().join("m.txt"))]);
        assert_eq!(outputs(&dir), before, "{sub}");
    }
}
