use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cmd;
mod params;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");

/// Growing weighted network simulator and analysis toolkit.
#[derive(Parser)]
#[command(name = "wgrowth", version = VERSION)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a multigraph and write its edge list.
    Generate(GenerateArgs),
    /// Assign and evolve link weights on an edge list.
    Evolve(EvolveArgs),
    /// Degree, strength and growth-rate tables for a network and optional panel.
    Analyze(AnalyzeArgs),
    /// Fit candidate densities to growth rates and compare goodness of fit.
    Gof(GofArgs),
    /// Score an (a, b) grid against a reference network.
    Sweep(SweepArgs),
    /// Aggregate a bilateral flow file into networks and panels.
    Ingest(IngestArgs),
}

#[derive(Args)]
pub struct Common {
    /// key=value file supplying any flag; flags take precedence.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    /// Entry probability per endpoint.
    #[arg(long)]
    a: Option<f64>,
    /// Weight of uniform attachment in the mixture.
    #[arg(long)]
    b: Option<f64>,
    /// Initial nodes, each with a self-loop.
    #[arg(long)]
    n0: Option<usize>,
    /// Links to add.
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    /// Edge list.
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu_w: Option<f64>,
    #[arg(long)]
    sigma_w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_x: Option<f64>,
    #[arg(long)]
    sigma_x: Option<f64>,
    /// Set mu_x = -sigma_x²/2 so shocks have mean one.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    martingale: Option<bool>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Edge list.
    #[arg(long = "in")]
    input: Option<String>,
    /// Weight panel written by `evolve`.
    #[arg(long)]
    panel: Option<String>,
    #[arg(long)]
    bins_per_decade: Option<usize>,
    /// Bins for the size-variance relation.
    #[arg(long)]
    size_bins: Option<usize>,
    /// `log` or `quantile`.
    #[arg(long)]
    size_binning: Option<String>,
    /// Central share of nodes kept for the size-variance fit.
    #[arg(long)]
    central: Option<f64>,
    #[arg(long)]
    k_min: Option<f64>,
    #[arg(long)]
    k_max: Option<f64>,
}

#[derive(Args)]
pub struct GofArgs {
    #[command(flatten)]
    common: Common,
    /// Table with a `g` column (one value per row).
    #[arg(long = "in")]
    input: Option<String>,
    /// Comma-separated families.
    #[arg(long)]
    families: Option<String>,
    /// `none`, or `mean` to subtract the mean of each period (or of all rows without one).
    #[arg(long)]
    center: Option<String>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Reference summary or edge list.
    #[arg(long)]
    reference: Option<String>,
    /// Expected entrant grid: `a,b,c` or `start:stop:step`.
    #[arg(long)]
    entrants: Option<String>,
    /// Entry-probability grid; overrides --entrants.
    #[arg(long)]
    a_grid: Option<String>,
    #[arg(long)]
    b_grid: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Mantel permutations per replicate.
    #[arg(long)]
    permutations: Option<usize>,
    /// `degree_rank` or `random`.
    #[arg(long)]
    alignment: Option<String>,
    /// `mantel`, `ks` or `combined`.
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct IngestArgs {
    #[command(flatten)]
    common: Common,
    /// Flow file.
    #[arg(long = "in")]
    input: Option<String>,
    #[arg(long)]
    year: Option<i32>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    all_years: Option<bool>,
    /// Reporting threshold in thousands.
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep flow directions separate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    directed: Option<bool>,
    /// Existing label table to extend.
    #[arg(long)]
    labels: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Generate(a) => cmd::generate(a),
        Command::Evolve(a) => cmd::evolve(a),
        Command::Analyze(a) => cmd::analyze(a),
        Command::Gof(a) => cmd::gof(a),
        Command::Sweep(a) => cmd::sweep(a),
        Command::Ingest(a) => cmd::ingest(a),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
