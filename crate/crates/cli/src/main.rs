mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Link usage analysis over an article graph and its clickstream.
#[derive(Parser, Debug)]
#[command(name = "linkpop", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for both sampling and the similarity projection.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Tab-separated `src trg` links (.gz accepted).
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    /// Clickstream rows `referrer resource [type] count`.
    #[arg(long, global = true)]
    clickstream: Option<PathBuf>,
    /// Per-link feature table with header.
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    /// `name<TAB>text` lines for text similarity.
    #[arg(long, global = true)]
    texts: Option<PathBuf>,
    /// `name<TAB>category...` lines for topic similarity.
    #[arg(long, global = true)]
    categories: Option<PathBuf>,
    /// Minimum summed transitions for a link to count as used.
    #[arg(long, global = true)]
    threshold: Option<u64>,
    /// Stop at the first malformed input row instead of skipping it.
    #[arg(long, global = true)]
    fail_fast: bool,
    /// Recompute network features from the graph instead of trusting the file.
    #[arg(long, global = true)]
    recompute_network_features: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse links and clickstream into the graph and transition log.
    Build,
    /// Join link features (and similarities) onto the graph.
    Features,
    /// Draw a random subset of source articles from the feature table.
    Sample {
        #[arg(long)]
        size: Option<usize>,
    },
    /// Usage concentration statistics and distribution fits.
    Attention,
    /// Per-feature two-stage regression battery.
    Hurdle {
        /// Fit on the sampled table.
        #[arg(long)]
        on_sample: bool,
    },
    /// Bayesian comparison of transition hypotheses.
    Hyptrails,
    /// Weighted PageRank against observed article views.
    Pagerank {
        /// Correlate only over articles with incoming transitions.
        #[arg(long)]
        viewed_only: bool,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let i = &cli.inputs;
    for (slot, flag) in [
        (&mut cfg.edges, &i.edges),
        (&mut cfg.clickstream, &i.clickstream),
        (&mut cfg.features, &i.features),
        (&mut cfg.texts, &i.texts),
        (&mut cfg.categories, &i.categories),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    if let Some(t) = i.threshold {
        cfg.threshold = t;
    }
    cfg.fail_fast |= i.fail_fast;
    cfg.recompute_network_features |= i.recompute_network_features;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.sample_seed = seed;
        cfg.projection_seed = seed;
    }
    match &cli.command {
        Command::Sample { size: Some(n) } => cfg.sample_size = *n,
        Command::Hurdle { on_sample: true } => cfg.hurdle_on_sample = true,
        Command::Pagerank { viewed_only: true } => cfg.viewed_only = true,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::Build => commands::build(&cfg),
        Command::Features => commands::features(&cfg),
        Command::Sample { .. } => commands::sample(&cfg),
        Command::Attention => commands::attention(&cfg),
        Command::Hurdle { .. } => commands::hurdle(&cfg),
        Command::Hyptrails => commands::hyptrails(&cfg),
        Command::Pagerank { .. } => commands::pagerank(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
