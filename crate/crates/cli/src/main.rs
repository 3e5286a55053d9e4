use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qdlab::{run_experiment, summarize, Algo, Profile, RunConfig};

#[derive(Parser)]
#[command(name = "qdlab", version, about = "Seeded quality-diversity experiments on sparse-reward tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one environment for every seed of a profile.
    Run(RunArgs),
    /// Rebuild summary.csv of an existing run directory.
    Summarize {
        run_dir: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// serene, ns, me, nsga2 or rnd
    #[arg(long, default_value = "serene")]
    algo: String,
    /// Built-in environment (curling, hardmaze, redundant_arm) or a geometry file
    #[arg(long, default_value = "hardmaze")]
    env: String,
    /// desk (100k evaluations, 5 seeds) or paper (500k, 15 seeds)
    #[arg(long, default_value = "desk")]
    profile: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Override the number of seeds of the profile.
    #[arg(long)]
    seeds: Option<u64>,
    /// Override the evaluation budget of the profile.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    snapshot_every: Option<u64>,
    /// Leave genomes out of the archive files.
    #[arg(long)]
    no_genomes: bool,
    /// JSON run configuration; command-line overrides still apply.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => {
            let algo: Algo = args.algo.parse()?;
            let profile: Profile = args.profile.parse()?;
            let out = args.out.clone().context("--out is required without --config")?;
            RunConfig::from_profile(algo, &args.env, profile, args.seed_base, out)
        }
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(n) = args.seeds {
        cfg.seeds = (args.seed_base..args.seed_base + n).collect();
    }
    if let Some(b) = args.budget {
        cfg.serene.bud = b;
        cfg.serene.k_bud = cfg.serene.k_bud.min(b);
    }
    if let Some(s) = args.snapshot_every {
        cfg.snapshot_every = s;
    }
    if args.no_genomes {
        cfg.with_genomes = false;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = build_config(&args)?;
            eprintln!(
                "{} on {}: {} seed(s), budget {}",
                cfg.algo,
                cfg.env,
                cfg.seeds.len(),
                cfg.serene.bud
            );
            let dir = run_experiment(&cfg)?;
            println!("{}", dir.join("summary.csv").display());
        }
        Command::Summarize { run_dir } => {
            let path = summarize(&run_dir)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
