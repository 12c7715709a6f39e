mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gasket_core::diffusion::MuRule;

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "gasket",
    version,
    about = "Percolation gasket experiments: clusters, resistances, walks and exponents"
)]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads (overrides GASKET_THREADS and the config)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample lattices and write the largest cluster of each
    Generate(GenerateArgs),
    /// Effective resistances of a network or annulus resistances of snapshots
    Resist(ResistArgs),
    /// Simulate the jump process and its return probability
    Walk(WalkArgs),
    /// Estimate the volume, resistance and spectral exponents
    Exponents(ExponentsArgs),
    /// Run the invariant suite, or check a run manifest
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    replicas: Option<u32>,
    /// also write cable networks
    #[arg(long)]
    cable: bool,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
}

#[derive(Args)]
struct ResistArgs {
    /// network file; resistances between all vertex pairs
    #[arg(long, conflicts_with = "snapshots")]
    network: Option<PathBuf>,
    /// cluster snapshots or directories holding them
    #[arg(long, num_args = 1..)]
    snapshots: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u32>>,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    start: Option<u64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long, value_parser = ["count", "degree"])]
    mu: Option<String>,
    /// time grid for the return probability
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
}

#[derive(Args)]
struct ExponentsArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u32>>,
    #[arg(long)]
    replicas: Option<u32>,
}

#[derive(Args)]
struct VerifyArgs {
    /// replace one round-trip fixture by a non-metric matrix
    #[arg(long)]
    inject_nonmetric: bool,
    #[arg(long)]
    case_scale: Option<f64>,
    /// check the digests of a previous run instead of running the suite
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn configure_threads(flag: Option<usize>, cfg: &Config) -> CliResult<()> {
    let env = match std::env::var("GASKET_THREADS") {
        Ok(s) => Some(
            s.trim().parse::<usize>().map_err(|_| CliError::config(format!("GASKET_THREADS={s:?} is not a count")))?,
        ),
        Err(_) => None,
    };
    let Some(n) = flag.or(env).or(cfg.threads) else {
        return Ok(());
    };
    if n == 0 {
        return Err(CliError::config("thread count must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.output_dir.is_some() {
        cfg.output_dir = cli.output_dir;
    }
    configure_threads(cli.threads, &cfg)?;

    match cli.command {
        Command::Generate(a) => {
            let g = &mut cfg.generate;
            set(&mut g.sizes, a.size.map(|l| vec![l]));
            set(&mut g.p, a.p);
            set(&mut g.replicas, a.replicas);
            g.cable |= a.cable;
            set(&mut g.eps, a.eps);
            set(&mut g.c0, a.c0);
            set(&mut g.a0, a.a0);
            commands::generate::run(&cfg)
        }
        Command::Resist(a) => {
            let r = &mut cfg.resist;
            if a.network.is_some() {
                r.network = a.network;
                r.snapshots.clear();
            }
            if !a.snapshots.is_empty() {
                r.snapshots = a.snapshots;
                r.network = None;
            }
            set(&mut r.scales, a.scales);
            commands::resist::run(&cfg)
        }
        Command::Walk(a) => {
            let w = &mut cfg.walk;
            if a.network.is_some() {
                w.network = a.network;
            }
            if a.start.is_some() {
                w.start = a.start;
            }
            set(&mut w.tmax, a.tmax);
            set(&mut w.replicas, a.replicas);
            if let Some(m) = a.mu {
                w.mu = MuRule::parse(&m)?;
            }
            set(&mut w.times, a.times);
            commands::walk::run(&cfg)
        }
        Command::Exponents(a) => {
            let e = &mut cfg.exponents;
            set(&mut e.kappa, a.kappa);
            set(&mut e.sizes, a.sizes);
            set(&mut e.scales, a.scales);
            set(&mut e.replicas, a.replicas);
            commands::exponents::run(&cfg)
        }
        Command::Verify(a) => {
            if let Some(path) = a.manifest {
                return commands::verify::run_manifest(&path);
            }
            cfg.verify.inject_nonmetric |= a.inject_nonmetric;
            set(&mut cfg.verify.case_scale, a.case_scale);
            commands::verify::run(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gasket: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
