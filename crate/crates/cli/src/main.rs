//! `lclab`: config-driven runs of scans, protocol sweeps, bound reports and front fits.

mod commands;
mod config;
mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use lclab_core::dynamics::DEFAULT_CAP_SITES;
use lclab_core::protocol::SaturationRequest;
use output::{Meta, OutDir};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "lclab", version, about = "Light-cone laboratory for long-range spin systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config for the chosen command.
    #[arg(long, global = true, env = "LCLAB_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "LCLAB_OUT", default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "LCLAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true, env = "LCLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Largest number of simulated sites.
    #[arg(long, global = true, env = "LCLAB_CAP_SITES")]
    cap_sites: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Commutator norms and approximation errors over a time grid.
    Scan,
    /// State-transfer saturation sweep.
    Protocol,
    /// Bound constants, sampled bound curves and light-cone fronts.
    Bounds,
    /// Geometric constant and lattice inequalities.
    ValidateLattice,
    /// Light-cone front extraction and linear fit.
    Front,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Protocol => "protocol",
            Command::Bounds => "bounds",
            Command::ValidateLattice => "validate-lattice",
            Command::Front => "front",
        }
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_REGIME: u8 = 4;
const EXIT_VALIDATION: u8 = 5;

fn exit_code(err: &anyhow::Error) -> u8 {
    use lclab_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::ResourceLimit { .. }) => EXIT_RESOURCE,
        Some(Error::OutOfRegime { .. } | Error::Regime(_)) => EXIT_REGIME,
        Some(Error::InvalidArgument(_)) => EXIT_CONFIG,
        None if err.to_string().starts_with("config") => EXIT_CONFIG,
        None => EXIT_FAILURE,
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let Some(path) = cli.config.as_deref() else {
        anyhow::bail!("config required: pass --config PATH or set LCLAB_CONFIG");
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let cmd = cli.command;
    let meta = |value: &serde_json::Value, cap: usize| Meta::new(cmd.name(), value, cli.seed, cap);
    let cap = cli.cap_sites.unwrap_or(DEFAULT_CAP_SITES);
    match cmd {
        Command::Scan => {
            let (c, v) = config::load::<config::ScanConfig>(path)?;
            let mut out = OutDir::new(&cli.out, meta(&v, cap))?;
            commands::scan(&c, cli.seed, cap, &mut out)?;
            report(&out);
        }
        Command::Protocol => {
            let (mut c, v) = config::load::<SaturationRequest>(path)?;
            if let Some(n) = cli.cap_sites {
                c.cap_sites = n;
            }
            let mut out = OutDir::new(&cli.out, meta(&v, c.cap_sites))?;
            commands::protocol(&c, &mut out)?;
            report(&out);
        }
        Command::Bounds => {
            let (c, v) = config::load::<config::BoundsConfig>(path)?;
            let mut out = OutDir::new(&cli.out, meta(&v, cap))?;
            commands::bounds(&c, &mut out)?;
            report(&out);
        }
        Command::ValidateLattice => {
            let (c, v) = config::load::<config::LatticeConfig>(path)?;
            let mut out = OutDir::new(&cli.out, meta(&v, cap))?;
            let pass = commands::validate_lattice(&c, &mut out)?;
            report(&out);
            return Ok(pass);
        }
        Command::Front => {
            let (c, v) = config::load::<config::FrontConfig>(path)?;
            let mut out = OutDir::new(&cli.out, meta(&v, cap))?;
            commands::front(&c, dir, &mut out)?;
            report(&out);
        }
    }
    Ok(true)
}

fn report(out: &OutDir) {
    for p in &out.written {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: validation failed; see validate_lattice.json");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
