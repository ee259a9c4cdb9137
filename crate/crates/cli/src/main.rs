use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pinn_cli::config::{ProblemKind, RunConfig};
use pinn_cli::reference::load_or_generate;
use pinn_cli::{pipeline, sweep, verify, CliError, SweepConfig};
use pinn_tableau::{default_precision_bits, verify_tableau, TableauCache};

#[derive(Debug, Parser)]
#[command(name = "pinn", version, about = "Physics-informed neural network benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file (run: a run config, sweep: a sweep config,
    /// gen-reference: a run config whose [reference] table is used).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the full-size settings instead of the desk-scale profile.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads per run (sweep: cells run at the same time).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and report its relative L2 error.
    Run {
        /// Problem to run with its default profile when no config is given.
        #[arg(long, value_enum)]
        problem: Option<ProblemKind>,
    },
    /// Run the Cartesian product of the config's axes.
    Sweep,
    /// Generate (or load from the cache) a Gauss-Legendre tableau.
    GenTableau {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        precision_bits: Option<u32>,
    },
    /// Generate (or load from the cache) reference data for a problem.
    GenReference {
        #[arg(long, value_enum)]
        problem: Option<ProblemKind>,
    },
    /// Run the fast invariant checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp_secs()
        .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run_config(cli: &Cli, problem: Option<ProblemKind>) -> Result<RunConfig, CliError> {
    let mut config = match (&cli.config, problem) {
        (Some(path), None) => RunConfig::from_file(path)?,
        (Some(path), Some(p)) => {
            let c = RunConfig::from_file(path)?;
            if c.problem != p {
                return Err(CliError::Config(format!(
                    "--problem {p} contradicts problem {} in {}",
                    c.problem,
                    path.display()
                )));
            }
            c
        }
        (None, Some(p)) => RunConfig::new(p),
        (None, None) => return Err(CliError::Config("give --config or --problem".into())),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.out.is_some() {
        config.out_dir = cli.out.clone();
    }
    if cli.paper_scale {
        config.paper_scale = Some(true);
    }
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { problem } => {
            let plan = run_config(cli, *problem)?.resolve()?;
            let outcome = pipeline::run(&plan)?;
            println!("grid={}", outcome.grid_path.display());
            println!("summary={}", outcome.summary_path.display());
            println!("rel_l2={}", outcome.summary.rel_l2);
        }
        Command::Sweep => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| CliError::Config("sweep needs --config".into()))?;
            let mut config = SweepConfig::from_file(path)?;
            if cli.seed.is_some() {
                config.base.seed = cli.seed;
            }
            if cli.paper_scale {
                config.base.paper_scale = Some(true);
            }
            if let Some(w) = cli.workers {
                config.parallel = w;
            }
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs/sweep"));
            let outcome = sweep::sweep(&config, &out)?;
            print!("{}", outcome.markdown);
            let failed = outcome.rows.iter().filter(|r| r.summary.error.is_some()).count();
            println!(
                "cells={} failed={failed} ledger={}",
                outcome.rows.len(),
                outcome.ledger.display()
            );
        }
        Command::GenTableau { q, precision_bits } => {
            if *q == 0 {
                return Err(CliError::Config("q must be at least 1".into()));
            }
            let bits = precision_bits.unwrap_or_else(|| default_precision_bits(*q));
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs/tableaux"));
            let cache = TableauCache::new(&dir);
            let (tableau, status) = cache.get_or_generate(*q, bits)?;
            let report = verify_tableau(&tableau);
            println!("tableau={}", cache.path(*q, bits).display());
            println!("status={status:?}");
            println!("order_residual={:e}", report.order_residual());
            if !report.passes(1e-10 * *q as f64) {
                return Err(CliError::Numerical(format!(
                    "tableau q={q} fails verification: {report:?}"
                )));
            }
        }
        Command::GenReference { problem } => {
            let plan = run_config(cli, *problem)?.resolve()?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs/reference"));
            let (grid, path, status) = load_or_generate(&dir, plan.problem, plan.reference.as_ref())?;
            let (nt, nx) = grid.shape();
            println!("reference={}", path.display());
            println!("status={status:?} shape={nt}x{nx}");
        }
        Command::Verify => {
            let checks = verify::run_checks();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Numerical(format!("{failed} invariant check(s) failed")));
            }
        }
    }
    Ok(())
}
