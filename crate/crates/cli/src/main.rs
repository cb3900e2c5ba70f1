use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sgmor_cli::{parse_order_range, resolve, CliError, Pipeline, PipelineConfig, Stage};

/// Stochastic Galerkin model reduction for circuits with random elements.
#[derive(Parser)]
#[command(name = "sgmor", version)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized checks; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Reduced orders as an inclusive range, e.g. `10..60`.
    #[arg(long, global = true, value_parser = parse_order_range)]
    r: Option<(usize, usize)>,

    /// Step between reduced orders.
    #[arg(long, global = true)]
    step: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the Galerkin system from the circuit.
    Assemble,
    /// Per-output Hardy norms.
    Norms,
    /// Rankings, selection and pruning certificates.
    Sparsify,
    /// Krylov reduction sweep, deflation and κ.
    Reduce,
    /// Transient validation of the certificates.
    Simulate,
    /// Bundle all certificates into one report.
    Report,
    /// All stages in order.
    Run,
}

fn load(args: &Args) -> Result<Pipeline, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <file> is required".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some((lo, hi)) = args.r {
        cfg.mor.r_min = lo;
        cfg.mor.r_max = hi;
    }
    if let Some(step) = args.step {
        cfg.mor.r_step = step;
    }
    Pipeline::new(resolve(cfg)?)
}

fn execute(args: &Args) -> Result<(), CliError> {
    let pipeline = load(args)?;
    let log = |stage: Stage, summary: &str| println!("{}: {summary}", stage.name());
    let stage = match args.command {
        Command::Assemble => Stage::Assemble,
        Command::Norms => Stage::Norms,
        Command::Sparsify => Stage::Sparsify,
        Command::Reduce => Stage::Reduce,
        Command::Simulate => Stage::Simulate,
        Command::Report => Stage::Report,
        Command::Run => return pipeline.run_all(log),
    };
    let summary = pipeline.run_stage(stage)?;
    log(stage, &summary);
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
