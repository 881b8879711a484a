use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mde_cli::{run_scenario, AnalysisFlags, Registry, RunError, RunOptions, SchemeChoice};

#[derive(Parser)]
#[command(name = "mde-lab", version, about = "Run measure differential equation scenarios")]
struct Cli {
    /// Directory of extra scenario files.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or named scenario.
    Run(RunArgs),
    /// List built-in and registered scenarios.
    List,
    /// Run and compare all three schemes.
    Compare(RunArgs),
    /// Run and write a convergence study.
    Converge(RunArgs),
    /// Run and write trajectory representations.
    Represent(RunArgs),
    /// Run and write weak-form residuals.
    Residual(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, manifest, or scenario name.
    scenario: String,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resolutions, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// las, lagrangian, mean-velocity or all.
    #[arg(long)]
    scheme: Option<SchemeChoice>,
    /// Reserved; runs use no randomness.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let registry = Registry::with_dir(cli.registry.as_deref())?;
    let (args, flags) = match cli.command {
        Command::List => {
            for e in registry.entries() {
                println!("{}\t{}", e.name, e.description);
            }
            return Ok(());
        }
        Command::Run(a) => (a, AnalysisFlags::default()),
        Command::Compare(a) => (a, AnalysisFlags { compare: true, ..Default::default() }),
        Command::Converge(a) => (a, AnalysisFlags { converge: true, ..Default::default() }),
        Command::Represent(a) => (a, AnalysisFlags { represent: true, ..Default::default() }),
        Command::Residual(a) => (a, AnalysisFlags { residual: true, ..Default::default() }),
    };
    let scenario = registry.resolve(&args.scenario)?;
    let opts = RunOptions {
        out: args.out,
        ns: args.n,
        scheme: args.scheme,
        flags,
        seed: args.seed,
    };
    let manifest = run_scenario(scenario, &opts)?;
    println!(
        "{}: {} artifacts in {:.3} s",
        manifest.config.name,
        manifest.artifacts.len(),
        manifest.wall_time_s
    );
    for s in &manifest.skipped {
        println!("skipped {}: {}", s.artifact, s.reason);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
