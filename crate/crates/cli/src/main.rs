use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdpr_cli::{run, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "fdpr",
    version,
    about = "Quasi-interpolation experiments: basis functions, convergence, Lebesgue constants"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dump the basis functions of the first node level on the evaluation grid.
    Basis(Flags),
    /// Sup-norm errors and fitted convergence slope over the node levels.
    Converge(Flags),
    /// Lebesgue constants over the node levels.
    Lebesgue(Flags),
    /// Theoretical constants and bounds.
    Theory(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Flat `key = value` config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mls, shepard, l1-cold, l1-warm or l1-colgen.
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    degree: Option<String>,
    /// For example gaussian:nu=1 or algebraic:k=6.2.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    delta_factor: Option<String>,
    /// Nodes per axis, comma separated for a sweep.
    #[arg(long)]
    nodes: Option<String>,
    /// Perturbation seed.
    #[arg(long)]
    seed: Option<String>,
    /// Evaluation points per axis.
    #[arg(long)]
    grid: Option<String>,
    /// Output CSV path; standard output when absent or `-`.
    #[arg(long)]
    out: Option<String>,
}

fn load(command: Command, flags: Flags) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(None, format!("{}: {e}", path.display())))?;
            let mut c = ExperimentConfig::parse_unchecked(&text)?;
            c.set("command", &command.to_string(), None)?;
            c
        }
        None => {
            let mut c = ExperimentConfig::default();
            c.command = command;
            c
        }
    };
    let overrides = [
        ("engine", flags.engine),
        ("degree", flags.degree),
        ("weight", flags.weight),
        ("delta_factor", flags.delta_factor),
        ("nodes", flags.nodes),
        ("seed", flags.seed),
        ("grid", flags.grid),
        ("out", flags.out),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v, None)
                .map_err(|e| CliError::config(None, format!("--{}: {e}", key.replace('_', "-"))))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FDPR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::config(None, format!("FDPR_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(None, format!("FDPR_THREADS: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Basis(f) => (Command::Basis, f),
        Sub::Converge(f) => (Command::Converge, f),
        Sub::Lebesgue(f) => (Command::Lebesgue, f),
        Sub::Theory(f) => (Command::Theory, f),
    };
    let result = threads().and_then(|_| load(command, flags)).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdpr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
