use std::path::PathBuf;
use std::process::ExitCode;

use blowup_cli::{run, Command, Format, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blowup", version, about = "Blow-up criteria and simulations for u_t = Δu + ψ(t) f(u)")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Run directory (default: runs/<run name>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Reserved; all algorithms are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Every task declared in the config, then its sweep.
    Run { config: PathBuf },
    /// Nonlinearity profile report.
    Analyze { config: PathBuf },
    /// Criterion verdicts.
    Classify { config: PathBuf },
    /// PDE and ODE runs.
    Simulate { config: PathBuf },
    Sweep { config: PathBuf },
    /// Envelope property suite over the declared reaction terms.
    VerifyProperties { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, path) = match cli.command {
        Cmd::Run { config } => (Command::Run, config),
        Cmd::Analyze { config } => (Command::Analyze, config),
        Cmd::Classify { config } => (Command::Classify, config),
        Cmd::Simulate { config } => (Command::Simulate, config),
        Cmd::Sweep { config } => (Command::Sweep, config),
        Cmd::VerifyProperties { config } => (Command::VerifyProperties, config),
    };
    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let opts = RunOptions { out: cli.out, jobs, seed: cli.seed, format: cli.format };
    match run(cmd, &path, &opts) {
        Ok(m) => {
            for t in &m.tasks {
                match &t.error {
                    Some(e) => eprintln!("{}: {} ({e})", t.name, t.status),
                    None => eprintln!("{}: {} [{:.2}s]", t.name, t.status, t.seconds),
                }
            }
            eprintln!("{} artifacts written", m.artifacts.len());
            if m.failed_tasks() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
