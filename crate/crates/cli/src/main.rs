use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jjtls_cli::{run, RunOptions, Verb};

#[derive(Parser)]
#[command(name = "jjtls", version, about = "TLS defects in a driven Josephson-junction resonator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Recorded in the manifest; no command is stochastic
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// |lambda| of both regimes versus resonator detuning
    SweepCoupling,
    /// Full model against the effective model over time
    Compare,
    /// iSWAP durations, fidelities and operation budgets
    Gate,
    /// Quadrature weights, measurement phases, correlation identity, dispersive pull
    Readout,
    /// Lie-closure dimension of the effective generators
    Universality,
}

impl From<Command> for Verb {
    fn from(c: Command) -> Self {
        match c {
            Command::SweepCoupling => Verb::SweepCoupling,
            Command::Compare => Verb::Compare,
            Command::Gate => Verb::Gate,
            Command::Readout => Verb::Readout,
            Command::Universality => Verb::Universality,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { threads: cli.threads, seed: cli.seed };
    match run(cli.command.into(), &text, &cli.out, &opts) {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
