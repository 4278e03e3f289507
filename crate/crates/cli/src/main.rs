use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dampwave_cli::{commands, Options};

/// Blow-up laboratory for the radially symmetric damped semilinear wave equation.
#[derive(Parser)]
#[command(name = "dampwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured datum and write trajectory.csv and summary.json.
    Simulate(Common),
    /// Check the blow-up hypotheses for the configured datum.
    Check(Common),
    /// Estimate the weighted Poincare constant.
    Alpha(Common),
    /// Scan the configured (lambda, kappa) ranges for a high-energy blow-up datum.
    Search(Common),
    /// Simulate every cell of the configured parameter sweep.
    Sweep(Common),
    /// Replay a stored run through the oracle checks.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    config: PathBuf,
    /// Output directory, overriding output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress stdout and warnings.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, args): (fn(&std::path::Path, &Options) -> i32, Common) = match cli.command {
        Command::Simulate(a) => (commands::cmd_simulate, a),
        Command::Check(a) => (commands::cmd_check, a),
        Command::Alpha(a) => (commands::cmd_alpha, a),
        Command::Search(a) => (commands::cmd_search, a),
        Command::Sweep(a) => (commands::cmd_sweep, a),
        Command::Verify(a) => (commands::cmd_verify, a),
    };
    let opts = Options {
        out: args.out,
        quiet: args.quiet,
    };
    ExitCode::from(run(&args.config, &opts) as u8)
}
