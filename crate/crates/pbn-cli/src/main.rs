use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pbn_cli::check::cmd_check;
use pbn_cli::commands::{cmd_eval, cmd_evolve, cmd_stationary, CmdOutput};
use pbn_cli::model::CliError;

/// Probability bracket calculator over finite spaces: query
/// evaluation, Markov evolution, stationary distributions, and
/// model consistency checks.
#[derive(Parser)]
#[command(name = "pbn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Model file (JSON)
    #[arg(short, long)]
    model: PathBuf,
    /// Numeric tolerance: series tail for continuous evolution, and
    /// every identity threshold in `check`
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one query, e.g. "P(A|B)" or "E[sq(X)|Even]"
    Eval {
        #[command(flatten)]
        common: Common,
        query: String,
    },
    /// Print the evolving distribution as CSV, one row per time step
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Final time (inclusive)
        #[arg(long = "t-max")]
        t_max: f64,
        /// Time between rows
        #[arg(long)]
        step: f64,
        /// Append an E[name] column for this observable
        #[arg(long)]
        observable: Option<String>,
    },
    /// Print the stationary distribution as CSV
    Stationary {
        #[command(flatten)]
        common: Common,
    },
    /// Run the model's consistency identities, one line each
    Check {
        #[command(flatten)]
        common: Common,
        /// Print only failing identities
        #[arg(long)]
        quiet: bool,
    },
}

fn run(command: Command) -> Result<CmdOutput, CliError> {
    match command {
        Command::Eval { common, query } => cmd_eval(&common.model, common.tol, &query),
        Command::Evolve { common, t_max, step, observable } => {
            cmd_evolve(&common.model, common.tol, t_max, step, observable.as_deref())
        }
        Command::Stationary { common } => cmd_stationary(&common.model, common.tol),
        Command::Check { common, quiet } => cmd_check(&common.model, common.tol, quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.exit as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
