use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sublev::{builtins, config, run_file, RunOptions};

#[derive(Parser)]
#[command(name = "sublev", version, about = "Numerics for sublinear Markov semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory for tables, plots and the manifest.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides `rng_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List builtin families and initial data whose name contains FILTER.
    Builtins {
        #[arg(default_value = "")]
        filter: String,
    },
    /// Print the JSON schema of experiment configs.
    Schema,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed } => {
            let outcome = run_file(&config, &RunOptions { out_dir: out, seed });
            ExitCode::from(outcome.exit_code as u8)
        }
        Command::Builtins { filter } => {
            for (kind, name, desc) in builtins::table(&filter) {
                println!("{kind:<7} {name:<22} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&config::schema()).expect("schema serialises"));
            ExitCode::SUCCESS
        }
    }
}
