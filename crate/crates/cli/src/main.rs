use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use veritas_cli::app::{self, CliError, RunArgs};
use veritas_cli::config::GraphSpec;

#[derive(Parser)]
#[command(
    name = "veritas",
    version,
    about = "Trust-gated misinformation propagation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the propagation experiment and write a report with its sidecars.
    Run {
        #[arg(long, required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Replay a previous run from its manifest instead of a config file.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        #[arg(long, required_unless_present = "manifest")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Edge-list path or `synthetic:n,m`; overrides the config.
        #[arg(long, conflicts_with = "manifest")]
        graph: Option<GraphSpec>,
        /// Independent runs with seeds seed, seed+1, ...; writes a batch summary.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
    },
    /// Re-validate exported chains.
    Verify {
        #[arg(long)]
        chains: PathBuf,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Print the origin node of a message found in exported chains.
    Trace {
        #[arg(long)]
        chains: PathBuf,
        #[arg(long)]
        message: u64,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Re-render tables and plot data from a saved report.
    Report {
        #[arg(long)]
        report: PathBuf,
        /// Base path for the CSV sidecars; defaults to the report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic scale-free edge list.
    GenGraph {
        #[arg(long)]
        graph: GraphSpec,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Run {
            config,
            manifest,
            seed,
            out,
            graph,
            runs,
        } => {
            let args = RunArgs {
                config: config.as_deref(),
                manifest: manifest.as_deref(),
                seed,
                graph: graph.as_ref(),
                out: &out,
                runs: runs as usize,
            };
            app::run(&args, chrono::Utc::now().to_rfc3339())
        }
        Command::Verify { chains, max_len } => app::verify(&chains, max_len),
        Command::Trace {
            chains,
            message,
            max_len,
        } => app::trace(&chains, message, max_len),
        Command::Report { report, out } => app::report(&report, out.as_deref()),
        Command::GenGraph { graph, seed, out } => app::gen_graph(&graph, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VERITAS_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
