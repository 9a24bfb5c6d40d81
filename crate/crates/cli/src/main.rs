use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use duognn_cli::commands::{cmd_decouple, cmd_report, cmd_train, CommandArgs};

#[derive(Parser)]
#[command(
    name = "duognn",
    version,
    about = "Topology-decoupled dual GNN experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter and condense the input graph; write both graphs and homophily histograms.
    Decouple(Args),
    /// Train DuoGNN and the GCN control for every seed.
    Train(Args),
    /// Render the comparison table and histogram CSVs of a finished run.
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, replacing `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    overwrite: bool,
    /// Base seed for weights and dropout.
    #[arg(long)]
    seed: Option<u64>,
}

impl From<Args> for CommandArgs {
    fn from(a: Args) -> Self {
        CommandArgs {
            config: a.config,
            out: a.out,
            overwrite: a.overwrite,
            seed: a.seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decouple(a) => cmd_decouple(&a.into()),
        Command::Train(a) => cmd_train(&a.into()).map(|r| {
            format!(
                "{}dataset: {} nodes, {} edges; decoupling removed {} edges into {} components",
                r.table_text(),
                r.dataset.num_nodes,
                r.dataset.num_edges,
                r.decouple.edges_removed,
                r.decouple.components
            )
        }),
        Command::Report(a) => cmd_report(&a.into()),
    };
    match result {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
