use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};
use topoprobe::pipeline::{ExperimentConfig, Outcome, Pipeline, Task};
use topoprobe::Error;

/// Train graph embedders and probe which topological features they keep.
#[derive(Parser)]
#[command(name = "topoprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Verify that dataset files exist and match their registry checksums.
    Fetch(Args),
    /// Compute per-node topological features and classes.
    Topo(Args),
    /// Train (or load from cache) every embedding of the grid.
    Embed(Args),
    /// Regression and classification probes for the topological features.
    Probe(Args),
    /// DB/CH/SC of ground-truth label groups in embedding space.
    ClusterHomogeneity(Args),
    /// k-means and FINCH clustering scored against ground truth.
    Cluster(Args),
    /// Node classification on ground-truth labels.
    Classify(Args),
    /// Export 2-D t-SNE projections with feature classes.
    Tsne(Args),
    /// Aggregate raw records into summary CSVs and rendered tables.
    Report(Args),
    /// Features, all enabled tasks and the report.
    RunAll(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
}

fn run(command: Command) -> topoprobe::Result<Outcome> {
    let (Command::Fetch(a)
    | Command::Topo(a)
    | Command::Embed(a)
    | Command::Probe(a)
    | Command::ClusterHomogeneity(a)
    | Command::Cluster(a)
    | Command::Classify(a)
    | Command::Tsne(a)
    | Command::Report(a)
    | Command::RunAll(a)) = &command;
    let pipeline = Pipeline::new(ExperimentConfig::load(&a.config)?)?;
    let task = |t: Task, name: &str| pipeline.run_tasks(&[t], name);
    match command {
        Command::Fetch(_) => {
            for (dataset, files) in pipeline.fetch()? {
                for f in files {
                    let status = match f.verified {
                        Some(_) => "ok",
                        None => "no checksum listed",
                    };
                    println!("{dataset}\t{}\t{}\t{status}", f.path.display(), f.sha256);
                }
            }
            Ok(Outcome::default())
        }
        Command::Topo(_) => pipeline.topo(),
        Command::Embed(_) => pipeline.embed(),
        Command::Probe(_) => task(Task::Topo, "probe"),
        Command::ClusterHomogeneity(_) => task(Task::Homogeneity, "cluster-homogeneity"),
        Command::Cluster(_) => task(Task::Cluster, "cluster"),
        Command::Classify(_) => task(Task::Classify, "classify"),
        Command::Tsne(_) => task(Task::Tsne, "tsne"),
        Command::Report(_) => pipeline.report(),
        Command::RunAll(_) => pipeline.run_all(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(outcome) if outcome.is_complete() => {
            for f in &outcome.files {
                info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Ok(outcome) => {
            error!("{} grid cell(s) failed; see manifest.json", outcome.failures.len());
            ExitCode::from(2)
        }
        Err(e) => {
            error!("{e}");
            if let Error::MissingDataset { .. } = e {
                error!("download the files yourself and list them in the dataset registry");
            }
            ExitCode::from(1)
        }
    }
}
