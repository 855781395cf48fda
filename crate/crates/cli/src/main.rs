//! graspcast — predict grasp success from pose-estimator disagreement.
//!
//! Subcommands cover the whole pipeline: `synth` generates a labeled corpus,
//! `ingest` validates and joins the data, `split` fixes the train/test
//! partition, `train` fits success-prediction networks, `baseline` learns
//! the ADD-threshold baseline, `eval` scores methods on the test split, and
//! `report` runs the full grid and emits the comparison tables.

mod commands;
mod config;
mod error;
mod pipeline;

use clap::{Parser, Subcommand};

use crate::config::{CommonArgs, Config};
use crate::error::CmdResult;

#[derive(Parser)]
#[command(
    name = "graspcast",
    version,
    about = "Grasp-success prediction from 6-DoF pose-estimator disagreement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Load all corpora, validate them, and report joined sample counts.
    Ingest,
    /// Generate a synthetic labeled corpus plus a ready-to-run config.
    Synth,
    /// Create (or reuse) the deterministic stratified train/test splits.
    Split,
    /// Train the networks of one variant for the selected principal(s).
    Train {
        /// Also dump per-run feature matrices (key, features..., label).
        #[arg(long)]
        dump_features: bool,
    },
    /// Learn per-(principal, object, gripper) baseline thresholds.
    Baseline,
    /// Evaluate trained artifacts on the test split.
    Eval {
        /// Comma-separated subset of: baseline, mlp, mlp-o, mlp-g, mlp-og.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Run the full grid (all variants, baselines, reports) for the scope.
    Report,
}

fn run(cli: Cli) -> CmdResult<()> {
    let cfg = Config::load(&cli.common)?;
    match cli.command {
        Command::Ingest => commands::cmd_ingest(&cfg),
        Command::Synth => commands::cmd_synth(&cfg),
        Command::Split => commands::cmd_split(&cfg),
        Command::Train { dump_features } => commands::cmd_train(&cfg, dump_features),
        Command::Baseline => commands::cmd_baseline(&cfg),
        Command::Eval { methods } => commands::cmd_eval(&cfg, &methods),
        Command::Report => commands::cmd_report(&cfg),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's default exit code for usage errors is 2; this tool
            // reserves 2 for data errors, so remap usage to 1.
            let _ = err.print();
            std::process::exit(if err.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.kind.exit_code());
    }
}
