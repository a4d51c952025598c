//! `hoisynth`: batch synthesis, augmentation, scoring and physics utilities.
//!
//! Exit codes: 0 success, 2 parse error, 3 validation error, 4 numerical failure, 5 I/O error.

mod commands;
mod error;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "hoisynth", version, about = "Humanoid-object interaction clip tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Command manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an interaction clip from a motion clip.
    Synth(Common),
    /// Produce a batch of augmented clips plus an index.
    Augment(Common),
    /// Score a rollout against a reference clip.
    Score(Common),
    /// Simulate a free-flying object forward or in reverse.
    Simulate(Common),
    /// Solve for the launch velocity reaching a target.
    #[command(name = "solve-v0")]
    SolveV0(Common),
    /// Estimate external joint torques from a torque log.
    EstimateForce(Common),
    /// Force-closure check of a contact set or of a clip's contact frames.
    GraspCheck(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Synth(c) => (c, commands::synth(&c.manifest)),
        Command::Augment(c) => (c, commands::augment(&c.manifest, c.seed)),
        Command::Score(c) => (c, commands::score(&c.manifest)),
        Command::Simulate(c) => (c, commands::simulate(&c.manifest)),
        Command::SolveV0(c) => (c, commands::solve_v0(&c.manifest)),
        Command::EstimateForce(c) => (c, commands::estimate_force(&c.manifest)),
        Command::GraspCheck(c) => (c, commands::grasp_check(&c.manifest)),
    };
    let result = result.and_then(|(outputs, summary)| outputs.write(&common.out).map(|_| summary));
    match result {
        Ok(summary) => {
            if !common.quiet {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
