mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Context};

#[derive(Parser, Debug)]
#[command(name = "interhand", version, about = "Two-hand sequence evaluation, collision checks, refinement and encoding")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthetic data and random encoder weights (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-frame work; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Disjoint,
    Colliding,
    Jittery,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a predicted sequence against ground truth.
    Evaluate { pred: PathBuf, gt: PathBuf },
    /// Per-frame penetration report of a sequence.
    Collide {
        sequence: PathBuf,
        /// Also write each frame's posed meshes as OBJ files.
        #[arg(long)]
        export_obj: bool,
    },
    /// Optimize a sequence's parameters against the smoothness and collision losses.
    Refine { sequence: PathBuf },
    /// Write a synthetic sequence.
    Synth {
        scenario: ScenarioName,
        /// Frame count; the config's sequence length when omitted.
        frames: Option<usize>,
        /// Generator seed; --seed or the config's seed when omitted.
        seed: Option<u64>,
        /// Pose noise standard deviation for `jittery`, radians.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
    },
    /// Run the temporal encoder on a feature file (or seeded random features).
    Encode {
        features: Option<PathBuf>,
        /// Encoder weights file; seeded random weights when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let ctx = Context::new(cli.config.as_deref(), cli.seed, cli.out)?;
    match cli.command {
        Command::Evaluate { pred, gt } => commands::evaluate(&ctx, &pred, &gt),
        Command::Collide { sequence, export_obj } => commands::collide(&ctx, &sequence, export_obj),
        Command::Refine { sequence } => commands::refine(&ctx, &sequence),
        Command::Synth {
            scenario,
            frames,
            seed,
            noise,
        } => commands::synth(&ctx, scenario, frames, seed, noise),
        Command::Encode { features, weights } => commands::encode(&ctx, features.as_deref(), weights.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
