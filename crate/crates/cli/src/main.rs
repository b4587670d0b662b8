//! `shotgame`: batch entry points for the shot-taking analysis pipeline.

mod config;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{GridChoice, RunConfig};
use shotgame_core::optim::Method;

#[derive(Debug, Parser)]
#[command(name = "shotgame", version, about = "Shot-taking decision analysis")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// StatsBomb-style directory (events/, three-sixty/) or an ingested dataset file.
    #[arg(long, global = true, env = "SHOTGAME_DATA")]
    data_dir: Option<PathBuf>,
    /// Training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    split_seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    models_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    fixtures_dir: Option<PathBuf>,
    /// Pitch-control integration step in seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModelArg {
    Off,
    Block,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FeatureArg {
    Block,
    BlockBasic,
    BlockUnprocessed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the corpus, write the normalized dataset and the split.
    Ingest,
    /// Fit the theory-based block model's five parameters.
    FitTheory {
        #[arg(long)]
        method: Option<Method>,
    },
    /// Cross-validate and train a shot-off or shot-block classifier.
    Train {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Block feature set (ablation).
        #[arg(long, value_enum)]
        features: Option<FeatureArg>,
        #[arg(long)]
        grid: Option<GridChoice>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Theory parameters used for the block feature.
        #[arg(long)]
        theory: Option<PathBuf>,
        /// Skip the historical and elastic-net baselines.
        #[arg(long)]
        no_baselines: bool,
    },
    /// Per-attacker breakdown, payoff table and equilibrium for one situation.
    Evaluate {
        #[command(flatten)]
        target: Target,
        /// Report the frame without the closest defender.
        #[arg(long)]
        remove_closest: bool,
    },
    /// Average payoff table over every situation with a defender in the zone.
    PayoffStudy,
    /// Statistical checks.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Render a situation as SVG.
    Plot {
        #[command(flatten)]
        target: Target,
        /// Output file (default: <out>/<id>.svg).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run the HTTP scenario service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// Bundled scenario id or path to a scenario JSON file.
    #[arg(long)]
    fixture: Option<String>,
    /// Shot event id from the corpus.
    #[arg(long)]
    event: Option<String>,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Independence of consecutive shot outcomes.
    ChiSquare {
        /// Contingency table JSON (default: the bundled table).
        #[arg(long)]
        table: Option<PathBuf>,
        /// Build the table from the corpus instead.
        #[arg(long)]
        from_data: bool,
    },
    /// Team-level correlations with external xG and goals.
    Correlation {
        #[arg(long)]
        teams: Option<PathBuf>,
    },
    /// Confusion matrix of a trained model on the test split.
    Confusion {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn resolve(g: &GlobalArgs) -> Result<RunConfig, String> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &g.data_dir {
        cfg.data_dir = v.clone();
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.split_seed {
        cfg.split_seed = v;
    }
    if let Some(v) = &g.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &g.models_dir {
        cfg.models_dir = v.clone();
    }
    if let Some(v) = &g.fixtures_dir {
        cfg.fixtures_dir = v.clone();
    }
    if let Some(v) = g.dt {
        cfg.dt = v;
    }
    Ok(cfg)
}

fn apply_command(cfg: &mut RunConfig, cmd: &Command) {
    match cmd {
        Command::FitTheory { method: Some(m) } => cfg.method = *m,
        Command::Train { grid, epochs, .. } => {
            if let Some(g) = grid {
                cfg.grid = *g;
            }
            if epochs.is_some() {
                cfg.epochs = *epochs;
            }
        }
        Command::Analyze {
            what: AnalyzeCommand::Confusion {
                threshold: Some(t), ..
            },
        } => cfg.threshold = *t,
        Command::Analyze {
            what: AnalyzeCommand::ChiSquare { table: Some(t), .. },
        } => cfg.contingency = t.clone(),
        Command::Analyze {
            what: AnalyzeCommand::Correlation { teams: Some(t) },
        } => cfg.teams_csv = t.clone(),
        Command::Serve { port: Some(p) } => cfg.port = *p,
        _ => {}
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let mut cfg = match resolve(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    apply_command(&mut cfg, &cli.command);
    if let Err(e) = cfg.validate() {
        eprintln!("error: invalid configuration: {e}");
        return ExitCode::from(1);
    }
    match run::dispatch(&cfg, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
