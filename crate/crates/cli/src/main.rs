use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fnirs_bnn_cli::commands::{self, Global};
use fnirs_bnn_cli::config::RunConfig;
use fnirs_bnn_cli::{exit_code, UsageError};

/// Bayesian neural network classification of fNIRS finger-tapping data.
///
/// Log verbosity is read from FNIRS_BNN_LOG (error, warn, info, debug).
#[derive(Parser)]
#[command(name = "fnirs-bnn", version)]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic recordings, one directory per volunteer.
    Synth(SynthArgs),
    /// Filter, epoch and extract features from recordings.
    Preprocess(PreprocessArgs),
    /// Split, standardize and train the variational posterior.
    Train(TrainArgs),
    /// Posterior-predictive classification of a feature file.
    Predict(PredictArgs),
    /// Accuracy, ROC and AUC against the no-skill baseline.
    Evaluate(EvaluateArgs),
    /// Draw posterior samples of one weight under independent seeds.
    Trace(TraceArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of volunteers.
    #[arg(long)]
    volunteers: Option<usize>,
    /// Peak ΔHbO contrast between contralateral and ipsilateral channels.
    #[arg(long, allow_hyphen_values = true)]
    effect_size: Option<f64>,
    /// Trials of each class per volunteer.
    #[arg(long)]
    trials_per_class: Option<usize>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// A volunteer directory or a directory of volunteer directories.
    input: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Output of `preprocess`.
    input: PathBuf,
    /// Optimizer iterations per model.
    #[arg(long)]
    iterations: Option<usize>,
    /// One model on all volunteers' features.
    #[arg(long)]
    pooled: bool,
    /// Train on raw feature values.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model.json.
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV with its JSON sidecar next to it.
    features: PathBuf,
    /// Posterior draws per item.
    #[arg(long)]
    samples: Option<usize>,
    /// Decision threshold on the predictive mean.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Output of `train`; evaluates every model in it and writes a summary.
    input: Option<PathBuf>,
    /// Evaluate a single model.json instead of a directory.
    #[arg(long, requires = "features", conflicts_with = "input")]
    model: Option<PathBuf>,
    /// Feature CSV to evaluate the single model on.
    #[arg(long, requires = "model")]
    features: Option<PathBuf>,
    /// Posterior draws per item.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    /// Trained model.json.
    #[arg(long)]
    model: PathBuf,
    /// Position in the flat weight vector.
    #[arg(long)]
    weight_index: usize,
    /// Draws per seed.
    #[arg(long)]
    samples: Option<usize>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Synth(a) => {
            if let Some(v) = a.volunteers {
                cfg.synth.n_volunteers = v;
            }
            if let Some(e) = a.effect_size {
                cfg.synth.effect_size = e;
            }
            if let Some(t) = a.trials_per_class {
                cfg.synth.trials_per_class = t;
            }
        }
        Command::Train(a) => {
            if let Some(i) = a.iterations {
                cfg.train.iterations = i;
            }
            cfg.pooled |= a.pooled;
            cfg.standardize &= !a.no_standardize;
        }
        Command::Predict(a) => {
            if let Some(s) = a.samples {
                cfg.predict.n_samples = s;
            }
            if let Some(t) = a.threshold {
                cfg.predict.threshold = t;
            }
        }
        Command::Evaluate(a) => {
            if let Some(s) = a.samples {
                cfg.predict.n_samples = s;
            }
        }
        Command::Trace(a) => {
            if let Some(s) = a.samples {
                cfg.trace.n_samples = s;
            }
        }
        Command::Preprocess(_) => {}
    }
    cfg.validate()?;
    let g = Global { cfg, out: cli.out };
    match cli.command {
        Command::Synth(_) => commands::synth(&g),
        Command::Preprocess(a) => commands::preprocess(&g, &a.input),
        Command::Train(a) => commands::train(&g, &a.input),
        Command::Predict(a) => commands::predict(&g, &a.model, &a.features),
        Command::Evaluate(a) => match (a.input, a.model, a.features) {
            (Some(dir), None, None) => commands::evaluate_dir(&g, &dir),
            (None, Some(m), Some(f)) => commands::evaluate_one(&g, &m, &f),
            _ => Err(UsageError(
                "evaluate needs a train output directory, or --model with --features".into(),
            )
            .into()),
        },
        Command::Trace(a) => commands::trace(&g, &a.model, a.weight_index),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FNIRS_BNN_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
