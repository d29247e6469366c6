//! `seizure`: synthesize recordings, extract synchronization patterns,
//! train and evaluate CNN detectors.
//!
//! Log verbosity comes from `SEIZURE_LOG` (env_logger syntax, default
//! `warn`).

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::PipelineConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "seizure", version, about = "EEG seizure detection from synchronization patterns")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic cohort as EDF files plus a label CSV.
    Synth,
    /// Turn labelled recordings into a pattern container.
    Extract {
        #[arg(long, value_name = "DIR")]
        recordings: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        labels: Option<PathBuf>,
    },
    /// Train a detector, or cross-validate one patient-wise.
    Train {
        #[arg(long, value_name = "PATH")]
        patterns: Option<PathBuf>,
        /// Patient-wise k-fold cross-validation instead of a final model.
        #[arg(long)]
        cv: bool,
        /// Number of folds for `--cv`.
        #[arg(long, value_name = "K")]
        folds: Option<usize>,
        /// Also train one one-vs-rest network per seizure type present,
        /// saved beside the model as `<stem>.type<code>.json`.
        #[arg(long, conflicts_with = "cv")]
        per_type: bool,
    },
    /// Score patterns with a model; ROC, optimal cutoff and subtasks.
    Eval {
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        patterns: Option<PathBuf>,
        /// Count only the first N seconds of each seizure as positive.
        #[arg(long, value_name = "N")]
        onset_window: Option<usize>,
        /// Retrain with this share of each patient's earliest epochs.
        #[arg(long, value_name = "FRACTION")]
        patient_specific: Option<f64>,
        /// Patterns the model was trained on (for `--patient-specific`).
        #[arg(long, value_name = "PATH")]
        train_patterns: Option<PathBuf>,
        /// Skip the one-vs-rest reports per seizure type.
        #[arg(long)]
        no_per_type: bool,
    },
    /// Mean squared loss gradient per pattern entry.
    Sensitivity {
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        patterns: Option<PathBuf>,
    },
    /// Per-family value histograms, seizure versus background.
    Stats {
        #[arg(long, value_name = "PATH")]
        patterns: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(cli.common.config.as_deref())?;
    if let Some(seed) = cli.common.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.common.out {
        cfg.paths.out = out.clone();
    }
    let paths = &mut cfg.paths;
    match &cli.command {
        Command::Synth => {}
        Command::Extract { recordings, labels } => {
            paths.recordings = recordings.clone().or(paths.recordings.take());
            paths.labels = labels.clone().or(paths.labels.take());
        }
        Command::Train { patterns, folds, .. } => {
            paths.patterns = patterns.clone().or(paths.patterns.take());
            cfg.eval.folds = folds.unwrap_or(cfg.eval.folds);
        }
        Command::Eval {
            model,
            patterns,
            onset_window,
            patient_specific,
            train_patterns,
            no_per_type,
        } => {
            paths.model = model.clone().or(paths.model.take());
            paths.patterns = patterns.clone().or(paths.patterns.take());
            paths.train_patterns = train_patterns.clone().or(paths.train_patterns.take());
            cfg.eval.onset_window = onset_window.or(cfg.eval.onset_window);
            cfg.eval.patient_specific = patient_specific.or(cfg.eval.patient_specific);
            cfg.eval.per_type &= !no_per_type;
        }
        Command::Sensitivity { model, patterns } => {
            paths.model = model.clone().or(paths.model.take());
            paths.patterns = patterns.clone().or(paths.patterns.take());
        }
        Command::Stats { patterns } => {
            paths.patterns = patterns.clone().or(paths.patterns.take());
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Extract { .. } => commands::extract(&cfg),
        Command::Train { cv, per_type, .. } => commands::train(&cfg, *cv, *per_type),
        Command::Eval { .. } => commands::eval(&cfg),
        Command::Sensitivity { .. } => commands::sensitivity(&cfg),
        Command::Stats { .. } => commands::stats(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEIZURE_LOG", "warn")).init();
    // bad arguments are validation errors (1), not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
