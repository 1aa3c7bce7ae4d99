//! `fkica`: kurtosis-based functional ICA from the command line.
//!
//! Subcommands: `simulate` (replication error tables), `fica` (whiten one
//! corpus and extract kurtosis components), `classify` (train or apply a
//! centroid model), `picard` (ill-posedness diagnostics) and `noise-sweep`
//! (error tables across noise levels).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 data error (unreadable/ill-formed inputs, rank or sample-size
//! defects). The FKICA_SEED environment variable overrides the seed of
//! the seeded subcommands.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fkica::classify::Selector;
use fkica::whitening::WhiteningMethod;

pub(crate) struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: String) -> Self {
        CliError { code, message }
    }
}

#[derive(Parser)]
#[command(
    name = "fkica",
    version,
    about = "Kurtosis-based functional ICA: whitening, components, classification"
)]
struct Cli {
    /// Worker threads for replication runs (1 = sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct FitArgs {
    /// Spline basis dimension.
    #[arg(long, default_value_t = 5)]
    q: usize,
    /// Spline order (4 = cubic).
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Derivative order of the roughness penalty.
    #[arg(long, default_value_t = 2)]
    penalty_order: usize,
    /// Roughness penalty weight; 0 disables smoothing.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Whitening method: pca, pca-cor, zca, zca-cor or cholesky.
    #[arg(long, default_value = "zca")]
    whitening: WhiteningMethod,
    /// Direction selector: pc1, pcm, icq or sicq.
    #[arg(long, default_value = "icq")]
    selector: Selector,
    /// Reduce to p group-wise principal components before selecting.
    #[arg(long)]
    reduce_p: Option<usize>,
}

impl FitArgs {
    fn to_flags(&self) -> commands::FitFlags {
        commands::FitFlags {
            q: self.q,
            order: self.order,
            penalty_order: self.penalty_order,
            theta: self.theta,
            whitening: self.whitening,
            selector: self.selector,
            reduce_p: self.reduce_p,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a replication study from a config file and write an error table.
    Simulate {
        /// Key-value config file (see the packaged configs/ directory).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for table.csv and manifest.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Whiten one corpus and extract kurtosis components and diagnostics.
    Fica {
        /// Curve CSV: first column grid, one column per curve.
        #[arg(long)]
        curves: PathBuf,
        /// Label CSV: id,label with labels in {0,1}.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Train a centroid model (or load one) and classify test curves.
    Classify {
        /// Training curves (requires --train-labels; excludes --model).
        #[arg(long)]
        train_curves: Option<PathBuf>,
        /// Training labels.
        #[arg(long)]
        train_labels: Option<PathBuf>,
        /// Previously written model file (excludes --train-curves).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Curves to classify.
        #[arg(long)]
        test_curves: PathBuf,
        /// Optional labels for the test curves; prints the error rate.
        #[arg(long)]
        test_labels: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Compute the Picard series and the truncation-dimension rule.
    Picard {
        #[arg(long)]
        curves: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Spline basis dimension.
        #[arg(long, default_value_t = 5)]
        q: usize,
        /// Spline order (4 = cubic).
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Derivative order of the roughness penalty.
        #[arg(long, default_value_t = 2)]
        penalty_order: usize,
        /// Half-width of the flat band in the log-ratio series.
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Number of consecutive in-band components required.
        #[arg(long, default_value_t = 2)]
        delta: usize,
    },
    /// Run error tables across noise levels (ZCA whitening only).
    NoiseSweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated noise standard deviations.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        sigmas: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    match cli.command {
        Cmd::Simulate { config, out } => commands::cmd_simulate(&config, &out, threads),
        Cmd::Fica { curves, labels, out, fit } => {
            commands::cmd_fica(&curves, labels.as_deref(), &out, &fit.to_flags(), threads)
        }
        Cmd::Classify {
            train_curves,
            train_labels,
            model,
            test_curves,
            test_labels,
            out,
            fit,
        } => {
            let src = commands::ClassifySources {
                train_curves: train_curves.as_deref(),
                train_labels: train_labels.as_deref(),
                model: model.as_deref(),
                test_curves: &test_curves,
                test_labels: test_labels.as_deref(),
            };
            commands::cmd_classify(&src, &out, &fit.to_flags(), threads)
        }
        Cmd::Picard {
            curves,
            labels,
            out,
            q,
            order,
            penalty_order,
            epsilon,
            delta,
        } => commands::cmd_picard(
            &curves,
            labels.as_deref(),
            &out,
            q,
            order,
            penalty_order,
            epsilon,
            delta,
        ),
        Cmd::NoiseSweep { config, sigmas, out } => {
            commands::cmd_noise_sweep(&config, &sigmas, &out, threads)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
