//! Command-line front end for the augmentation benchmark.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "augbench", version, about = "Tabular data augmentation benchmark")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a configuration key, e.g. `--set evaluation.n_seeds=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the planned work instead of running it.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured experiment grid and write reports.
    Run,
    /// List or run the 99 technique chains.
    Chains {
        /// Keep only one category pair, e.g. `perturbation->sampling`.
        #[arg(long)]
        category: Option<String>,
    },
    /// Monte-Carlo power of the paired DeLong test.
    Power {
        /// AUC difference to detect.
        #[arg(long)]
        delta: Option<f64>,
        /// Sample sizes (comma separated or repeated).
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// AUC of the reference model.
        #[arg(long)]
        base_auc: Option<f64>,
        /// Monte-Carlo replicates per sample size.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Compute knowledge-tracing mastery features from a response log.
    BktFeatures {
        /// CSV with columns student,topic,correct.
        #[arg(long)]
        responses: PathBuf,
        /// Per-topic parameters (topic,p_init,p_learn,p_guess,p_slip); fitted by grid search when absent.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Check that a dataset loads and supports grouped cross-validation.
    ValidateData {
        /// CSV file; defaults to the configured data source.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run => commands::run(&cli.global, None),
        Command::Chains { category } => commands::chains(&cli.global, category.as_deref()),
        Command::Power { delta, n, base_auc, reps } => commands::power(&cli.global, delta, n, base_auc, reps),
        Command::BktFeatures { responses, params } => commands::bkt_features(&cli.global, &responses, params.as_deref()),
        Command::ValidateData { data } => commands::validate_data(&cli.global, data.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
