//! Command-line front end: `fit`, `select`, `cv` and `shrinkage`.
//!
//! Every command writes a `manifest.json` (resolved configuration, seed and
//! version) next to its outputs. Failures print a single
//! `error[<kind>]: <message>` line to stderr and exit nonzero.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
pub use config::{RunConfig, OUTPUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "projpred",
    version,
    about = "Shrinkage regression and projection predictive variable selection"
)]
struct Cli {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides $PROJPRED_OUTPUT_DIR and the config file).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Default, Args)]
struct DataArgs {
    /// Delimited numeric table with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response column, by name or zero-based index (default: last column).
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    no_standardize: bool,
    /// Replace the response by its natural log before anything else.
    #[arg(long)]
    log_response: bool,
    /// Hold out all but this many rows as a test set.
    #[arg(long)]
    n_train: Option<usize>,
}

#[derive(Debug, Default, Args)]
struct ModelArgs {
    /// Degrees of freedom of the local scales (>= 1).
    #[arg(long)]
    nu: Option<f64>,
    /// Use the two-level (plus) local scale prior.
    #[arg(long)]
    plus: bool,
    #[arg(long)]
    chains: Option<usize>,
    /// Iterations per chain, warmup included.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the full model and write draws plus diagnostics.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Forward search on existing draws; scores the path on the test split if any.
    Select {
        #[command(flatten)]
        data: DataArgs,
        /// Draw file (default: <output-dir>/draws.csv).
        #[arg(long)]
        draws: Option<PathBuf>,
        #[arg(long)]
        max_vars: Option<usize>,
    },
    /// K-fold fit, search and evaluation.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        max_vars: Option<usize>,
    },
    /// Prior density of the shrinkage coefficient, one CSV per nu.
    Shrinkage {
        #[arg(long = "nu", value_delimiter = ',')]
        nus: Vec<f64>,
        #[arg(long)]
        grid: Option<usize>,
        /// Monte-Carlo histogram of the plus prior instead of the exact density.
        #[arg(long)]
        plus: bool,
        /// Prior draws for the plus histogram.
        #[arg(long)]
        samples: Option<usize>,
    },
}

impl DataArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(d) = &self.data {
            c.data = Some(d.clone());
        }
        if let Some(t) = &self.target {
            c.target = Some(t.clone());
        }
        if self.no_standardize {
            c.standardize = false;
        }
        if self.log_response {
            c.log_response = true;
        }
        if let Some(n) = self.n_train {
            c.n_train = Some(n);
        }
    }
}

impl ModelArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(v) = self.nu {
            c.nu = v;
        }
        if self.plus {
            c.plus = true;
        }
        if let Some(v) = self.chains {
            c.chains = v;
        }
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if let Some(v) = self.warmup {
            c.warmup = v;
        }
        if let Some(v) = self.thin {
            c.thin = v;
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    if let Some(path) = &cli.config {
        c.apply_file(path)?;
    }
    c.apply_env();
    if let Some(dir) = &cli.output_dir {
        c.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    match &cli.command {
        Command::Fit { data, model } => {
            data.apply(&mut c);
            model.apply(&mut c);
        }
        Command::Select { data, draws, max_vars } => {
            data.apply(&mut c);
            if draws.is_some() {
                c.draws = draws.clone();
            }
            if max_vars.is_some() {
                c.max_vars = *max_vars;
            }
        }
        Command::Cv {
            data,
            model,
            folds,
            max_vars,
        } => {
            data.apply(&mut c);
            model.apply(&mut c);
            if folds.is_some() {
                c.folds = *folds;
            }
            if max_vars.is_some() {
                c.max_vars = *max_vars;
            }
        }
        Command::Shrinkage {
            nus,
            grid,
            plus,
            samples,
        } => {
            if !nus.is_empty() {
                c.nus = nus.clone();
            }
            if let Some(g) = grid {
                c.grid = *g;
            }
            if *plus {
                c.plus = true;
            }
            if let Some(s) = samples {
                c.samples = *s;
            }
        }
    }
    c.check_modes()?;
    Ok(c)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Fit { .. } => commands::fit(&cfg),
        Command::Select { .. } => commands::select(&cfg),
        Command::Cv { .. } => commands::cv(&cfg),
        Command::Shrinkage { .. } => commands::shrinkage(&cfg),
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid usage");
            eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error: ")));
            return 2;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), one_line(&e.to_string()));
            1
        }
    }
}
