//! `subgrad-arena`: seeded experiments over the subgrad-core testbed.
//!
//! Exit status is 0 when every check passes, 1 when a check fails (the
//! failing ids go to standard error) or the run errors, and 2 for usage
//! errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use subgrad_core::Family;

pub use commands::{run, Outcome};
pub use config::{Command, ExperimentConfig, Format, Lemma};
pub use error::CliError;
pub use report::{Report, Table};

pub const THREADS_ENV: &str = "SUBGRAD_ARENA_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "subgrad-arena",
    version,
    about = "Seeded experiments on hard first-order oracles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Write a random instance.
    Gen(Flags),
    /// Run projected subgradient descent and report the final gap.
    Gd(Flags),
    /// Run lemma estimators and property suites.
    Verify(Flags),
    /// Exhaustively check the OR-query reduction.
    Reduce(Flags),
    /// Run descent over a grid of accuracies.
    Sweep(Flags),
    /// Run the command named in the config file.
    Run(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON configuration; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub lemma: Option<Lemma>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub t: Option<usize>,
    /// Escape estimators with the linear offsets removed.
    #[arg(long)]
    pub stress: bool,
    #[arg(long)]
    pub ambient_dim: Option<usize>,
    /// Comma-separated accuracies for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

impl Flags {
    /// The config file (if any) with these flags laid over it.
    pub fn resolve(&self, command: Option<Command>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, command) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(c)) => ExperimentConfig::new(c),
            (None, None) => return Err(CliError::Usage("`run` needs --config".into())),
        };
        if let Some(c) = command {
            cfg.command = c;
        }
        if let Some(v) = self.family {
            cfg.family = v;
        }
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if self.lemma.is_some() {
            cfg.lemma = self.lemma;
        }
        if self.out.is_some() {
            cfg.output_path = self.out.clone();
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.n.is_some() {
            cfg.n = self.n;
        }
        if self.c.is_some() {
            cfg.c = self.c;
        }
        if self.t.is_some() {
            cfg.t = self.t;
        }
        if self.stress {
            cfg.stress = true;
        }
        if let Some(v) = self.ambient_dim {
            cfg.ambient_dim = v;
        }
        if self.grid.is_some() {
            cfg.grid = self.grid.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Sub {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        match self {
            Sub::Gen(f) => f.resolve(Some(Command::Gen)),
            Sub::Gd(f) => f.resolve(Some(Command::Gd)),
            Sub::Verify(f) => f.resolve(Some(Command::Verify)),
            Sub::Reduce(f) => f.resolve(Some(Command::Reduce)),
            Sub::Sweep(f) => f.resolve(Some(Command::Sweep)),
            Sub::Run(f) => f.resolve(None),
        }
    }
}

/// Runs `cfg` on a pool of `cfg.threads` workers (all cores when unset),
/// writes the report, and returns the outcome.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| {
        CliError::Usage(format!(
            "cannot start {} threads: {e}",
            cfg.threads.unwrap_or(0)
        ))
    })?;
    let threads = pool.current_num_threads();
    let outcome = pool.install(|| run(cfg))?;
    let bytes = report::encode(&outcome.report, &outcome.table, cfg.format)?;
    match &cfg.output_path {
        Some(path) => report::write_report(path, &bytes, start.elapsed(), threads)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(outcome)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = cli.command.resolve().and_then(|cfg| execute(&cfg));
    match result {
        Ok(outcome) if outcome.report.pass => 0,
        Ok(outcome) => {
            eprintln!("FAILED: {}", outcome.report.failing.join(", "));
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
