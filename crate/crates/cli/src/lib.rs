//! `medsum`: build fine-tuning data, run summarization pipelines and score
//! the results from the command line.

pub mod ablate;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use medsum_core::dataset::Split;
use medsum_core::pipeline::{Gender, Mode};
use medsum_core::Method;

pub use config::CliConfig;

/// Exit code when some conversations failed and `--lenient` was not given.
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "medsum",
    version,
    about = "Doctor-patient conversation summarization toolkit"
)]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, env = "MEDSUM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Worker threads for per-conversation parallelism (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Exit 0 even when some conversations fail.
    #[arg(long, global = true)]
    pub lenient: bool,
    #[arg(long, global = true)]
    pub conversations: Option<PathBuf>,
    #[arg(long, global = true)]
    pub references: Option<PathBuf>,
    #[arg(long, global = true)]
    pub splits: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus plus a ready-to-use config.
    Synth(SynthArgs),
    /// Export fine-tuning pairs for one method.
    BuildData(BuildDataArgs),
    /// Summarize one split with a pipeline mode and write a run directory.
    Infer(InferArgs),
    /// Score a run directory against the references.
    Eval(EvalArgs),
    /// Run multistage chunking at several header sizes and tabulate.
    AblateHeader(AblateArgs),
    /// Corpus length and reference statistics.
    Stats(StatsArgs),
    /// Agreement between two raters from a two-column score file.
    Agreement(AgreementArgs),
    /// Serve a builtin mock over the stdin/stdout JSON-lines protocol.
    ServeMock(ServeMockArgs),
    /// Check a summarization backend against the wire protocol.
    Conformance(ConformanceArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "count", default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    /// Share of conversations over 1024 tokens.
    #[arg(long, default_value_t = 0.65)]
    pub long_fraction: f64,
}

#[derive(Debug, Args)]
pub struct BuildDataArgs {
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub header_fraction: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// `hashing` or an http(s) URL serving /v1/embed.
    #[arg(long)]
    pub embedder: Option<String>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub mode: Mode,
    /// Stage-1 (or only) backend: mock:<spec>, cmd:<command> or a URL.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub stage2_backend: Option<String>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub gender: Option<Gender>,
    #[arg(long)]
    pub header_fraction: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Comma-separated: training, reference.
    #[arg(long, value_delimiter = ',')]
    pub baselines: Vec<String>,
    /// Also report per input-length bucket.
    #[arg(long)]
    pub buckets: bool,
    /// Where to write eval.json and eval.txt (default: the run directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ablate::DEFAULT_FRACTIONS)]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub stage2_backend: Option<String>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// One `a b` (or `a,b`) pair per line; `#` starts a comment.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeMockArgs {
    /// Mock spec, e.g. lead2, echo:w60, keyword.
    #[arg(long, default_value = "lead1")]
    pub spec: String,
}

#[derive(Debug, Args)]
pub struct ConformanceArgs {
    #[arg(long)]
    pub backend: String,
}

impl Cli {
    /// The config file merged with the global path flags.
    pub fn load_config(&self) -> Result<CliConfig> {
        let mut cfg = match &self.config {
            Some(p) => CliConfig::load(p)?,
            None => CliConfig::default(),
        };
        for (flag, slot) in [
            (&self.conversations, &mut cfg.conversations),
            (&self.references, &mut cfg.references),
            (&self.splits, &mut cfg.splits),
            (&self.lexicon, &mut cfg.lexicon),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        Ok(cfg)
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let cfg = cli.load_config()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building worker pool")?;
    pool.install(|| commands::dispatch(&cli, &cfg))
}
