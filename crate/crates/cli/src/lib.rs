//! The `t4d` command line: generate, convert, eval, score and report.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "t4d", version, about = "Build and evaluate false-belief action-choice benchmarks")]
pub struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a story corpus.
    Generate(GenerateArgs),
    /// Convert stories (or faux-pas texts) into multiple-choice instances.
    Convert(ConvertArgs),
    /// Render prompts and query backends.
    Eval(EvalArgs),
    /// Score evaluation records.
    Score(ScoreArgs),
    /// Render a report in another format.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// tomi, d1, d2 or d3.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub distractor_characters: Option<usize>,
    #[arg(long)]
    pub distractor_preferences: Option<usize>,
    #[arg(long)]
    pub true_belief_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Story corpus (one record per line).
    #[arg(long, conflicts_with = "faux_pas", required_unless_present = "faux_pas")]
    pub stories: Option<PathBuf>,

    /// Directory of faux-pas story texts.
    #[arg(long)]
    pub faux_pas: Option<PathBuf>,

    /// Faux-pas manifest; defaults to manifest.toml inside the directory.
    #[arg(long, requires = "faux_pas")]
    pub manifest: Option<PathBuf>,

    /// Hints applied cumulatively, e.g. `--hint qd,tom`.
    #[arg(long, value_delimiter = ',')]
    pub hint: Vec<String>,

    /// Emit the base instances plus one copy per hint kind.
    #[arg(long, conflicts_with = "hint")]
    pub hint_sweep: bool,

    /// false-believer or all.
    #[arg(long)]
    pub tom_hint_scope: Option<String>,

    /// Also write ToMi-style question instances.
    #[arg(long, alias = "toMi")]
    pub tomi: bool,

    /// Shuffle character options (seeded); "None of the above" stays last.
    #[arg(long)]
    pub shuffle_options: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub instances: PathBuf,

    /// Comma-separated strategies, e.g. `far,cot,tot,selfask`.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<String>,

    /// `mock:gold`, `mock:<script>` or a backend named in the config.
    #[arg(long, value_delimiter = ',')]
    pub backend: Vec<String>,

    #[arg(long)]
    pub parallelism: Option<usize>,

    /// Write prompts only; no backend is opened.
    #[arg(long)]
    pub dry_run: bool,

    /// Response cache directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,

    #[arg(long)]
    pub failure_threshold: Option<f64>,

    /// Few-shot exemplar instances (one per line).
    #[arg(long)]
    pub exemplars: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub records: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json written by `score` or `eval`.
    #[arg(long, conflicts_with = "records", required_unless_present = "records")]
    pub report: Option<PathBuf>,

    #[arg(long)]
    pub records: Option<PathBuf>,

    /// table-text, csv or record-lines.
    #[arg(long, default_value = "table-text")]
    pub format: String,
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::Config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let ctx = commands::Context { seed, out: cli.out, config: cfg };
    match cli.command {
        Command::Generate(a) => commands::generate(&ctx, &a).map(|_| ()),
        Command::Convert(a) => commands::convert(&ctx, &a).map(|_| ()),
        Command::Eval(a) => commands::eval(&ctx, &a, &commands::default_opener).map(|_| ()),
        Command::Score(a) => commands::score(&ctx, &a).map(|_| ()),
        Command::Report(a) => commands::report(&ctx, &a).map(|_| ()),
    }
}
