//! `sketchfilter` command-line front end.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on data errors. Data
//! errors also print one JSON record `{"kind": ..., "error": ...}` on
//! stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sketchfilter::corpus::CORPUS_ENV;
use sketchfilter::evaluation::DEFAULT_EPSILON;
use sketchfilter::transfer::FilterKind;
use sketchfilter::GameId;

#[derive(Debug, Parser)]
#[command(
    name = "sketchfilter",
    version,
    about = "Affordance-sketch level style transfer between tile-based games"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Corpus root holding one directory of level files per game.
    #[arg(long, global = true, env = CORPUS_ENV, default_value = "data/sample_corpus")]
    pub corpus: PathBuf,

    /// Directory with smb.toml, ki.toml, mm.toml and met.toml. Defaults to
    /// the built-in registry.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// KL smoothing constant.
    #[arg(long, global = true, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the registry and the corpus.
    Validate,

    /// Print the affordance sketch of one corpus level.
    Sketch {
        game: GameId,
        level: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },

    /// Train an MRF on every level of a game.
    TrainMrf {
        game: GameId,
        #[arg(long, value_parser = ["4", "8"])]
        order: String,
        /// Defaults to <out>/models/<game>-mrf<order>.txt.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },

    /// Transfer source levels (or segments) into the target game's tiles.
    Transfer(TransferArgs),

    /// Write the game's segments as sketch and tile packs, plus the channel
    /// order and segment count report.
    ExportSegments { game: GameId },

    /// Evaluation reports as CSV.
    #[command(subcommand)]
    Eval(EvalCommand),

    /// Every ordered game pair through the selected filters, with levels,
    /// models and reports under <out>.
    Repro {
        #[arg(long, value_delimiter = ',', default_value = "mrf4,mrf8,ae")]
        filters: Vec<FilterKind>,
        /// Directory of AE tile packs named <source>-to-<target>.jsonl.
        #[arg(long)]
        ae_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub source: GameId,
    #[arg(long)]
    pub target: GameId,
    #[arg(long)]
    pub filter: FilterKind,
    /// Only this source level.
    #[arg(long)]
    pub level: Option<String>,
    /// Transfer 15x16 segments instead of whole levels. Always on for AE.
    #[arg(long)]
    pub segments: bool,
    /// Precomputed AE tile pack.
    #[arg(long, conflicts_with = "ae_command")]
    pub ae_pack: Option<PathBuf>,
    /// AE program run once per batch; `{input}`, `{output}` and `{target}`
    /// are substituted.
    #[arg(last = true)]
    pub ae_command: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// APKLDiv between two segment packs.
    Apkldiv {
        a: PathBuf,
        b: PathBuf,
        /// Compare pooled pattern distributions instead of segment pairs.
        #[arg(long)]
        unpaired: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Tile frequency histograms of corpus games or tile packs.
    Hist {
        /// Corpus games; all of them when neither games nor packs are given.
        games: Vec<GameId>,
        #[arg(long)]
        pack: Vec<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Playability of every record in a segment pack.
    Play {
        pack: PathBuf,
        /// Movement model; defaults to the pack's tileset.
        #[arg(long)]
        movement: Option<GameId>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}: not found")]
    MissingPath(PathBuf),
    #[error("{game} has no level {level:?}")]
    UnknownLevel { game: GameId, level: String },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
            CliError::MissingPath(_) => "missing_path",
            CliError::UnknownLevel { .. } => "unknown_level",
        }
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return e.kind();
        }
        if let Some(e) = cause.downcast_ref::<sketchfilter::Error>() {
            return e.kind();
        }
    }
    "error"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let Some(CliError::Usage(msg)) = err.downcast_ref::<CliError>() {
                eprintln!("error: {msg}\n\nFor more information, try '--help'.");
                return ExitCode::from(2);
            }
            let record = serde_json::json!({ "kind": error_kind(&err), "error": format!("{err:#}") });
            eprintln!("{record}");
            ExitCode::from(1)
        }
    }
}
