use std::path::PathBuf;

use thiserror::Error;

use crate::registry::GameId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown symbol {symbol:?} at row {row}, column {col}")]
    UnknownSymbol { row: usize, col: usize, symbol: char },

    #[error("ragged rows: expected width {expected}, found {found} in row {row}")]
    RaggedRows { expected: usize, found: usize, row: usize },

    #[error("empty level")]
    EmptyLevel,

    #[error("game mismatch: expected {expected}, found {found}")]
    GameMismatch { expected: GameId, found: GameId },

    #[error("grid of {height}x{width} is smaller than the {min_height}x{min_width} window")]
    GridTooSmall {
        height: usize,
        width: usize,
        min_height: usize,
        min_width: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("levels from more than one game in a single-game input")]
    MixedGames,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty set")]
    EmptySet,

    #[error("sketch of {height}x{width} cannot hold a {k}x{k} pattern")]
    SketchTooSmall { height: usize, width: usize, k: usize },

    #[error("pattern size mismatch: {0} vs {1}")]
    MismatchedPatternSize(usize, usize),

    #[error("filter expects 15x16 segments, got {height}x{width}")]
    GranularityMismatch { height: usize, width: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("registry: {0}")]
    Registry(String),

    #[error("external filter: {0}")]
    External(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{level}: {source}")]
    InLevel {
        level: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_level(level: impl Into<String>, source: Error) -> Self {
        Error::InLevel {
            level: level.into(),
            source: Box::new(source),
        }
    }

    /// Short machine-readable tag, used by the CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownSymbol { .. } => "unknown_symbol",
            Error::RaggedRows { .. } => "ragged_rows",
            Error::EmptyLevel => "empty_level",
            Error::GameMismatch { .. } => "game_mismatch",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::MixedGames => "mixed_games",
            Error::EmptyCorpus => "empty_corpus",
            Error::EmptySet => "empty_set",
            Error::SketchTooSmall { .. } => "sketch_too_small",
            Error::MismatchedPatternSize(..) => "mismatched_pattern_size",
            Error::GranularityMismatch { .. } => "granularity_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Format { .. } => "format",
            Error::Registry(_) => "registry",
            Error::External(_) => "external_filter",
            Error::Csv(_) => "csv",
            Error::InLevel { source, .. } => source.kind(),
            Error::Io { .. } => "io",
        }
    }
}
