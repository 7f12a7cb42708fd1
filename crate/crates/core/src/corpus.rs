//! On-disk level corpus: `<root>/<game slug>/<level id>.txt`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::level::{pad_top, parse_level, Sketch, TileGrid};
use crate::registry::{GameId, GameProfile, Registry};
use crate::segment::{extract_segments, segment_count, Segment, SEGMENT_HEIGHT, SEGMENT_WIDTH};

/// Overrides the corpus root in the CLI.
pub const CORPUS_ENV: &str = "SKETCHFILTER_CORPUS";

/// Segment totals of the reference VGLC selection.
pub const REFERENCE_SEGMENT_COUNTS: [(GameId, usize); 4] = [
    (GameId::Smb, 2643),
    (GameId::Ki, 1171),
    (GameId::Mm, 3118),
    (GameId::Met, 3762),
];

pub fn reference_segment_count(game: GameId) -> usize {
    REFERENCE_SEGMENT_COUNTS[game.index()].1
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    /// Grouped by game in `GameId::ALL` order, then sorted by id.
    levels: Vec<TileGrid>,
}

impl Corpus {
    /// Reads every game directory under `root`. A missing directory yields
    /// no levels for that game.
    pub fn load(root: &Path, registry: &Registry) -> Result<Self> {
        let mut levels = Vec::new();
        for profile in registry.profiles() {
            levels.extend(load_game(root, profile)?);
        }
        Ok(Corpus { levels })
    }

    pub fn from_levels(mut levels: Vec<TileGrid>) -> Self {
        levels.sort_by(|a, b| (a.game.index(), &a.id).cmp(&(b.game.index(), &b.id)));
        Corpus { levels }
    }

    pub fn all(&self) -> &[TileGrid] {
        &self.levels
    }

    pub fn levels(&self, game: GameId) -> Vec<&TileGrid> {
        self.levels.iter().filter(|l| l.game == game).collect()
    }

    pub fn level(&self, game: GameId, id: &str) -> Option<&TileGrid> {
        self.levels.iter().find(|l| l.game == game && l.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Levels of `game` that feed segment extraction, in id order.
    pub fn segment_levels<'a>(&'a self, game: GameId, registry: &'a Registry) -> impl Iterator<Item = &'a TileGrid> {
        let profile = registry.profile(game);
        self.levels
            .iter()
            .filter(move |l| l.game == game && profile.contributes_segments(&l.id))
    }

    /// All 15x16 windows of the contributing levels, ordered by
    /// (level id, top, left). Levels smaller than a window contribute none.
    pub fn segments(&self, game: GameId, registry: &Registry) -> Result<Vec<Segment>> {
        let mut out = Vec::new();
        for level in self.segment_levels(game, registry) {
            if level.height() < SEGMENT_HEIGHT || level.width() < SEGMENT_WIDTH {
                continue;
            }
            out.extend(extract_segments(level)?);
        }
        Ok(out)
    }

    pub fn sketches(&self, game: GameId, registry: &Registry) -> Result<Vec<Sketch>> {
        let map = &registry.profile(game).affordances;
        self.levels(game)
            .into_iter()
            .map(|l| crate::level::to_sketch(l, map))
            .collect()
    }

    pub fn segment_report(&self, game: GameId, registry: &Registry) -> SegmentCountReport {
        let profile = registry.profile(game);
        let levels: Vec<LevelCount> = self
            .levels(game)
            .into_iter()
            .map(|l| {
                let included = profile.contributes_segments(&l.id);
                LevelCount {
                    level: l.id.clone(),
                    height: l.height(),
                    width: l.width(),
                    included,
                    segments: if included {
                        segment_count(l.height(), l.width())
                    } else {
                        0
                    },
                }
            })
            .collect();
        SegmentCountReport {
            game,
            total: levels.iter().map(|l| l.segments).sum(),
            reference: reference_segment_count(game),
            levels,
        }
    }
}

/// Parses `<root>/<slug>/*.txt` in file-name order, applying the
/// profile's top padding.
pub fn load_game(root: &Path, profile: &GameProfile) -> Result<Vec<TileGrid>> {
    let dir = root.join(profile.game().slug());
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|path| {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let grid = parse_level(&text, profile, id).map_err(|e| Error::in_level(path.display().to_string(), e))?;
            Ok(pad_top(&grid, profile.pad_top, profile.background))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCount {
    pub level: String,
    pub height: usize,
    pub width: usize,
    pub included: bool,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentCountReport {
    pub game: GameId,
    pub levels: Vec<LevelCount>,
    pub total: usize,
    pub reference: usize,
}

impl SegmentCountReport {
    pub fn matches_reference(&self) -> bool {
        self.total == self.reference
    }

    /// Explanation naming every level's count, when the total differs
    /// from the reference selection.
    pub fn discrepancy_note(&self) -> Option<String> {
        if self.matches_reference() {
            return None;
        }
        let mut note = format!(
            "{}: {} segments from the local corpus, reference selection gives {} ({:+})\n",
            self.game,
            self.total,
            self.reference,
            self.total as i64 - self.reference as i64
        );
        for l in &self.levels {
            let status = if l.included { "" } else { " (excluded from segments)" };
            note.push_str(&format!(
                "  {} {}x{} -> {}{}\n",
                l.level, l.height, l.width, l.segments, status
            ));
        }
        Some(note)
    }
}

impl fmt::Display for SegmentCountReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.discrepancy_note() {
            Some(note) => f.write_str(&note),
            None => writeln!(f, "{}: {} segments (matches reference)", self.game, self.total),
        }
    }
}
