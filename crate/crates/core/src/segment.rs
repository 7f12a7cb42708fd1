//! 15x16 level segments and the newline-delimited `SegmentPack` format.
//!
//! A pack is a sequence of JSON objects, one per line:
//!
//! ```text
//! {"game":"SMB","level":"mario-1-1","top":0,"left":3,"layer":"tiles","tileset":"SMB","rows":["----------------",...]}
//! ```
//!
//! `game`, `level`, `top` and `left` always describe where the window was
//! cut from. `layer` is `sketch` (rows in the affordance alphabet) or
//! `tiles` (rows in the symbols of `tileset`). A filter that turns source
//! sketches into target tiles keeps the provenance fields and sets
//! `tileset` to the target game.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::level::{Grid, Sketch, TileGrid};
use crate::registry::{Affordance, GameId, GameProfile, Registry};

pub const SEGMENT_HEIGHT: usize = 15;
pub const SEGMENT_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentOrigin {
    pub game: GameId,
    pub level: String,
    pub top: usize,
    pub left: usize,
}

impl SegmentOrigin {
    /// Identifier given to grids and sketches cut at this origin.
    pub fn id(&self) -> String {
        format!("{}@{},{}", self.level, self.top, self.left)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub origin: SegmentOrigin,
    pub grid: TileGrid,
}

/// Number of windows `extract_segments` yields for a `height` x `width` grid.
pub fn segment_count(height: usize, width: usize) -> usize {
    if height < SEGMENT_HEIGHT || width < SEGMENT_WIDTH {
        0
    } else {
        (height - SEGMENT_HEIGHT + 1) * (width - SEGMENT_WIDTH + 1)
    }
}

/// Slides a 15x16 window over the grid at stride 1, row-major by (top, left).
pub fn extract_segments(grid: &TileGrid) -> Result<Vec<Segment>> {
    let (h, w) = grid.tiles.dims();
    if h < SEGMENT_HEIGHT || w < SEGMENT_WIDTH {
        return Err(Error::GridTooSmall {
            height: h,
            width: w,
            min_height: SEGMENT_HEIGHT,
            min_width: SEGMENT_WIDTH,
        });
    }
    let mut out = Vec::with_capacity(segment_count(h, w));
    for top in 0..=h - SEGMENT_HEIGHT {
        for left in 0..=w - SEGMENT_WIDTH {
            let origin = SegmentOrigin {
                game: grid.game,
                level: grid.id.clone(),
                top,
                left,
            };
            out.push(Segment {
                grid: TileGrid {
                    game: grid.game,
                    id: origin.id(),
                    tiles: grid.tiles.window(top, left, SEGMENT_HEIGHT, SEGMENT_WIDTH),
                },
                origin,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Sketch,
    Tiles,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackRecord {
    pub game: GameId,
    pub level: String,
    pub top: usize,
    pub left: usize,
    pub layer: Layer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tileset: Option<GameId>,
    pub rows: Vec<String>,
}

impl PackRecord {
    pub fn origin(&self) -> SegmentOrigin {
        SegmentOrigin {
            game: self.game,
            level: self.level.clone(),
            top: self.top,
            left: self.left,
        }
    }

    pub fn from_tiles(origin: &SegmentOrigin, grid: &TileGrid) -> Self {
        PackRecord {
            game: origin.game,
            level: origin.level.clone(),
            top: origin.top,
            left: origin.left,
            layer: Layer::Tiles,
            tileset: Some(grid.game),
            rows: grid
                .tiles
                .rows()
                .map(|r| r.iter().map(|&b| b as char).collect())
                .collect(),
        }
    }

    pub fn from_sketch(origin: &SegmentOrigin, sketch: &Sketch) -> Self {
        PackRecord {
            game: origin.game,
            level: origin.level.clone(),
            top: origin.top,
            left: origin.left,
            layer: Layer::Sketch,
            tileset: None,
            rows: sketch
                .cells
                .rows()
                .map(|r| r.iter().map(|a| a.symbol()).collect())
                .collect(),
        }
    }

    fn check_shape(&self) -> std::result::Result<(), String> {
        if self.rows.len() != SEGMENT_HEIGHT {
            return Err(format!("expected {SEGMENT_HEIGHT} rows, found {}", self.rows.len()));
        }
        if let Some(bad) = self.rows.iter().find(|r| r.chars().count() != SEGMENT_WIDTH) {
            return Err(format!("row {bad:?} is not {SEGMENT_WIDTH} wide"));
        }
        match (self.layer, self.tileset) {
            (Layer::Tiles, None) => Err("tiles record without tileset".into()),
            (Layer::Sketch, Some(_)) => Err("sketch record with tileset".into()),
            _ => Ok(()),
        }
    }

    /// Decodes a `tiles` record, checking every symbol against the registry.
    pub fn to_tile_grid(&self, registry: &Registry) -> Result<TileGrid> {
        let tileset = match (self.layer, self.tileset) {
            (Layer::Tiles, Some(t)) => t,
            _ => return Err(Error::format(0, "not a tiles record")),
        };
        let profile = registry.profile(tileset);
        let mut cells = Vec::with_capacity(SEGMENT_HEIGHT * SEGMENT_WIDTH);
        for (row, line) in self.rows.iter().enumerate() {
            for (col, ch) in line.chars().enumerate() {
                match u8::try_from(ch).ok().filter(|&b| profile.tileset.contains(b)) {
                    Some(b) => cells.push(b),
                    None => return Err(Error::UnknownSymbol { row, col, symbol: ch }),
                }
            }
        }
        Ok(TileGrid {
            game: tileset,
            id: self.origin().id(),
            tiles: Grid::from_cells(self.rows.len(), SEGMENT_WIDTH, cells)?,
        })
    }

    pub fn to_sketch(&self) -> Result<Sketch> {
        if self.layer != Layer::Sketch {
            return Err(Error::format(0, "not a sketch record"));
        }
        Sketch::parse(&self.rows.join("\n"), self.origin().id()).and_then(|s| check_sketch_dims(s, self.rows.len()))
    }
}

fn check_sketch_dims(s: Sketch, rows: usize) -> Result<Sketch> {
    if s.cells.dims() != (rows, SEGMENT_WIDTH) {
        return Err(Error::DimensionMismatch(format!(
            "sketch record decodes to {:?}",
            s.cells.dims()
        )));
    }
    Ok(s)
}

pub fn write_pack<W: Write>(mut out: W, records: &[PackRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).expect("pack records always serialize");
        writeln!(out, "{line}").map_err(|e| Error::io("<pack>", e))?;
    }
    out.flush().map_err(|e| Error::io("<pack>", e))
}

pub fn pack_to_string(records: &[PackRecord]) -> String {
    let mut buf = Vec::new();
    write_pack(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("pack output is UTF-8")
}

/// Reads a pack, validating record shape. Blank lines are not allowed.
pub fn read_pack<R: BufRead>(input: R) -> Result<Vec<PackRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<pack>", e))?;
        let record: PackRecord = serde_json::from_str(&line).map_err(|e| Error::format(i + 1, e.to_string()))?;
        record.check_shape().map_err(|m| Error::format(i + 1, m))?;
        out.push(record);
    }
    Ok(out)
}

/// Sketch variant of a game's segments, in extraction order.
pub fn sketch_records(segments: &[Segment], registry: &Registry) -> Result<Vec<PackRecord>> {
    segments
        .iter()
        .map(|s| {
            let map = &registry.profile(s.grid.game).affordances;
            crate::level::to_sketch(&s.grid, map).map(|sk| PackRecord::from_sketch(&s.origin, &sk))
        })
        .collect()
}

pub fn tile_records(segments: &[Segment]) -> Vec<PackRecord> {
    segments
        .iter()
        .map(|s| PackRecord::from_tiles(&s.origin, &s.grid))
        .collect()
}

/// One-hot channel count of a sketch record, fixed by the alphabet size.
pub const SKETCH_CHANNELS: usize = Affordance::ALL.len();

/// Channel layout shared with the autoencoder side: sketch channels in
/// alphabet order, tile channels in registry symbol order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelOrder {
    pub game: GameId,
    pub background: char,
    pub sketch: Vec<char>,
    pub tiles: Vec<TileChannel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileChannel {
    pub symbol: char,
    pub name: String,
    pub affordance: char,
}

impl ChannelOrder {
    pub fn for_profile(profile: &GameProfile) -> Self {
        let tiles = profile
            .tileset
            .symbols()
            .iter()
            .map(|&b| TileChannel {
                symbol: b as char,
                name: profile.tileset.name(b).unwrap_or_default().to_string(),
                affordance: profile
                    .affordances
                    .get(b)
                    .expect("validated profiles map every symbol")
                    .symbol(),
            })
            .collect();
        ChannelOrder {
            game: profile.game(),
            background: profile.background as char,
            sketch: Affordance::ALL.iter().map(|a| a.symbol()).collect(),
            tiles,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel orders always serialize") + "\n"
    }
}
