//! Markov random field filters.
//!
//! A model is a table from affordance contexts (the 4- or 8-neighbourhood
//! of a cell in a sketch) to counts of the original tile found at the
//! centre. Cells beyond the border read as `#`, so edge positions get their
//! own contexts instead of being skipped.
//!
//! Sampling keeps the centre affordance fixed: the learned distribution is
//! restricted to tiles with the centre's affordance and renormalised. An
//! unseen context, or one with no matching tile, falls back to a uniform
//! pick among the game's tiles with that affordance. When the game has no
//! such tile at all the background tile is emitted and the cell is flagged.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::level::{to_sketch, Grid, Sketch, TileGrid};
use crate::registry::{Affordance, GameId, GameProfile};
use crate::rng::FilterRng;

pub const OUT_OF_BOUNDS: u8 = b'#';

const FORMAT_HEADER: &str = "sketchfilter-mrf 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeighborhoodOrder {
    /// N, S, E, W.
    Four,
    /// NW, N, NE, W, E, SW, S, SE.
    Eight,
}

const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];
const EIGHT: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

impl NeighborhoodOrder {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            NeighborhoodOrder::Four => &FOUR,
            NeighborhoodOrder::Eight => &EIGHT,
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        self.offsets().len()
    }

    pub fn from_len(n: usize) -> Option<Self> {
        match n {
            4 => Some(NeighborhoodOrder::Four),
            8 => Some(NeighborhoodOrder::Eight),
            _ => None,
        }
    }
}

/// Neighbourhood key: affordance symbols plus `#` for out-of-bounds cells.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context {
    len: u8,
    cells: [u8; 8],
}

impl Context {
    pub fn read(sketch: &Grid<Affordance>, row: usize, col: usize, order: NeighborhoodOrder) -> Self {
        let mut cells = [0u8; 8];
        for (slot, &(dr, dc)) in cells.iter_mut().zip(order.offsets()) {
            *slot = sketch
                .get_signed(row as isize + dr, col as isize + dc)
                .map_or(OUT_OF_BOUNDS, |a| a.symbol() as u8);
        }
        Context {
            len: order.len() as u8,
            cells,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let bytes = s.as_bytes();
        NeighborhoodOrder::from_len(bytes.len())?;
        let mut cells = [0u8; 8];
        for (slot, &b) in cells.iter_mut().zip(bytes) {
            if b != OUT_OF_BOUNDS && Affordance::from_symbol(b as char).is_none() {
                return None;
            }
            *slot = b;
        }
        Some(Context {
            len: bytes.len() as u8,
            cells,
        })
    }

    pub fn order(&self) -> NeighborhoodOrder {
        NeighborhoodOrder::from_len(self.len as usize).expect("contexts hold 4 or 8 cells")
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.cells[..self.len as usize]).expect("context cells are ASCII")
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Context({:?})", self.as_str())
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type TileCounts = BTreeMap<u8, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrfModel {
    pub game: GameId,
    pub order: NeighborhoodOrder,
    counts: BTreeMap<Context, TileCounts>,
}

/// One sampled cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub tile: u8,
    /// The game has no tile with the requested affordance; `tile` is the
    /// background instead.
    pub substituted: bool,
}

/// Output of applying a filter to a sketch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutput {
    pub grid: TileGrid,
    /// (row, col) of cells whose affordance could not be reproduced.
    pub substitutions: Vec<(usize, usize)>,
}

fn count_level(grid: &TileGrid, sketch: &Sketch, order: NeighborhoodOrder) -> BTreeMap<Context, TileCounts> {
    let mut table: BTreeMap<Context, TileCounts> = BTreeMap::new();
    for r in 0..grid.height() {
        for c in 0..grid.width() {
            let ctx = Context::read(&sketch.cells, r, c, order);
            *table.entry(ctx).or_default().entry(grid.tiles.at(r, c)).or_insert(0) += 1;
        }
    }
    table
}

/// Counts centre tiles per context over every cell of every level.
pub fn train_mrf(levels: &[(TileGrid, Sketch)], order: NeighborhoodOrder) -> Result<MrfModel> {
    let game = levels.first().ok_or(Error::EmptyCorpus)?.0.game;
    for (grid, sketch) in levels {
        if grid.game != game {
            return Err(Error::MixedGames);
        }
        if grid.tiles.dims() != sketch.cells.dims() {
            return Err(Error::DimensionMismatch(format!(
                "level {} is {:?} but its sketch is {:?}",
                grid.id,
                grid.tiles.dims(),
                sketch.cells.dims()
            )));
        }
    }

    let partial = map_ordered(levels, |_, (grid, sketch)| count_level(grid, sketch, order));
    let mut counts: BTreeMap<Context, TileCounts> = BTreeMap::new();
    for table in partial {
        for (ctx, tiles) in table {
            let row = counts.entry(ctx).or_default();
            for (tile, n) in tiles {
                *row.entry(tile).or_insert(0) += n;
            }
        }
    }
    Ok(MrfModel { game, order, counts })
}

/// Sketches every level with the profile's map, then trains.
pub fn train_from_levels(levels: &[TileGrid], profile: &GameProfile, order: NeighborhoodOrder) -> Result<MrfModel> {
    let pairs = levels
        .iter()
        .map(|g| to_sketch(g, &profile.affordances).map(|s| (g.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    train_mrf(&pairs, order)
}

impl MrfModel {
    pub fn counts(&self) -> &BTreeMap<Context, TileCounts> {
        &self.counts
    }

    pub fn context_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().flat_map(|row| row.values()).sum()
    }

    /// Learned distribution for a context: counts normalised to sum to one.
    pub fn distribution(&self, ctx: &Context) -> Option<Vec<(u8, f64)>> {
        let row = self.counts.get(ctx)?;
        let total: u64 = row.values().sum();
        Some(row.iter().map(|(&t, &n)| (t, n as f64 / total as f64)).collect())
    }

    pub fn sample_tile(&self, profile: &GameProfile, ctx: &Context, center: Affordance, rng: &mut FilterRng) -> Sample {
        let map = &profile.affordances;
        if let Some(row) = self.counts.get(ctx) {
            let matching: Vec<(u8, u64)> = row
                .iter()
                .filter(|(&t, _)| map.get(t) == Some(center))
                .map(|(&t, &n)| (t, n))
                .collect();
            let total: u64 = matching.iter().map(|&(_, n)| n).sum();
            if total > 0 {
                let mut pick = rng.random_range(0..total);
                for (tile, n) in matching {
                    if pick < n {
                        return Sample {
                            tile,
                            substituted: false,
                        };
                    }
                    pick -= n;
                }
                unreachable!("pick is below the summed weight");
            }
        }
        let candidates = map.preimage(center);
        if candidates.is_empty() {
            return Sample {
                tile: profile.background,
                substituted: true,
            };
        }
        Sample {
            tile: candidates[rng.random_range(0..candidates.len())],
            substituted: false,
        }
    }

    /// Replaces every cell of the sketch, row-major, from one rng stream.
    pub fn apply(&self, profile: &GameProfile, sketch: &Sketch, rng: &mut FilterRng) -> Result<FilterOutput> {
        if profile.game() != self.game {
            return Err(Error::GameMismatch {
                expected: self.game,
                found: profile.game(),
            });
        }
        let (h, w) = sketch.cells.dims();
        if h == 0 || w == 0 {
            return Err(Error::EmptyLevel);
        }
        let mut cells = Vec::with_capacity(h * w);
        let mut substitutions = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let ctx = Context::read(&sketch.cells, r, c, self.order);
                let s = self.sample_tile(profile, &ctx, sketch.cells.at(r, c), rng);
                if s.substituted {
                    substitutions.push((r, c));
                }
                cells.push(s.tile);
            }
        }
        Ok(FilterOutput {
            grid: TileGrid {
                game: self.game,
                id: sketch.id.clone(),
                tiles: Grid::from_cells(h, w, cells)?,
            },
            substitutions,
        })
    }

    /// Canonical text form; contexts and tiles in ascending byte order.
    pub fn save(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "game {}", self.game).unwrap();
        writeln!(out, "order {}", self.order.len()).unwrap();
        writeln!(out, "contexts {}", self.counts.len()).unwrap();
        for (ctx, row) in &self.counts {
            out.push_str(ctx.as_str());
            out.push_str(": ");
            for (i, (&t, &n)) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{}={}", t as char, n).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str) -> Result<Self> {
        let mut lines = text
            .split_inclusive('\n')
            .enumerate()
            .map(|(i, l)| match l.strip_suffix('\n') {
                Some(l) => Ok((i + 1, l)),
                None => Err(Error::format(i + 1, "truncated line")),
            });
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .unwrap_or_else(|| Err(Error::format(0, format!("missing {what}"))))
        };

        let (n, header) = next("header")?;
        if header != FORMAT_HEADER {
            return Err(Error::format(n, format!("expected {FORMAT_HEADER:?}")));
        }
        let (n, line) = next("game")?;
        let game: GameId = line
            .strip_prefix("game ")
            .ok_or_else(|| Error::format(n, "expected game"))?
            .parse()
            .map_err(|_| Error::format(n, "unknown game"))?;
        let (n, line) = next("order")?;
        let order = line
            .strip_prefix("order ")
            .and_then(|s| s.parse().ok())
            .and_then(NeighborhoodOrder::from_len)
            .ok_or_else(|| Error::format(n, "expected order 4 or 8"))?;
        let (n, line) = next("contexts")?;
        let expected: usize = line
            .strip_prefix("contexts ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(n, "expected context count"))?;

        let mut counts = BTreeMap::new();
        for _ in 0..expected {
            let (n, line) = next("context row")?;
            let (ctx, row) = parse_row(line, order).map_err(|m| Error::format(n, m))?;
            if counts.insert(ctx, row).is_some() {
                return Err(Error::format(n, format!("duplicate context {ctx}")));
            }
        }
        if let Some(extra) = lines.next() {
            let (n, _) = extra?;
            return Err(Error::format(n, "trailing data after the declared contexts"));
        }
        Ok(MrfModel { game, order, counts })
    }

    /// Checks that every tile in the table belongs to the profile's tileset.
    pub fn check_tileset(&self, profile: &GameProfile) -> Result<()> {
        if profile.game() != self.game {
            return Err(Error::GameMismatch {
                expected: self.game,
                found: profile.game(),
            });
        }
        for row in self.counts.values() {
            if let Some(&t) = row.keys().find(|&&t| !profile.tileset.contains(t)) {
                return Err(Error::Registry(format!(
                    "model tile {:?} is not a {} symbol",
                    t as char, self.game
                )));
            }
        }
        Ok(())
    }
}

fn parse_row(line: &str, order: NeighborhoodOrder) -> std::result::Result<(Context, TileCounts), String> {
    let (key, rest) = line
        .split_once(": ")
        .ok_or_else(|| "expected \"context: tile=count,...\"".to_string())?;
    let ctx = Context::parse(key).ok_or_else(|| format!("bad context {key:?}"))?;
    if ctx.order() != order {
        return Err(format!("context {key:?} does not match order {}", order.len()));
    }
    // Entries are `<symbol>=<digits>` joined by ','; the symbol is always one
    // byte, which keeps symbols such as ',' and '=' unambiguous.
    let bytes = rest.as_bytes();
    let mut row = TileCounts::new();
    let mut i = 0;
    loop {
        let tile = *bytes.get(i).ok_or("missing tile symbol")?;
        if !tile.is_ascii_graphic() {
            return Err(format!("bad tile symbol {:?}", tile as char));
        }
        if bytes.get(i + 1) != Some(&b'=') {
            return Err("expected '=' after tile symbol".into());
        }
        let start = i + 2;
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let n: u64 = rest[start..end]
            .parse()
            .map_err(|_| format!("bad count for {:?}", tile as char))?;
        if n == 0 {
            return Err("zero count".into());
        }
        if row.insert(tile, n).is_some() {
            return Err(format!("tile {:?} listed twice", tile as char));
        }
        match bytes.get(end) {
            None => break,
            Some(b',') => i = end + 1,
            Some(_) => return Err("expected ',' between entries".into()),
        }
    }
    Ok((ctx, row))
}
