//! Level grids, sketches and the text format shared with the corpus.

use std::fmt;

use crate::error::{Error, Result};
use crate::registry::{Affordance, AffordanceMap, GameId, GameProfile};

/// Row-major rectangular grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    cells: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn from_cells(height: usize, width: usize, cells: Vec<T>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for a {height}x{width} grid",
                cells.len()
            )));
        }
        Ok(Grid { width, height, cells })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            width,
            height,
            cells: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        (row < self.height && col < self.width).then(|| self.cells[row * self.width + col])
    }

    /// Signed lookup; anything outside the grid is `None`.
    pub fn get_signed(&self, row: isize, col: isize) -> Option<T> {
        if row < 0 || col < 0 {
            None
        } else {
            self.get(row as usize, col as usize)
        }
    }

    pub fn at(&self, row: usize, col: usize) -> T {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.cells[row * self.width + col] = value;
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        // chunks(0) panics, and a zero-width grid has no rows to show anyway
        self.cells.chunks(self.width.max(1))
    }

    pub fn window(&self, top: usize, left: usize, height: usize, width: usize) -> Grid<T> {
        let mut cells = Vec::with_capacity(height * width);
        for r in top..top + height {
            let start = r * self.width + left;
            cells.extend_from_slice(&self.cells[start..start + width]);
        }
        Grid { width, height, cells }
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            cells: self.cells.iter().copied().map(f).collect(),
        }
    }
}

/// A level in one game's tile symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TileGrid {
    pub game: GameId,
    pub id: String,
    pub tiles: Grid<u8>,
}

impl TileGrid {
    pub fn height(&self) -> usize {
        self.tiles.height()
    }

    pub fn width(&self) -> usize {
        self.tiles.width()
    }

    /// Text form: one line per row, each terminated by a newline.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width() + 1) * self.height());
        for row in self.tiles.rows() {
            out.extend(row.iter().map(|&b| b as char));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A level in the affordance alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sketch {
    pub id: String,
    pub cells: Grid<Affordance>,
}

impl Sketch {
    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn parse(text: &str, id: impl Into<String>) -> Result<Self> {
        let cells = parse_rows(text, |c| Affordance::from_symbol(c as char))?;
        Ok(Sketch { id: id.into(), cells })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width() + 1) * self.height());
        for row in self.cells.rows() {
            out.extend(row.iter().map(|a| a.symbol()));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Sketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_rows<T: Copy>(text: &str, mut resolve: impl FnMut(u8) -> Option<T>) -> Result<Grid<T>> {
    let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let width = match lines.first() {
        Some(first) if !first.is_empty() => first.chars().count(),
        _ => return Err(Error::EmptyLevel),
    };
    let mut cells = Vec::with_capacity(width * lines.len());
    for (row, line) in lines.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(Error::RaggedRows {
                expected: width,
                found,
                row,
            });
        }
        for (col, ch) in line.chars().enumerate() {
            let cell = u8::try_from(ch)
                .ok()
                .and_then(&mut resolve)
                .ok_or(Error::UnknownSymbol { row, col, symbol: ch })?;
            cells.push(cell);
        }
    }
    Grid::from_cells(lines.len(), width, cells)
}

/// Parses a VGLC-style text level. Trailing whitespace on each line and
/// trailing blank lines are ignored; raw characters go through the
/// profile's alias table.
pub fn parse_level(text: &str, profile: &GameProfile, id: impl Into<String>) -> Result<TileGrid> {
    let tiles = parse_rows(text, |b| profile.resolve(b))?;
    Ok(TileGrid {
        game: profile.game(),
        id: id.into(),
        tiles,
    })
}

pub fn pad_top(grid: &TileGrid, rows: usize, background: u8) -> TileGrid {
    let width = grid.width();
    let mut cells = vec![background; rows * width];
    cells.extend_from_slice(grid.tiles.cells());
    TileGrid {
        game: grid.game,
        id: grid.id.clone(),
        tiles: Grid::from_cells(grid.height() + rows, width, cells).expect("dimensions agree"),
    }
}

pub fn to_sketch(grid: &TileGrid, map: &AffordanceMap) -> Result<Sketch> {
    if grid.game != map.game() {
        return Err(Error::GameMismatch {
            expected: map.game(),
            found: grid.game,
        });
    }
    let mut cells = Vec::with_capacity(grid.tiles.cells().len());
    for (i, &t) in grid.tiles.cells().iter().enumerate() {
        let a = map.get(t).ok_or(Error::UnknownSymbol {
            row: i / grid.width(),
            col: i % grid.width(),
            symbol: t as char,
        })?;
        cells.push(a);
    }
    Ok(Sketch {
        id: grid.id.clone(),
        cells: Grid::from_cells(grid.height(), grid.width(), cells)?,
    })
}
