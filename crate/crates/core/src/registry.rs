//! Tilesets, tile-to-affordance maps and per-game settings.
//!
//! Each game is described by one TOML file. The four shipped files live in
//! `registry/` and are compiled in, so `Registry::default()` never touches
//! the filesystem; `Registry::from_dir` loads an edited copy instead.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::playability::MovementModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameId {
    #[serde(rename = "SMB")]
    Smb,
    #[serde(rename = "KI")]
    Ki,
    #[serde(rename = "MM")]
    Mm,
    #[serde(rename = "Met")]
    Met,
}

impl GameId {
    pub const ALL: [GameId; 4] = [GameId::Smb, GameId::Ki, GameId::Mm, GameId::Met];

    pub fn as_str(self) -> &'static str {
        match self {
            GameId::Smb => "SMB",
            GameId::Ki => "KI",
            GameId::Mm => "MM",
            GameId::Met => "Met",
        }
    }

    /// Lower-case name used for directories and file names.
    pub fn slug(self) -> &'static str {
        match self {
            GameId::Smb => "smb",
            GameId::Ki => "ki",
            GameId::Mm => "mm",
            GameId::Met => "met",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// All ordered (source, target) pairs with source != target, grouped by
    /// target the way the evaluation tables list them.
    pub fn transfer_pairs() -> Vec<(GameId, GameId)> {
        let mut pairs = Vec::with_capacity(12);
        for target in GameId::ALL {
            for source in GameId::ALL {
                if source != target {
                    pairs.push((source, target));
                }
            }
        }
        pairs
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smb" => Ok(GameId::Smb),
            "ki" => Ok(GameId::Ki),
            "mm" => Ok(GameId::Mm),
            "met" => Ok(GameId::Met),
            _ => Err(Error::Registry(format!("unknown game {s:?}"))),
        }
    }
}

/// The shared five-symbol alphabet that sketches are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Affordance {
    Solid,
    Climbable,
    Hazard,
    Collectable,
    Empty,
}

impl Affordance {
    pub const ALL: [Affordance; 5] = [
        Affordance::Solid,
        Affordance::Climbable,
        Affordance::Hazard,
        Affordance::Collectable,
        Affordance::Empty,
    ];

    pub fn symbol(self) -> char {
        match self {
            Affordance::Solid => 'X',
            Affordance::Climbable => '|',
            Affordance::Hazard => 'E',
            Affordance::Collectable => '*',
            Affordance::Empty => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'X' => Some(Affordance::Solid),
            '|' => Some(Affordance::Climbable),
            'E' => Some(Affordance::Hazard),
            '*' => Some(Affordance::Collectable),
            '-' => Some(Affordance::Empty),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Affordance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Parses a string of affordance symbols such as `"X|"`.
pub(crate) fn parse_affordance_set(s: &str) -> Result<Vec<Affordance>> {
    s.chars()
        .map(|c| {
            Affordance::from_symbol(c).ok_or_else(|| Error::Registry(format!("{c:?} is not an affordance symbol")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tileset {
    game: GameId,
    symbols: Vec<u8>,
    names: Vec<String>,
}

impl Tileset {
    pub fn new(game: GameId, entries: impl IntoIterator<Item = (u8, String)>) -> Result<Self> {
        let (symbols, names): (Vec<u8>, Vec<String>) = entries.into_iter().unzip();
        for (i, &s) in symbols.iter().enumerate() {
            if !s.is_ascii_graphic() {
                return Err(Error::Registry(format!(
                    "{game}: symbol {:?} is not a printable ASCII character",
                    s as char
                )));
            }
            if symbols[..i].contains(&s) {
                return Err(Error::Registry(format!("{game}: symbol {:?} listed twice", s as char)));
            }
        }
        Ok(Tileset { game, symbols, names })
    }

    pub fn game(&self) -> GameId {
        self.game
    }

    /// Symbols in registry order (this order fixes one-hot channel indices).
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, symbol: u8) -> bool {
        self.symbols.contains(&symbol)
    }

    pub fn index_of(&self, symbol: u8) -> Option<usize> {
        self.symbols.iter().position(|&s| s == symbol)
    }

    pub fn name(&self, symbol: u8) -> Option<&str> {
        self.index_of(symbol).map(|i| self.names[i].as_str())
    }
}

/// Total map from a game's tile symbols to affordances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffordanceMap {
    game: GameId,
    table: BTreeMap<u8, Affordance>,
    preimages: [Vec<u8>; 5],
}

impl AffordanceMap {
    pub fn new(game: GameId, entries: impl IntoIterator<Item = (u8, Affordance)>) -> Self {
        let mut table = BTreeMap::new();
        let mut preimages: [Vec<u8>; 5] = Default::default();
        for (symbol, affordance) in entries {
            if table.insert(symbol, affordance).is_none() {
                preimages[affordance.index()].push(symbol);
            }
        }
        AffordanceMap { game, table, preimages }
    }

    pub fn game(&self) -> GameId {
        self.game
    }

    pub fn get(&self, symbol: u8) -> Option<Affordance> {
        self.table.get(&symbol).copied()
    }

    /// Tiles mapping to `affordance`, in registry order.
    pub fn preimage(&self, affordance: Affordance) -> &[u8] {
        &self.preimages[affordance.index()]
    }
}

/// Everything the toolkit knows about one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameProfile {
    pub tileset: Tileset,
    pub affordances: AffordanceMap,
    pub background: u8,
    /// Raw corpus characters rewritten to registry symbols on ingestion.
    pub aliases: BTreeMap<u8, u8>,
    /// Background rows prepended to every level at ingestion.
    pub pad_top: usize,
    /// Level ids that contribute segments; empty means all of them.
    pub segment_levels: Vec<String>,
    pub movement: MovementModel,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    game: GameId,
    background: String,
    #[serde(default)]
    pad_top: usize,
    #[serde(default)]
    segment_levels: Vec<String>,
    movement: MovementFile,
    tile: Vec<TileEntry>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MovementFile {
    jump_height: usize,
    jump_reach: usize,
    #[serde(default = "one")]
    fall_speed: usize,
    solid: String,
    hazard: String,
    #[serde(default)]
    climbable: String,
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TileEntry {
    symbol: String,
    name: String,
    affordance: String,
}

fn single_byte(game: GameId, what: &str, s: &str) -> Result<u8> {
    match s.as_bytes() {
        [b] if b.is_ascii_graphic() => Ok(*b),
        _ => Err(Error::Registry(format!(
            "{game}: {what} {s:?} must be one printable ASCII character"
        ))),
    }
}

impl GameProfile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: GameFile = toml::from_str(text).map_err(|e| Error::Registry(e.message().to_string()))?;
        let game = file.game;

        let mut entries = Vec::with_capacity(file.tile.len());
        let mut mapping = Vec::with_capacity(file.tile.len());
        for tile in &file.tile {
            let symbol = single_byte(game, "tile symbol", &tile.symbol)?;
            let affordance = match parse_affordance_set(&tile.affordance)?.as_slice() {
                [a] => *a,
                _ => {
                    return Err(Error::Registry(format!(
                        "{game}: tile {:?} needs exactly one affordance",
                        tile.symbol
                    )))
                }
            };
            entries.push((symbol, tile.name.clone()));
            mapping.push((symbol, affordance));
        }
        let tileset = Tileset::new(game, entries)?;
        let affordances = AffordanceMap::new(game, mapping);

        let background = single_byte(game, "background", &file.background)?;
        if !tileset.contains(background) {
            return Err(Error::Registry(format!(
                "{game}: background {:?} is not in the tileset",
                file.background
            )));
        }

        let mut aliases = BTreeMap::new();
        for (raw, symbol) in &file.aliases {
            let raw = single_byte(game, "alias", raw)?;
            let symbol = single_byte(game, "alias target", symbol)?;
            if !tileset.contains(symbol) {
                return Err(Error::Registry(format!(
                    "{game}: alias target {:?} is not in the tileset",
                    symbol as char
                )));
            }
            aliases.insert(raw, symbol);
        }

        let m = &file.movement;
        let movement = MovementModel {
            game,
            jump_height: m.jump_height,
            jump_reach: m.jump_reach,
            fall_speed: m.fall_speed,
            solid: parse_affordance_set(&m.solid)?,
            hazard: parse_affordance_set(&m.hazard)?,
            climbable: parse_affordance_set(&m.climbable)?,
        };
        if movement.jump_height == 0 || movement.fall_speed == 0 {
            return Err(Error::Registry(format!(
                "{game}: jump_height and fall_speed must be at least 1"
            )));
        }

        Ok(GameProfile {
            tileset,
            affordances,
            background,
            aliases,
            pad_top: file.pad_top,
            segment_levels: file.segment_levels,
            movement,
        })
    }

    pub fn game(&self) -> GameId {
        self.tileset.game()
    }

    /// Resolves a raw corpus character to a registry symbol.
    pub fn resolve(&self, raw: u8) -> Option<u8> {
        if self.tileset.contains(raw) {
            Some(raw)
        } else {
            self.aliases.get(&raw).copied()
        }
    }

    pub fn contributes_segments(&self, level_id: &str) -> bool {
        self.segment_levels.is_empty() || self.segment_levels.iter().any(|l| l == level_id)
    }
}

const DEFAULT_FILES: [&str; 4] = [
    include_str!("../registry/smb.toml"),
    include_str!("../registry/ki.toml"),
    include_str!("../registry/mm.toml"),
    include_str!("../registry/met.toml"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    profiles: Vec<GameProfile>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::from_toml_strs(DEFAULT_FILES).expect("shipped registry files are well formed")
    }
}

impl Registry {
    /// Builds a registry from exactly one profile per game, in any order.
    pub fn from_profiles(profiles: impl IntoIterator<Item = GameProfile>) -> Result<Self> {
        let mut slots: Vec<Option<GameProfile>> = vec![None, None, None, None];
        for p in profiles {
            let i = p.game().index();
            if slots[i].replace(p).is_some() {
                return Err(Error::Registry(format!("{} defined twice", GameId::ALL[i])));
            }
        }
        let profiles = slots
            .into_iter()
            .zip(GameId::ALL)
            .map(|(p, g)| p.ok_or_else(|| Error::Registry(format!("no profile for {g}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Registry { profiles })
    }

    pub fn from_toml_strs<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let profiles = texts
            .into_iter()
            .map(GameProfile::from_toml)
            .collect::<Result<Vec<_>>>()?;
        Registry::from_profiles(profiles)
    }

    /// Loads `<dir>/{smb,ki,mm,met}.toml`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut profiles = Vec::with_capacity(4);
        for game in GameId::ALL {
            let path = dir.join(format!("{}.toml", game.slug()));
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let profile = GameProfile::from_toml(&text)?;
            if profile.game() != game {
                return Err(Error::Registry(format!(
                    "{} declares game {}",
                    path.display(),
                    profile.game()
                )));
            }
            profiles.push(profile);
        }
        Registry::from_profiles(profiles)
    }

    pub fn profile(&self, game: GameId) -> &GameProfile {
        &self.profiles[game.index()]
    }

    pub fn profiles(&self) -> &[GameProfile] {
        &self.profiles
    }
}

/// Tileset sizes of the reference corpus.
pub const EXPECTED_TILESET_SIZES: [(GameId, usize); 4] =
    [(GameId::Smb, 14), (GameId::Ki, 6), (GameId::Mm, 16), (GameId::Met, 8)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Overlap {
        symbol: char,
        games: Vec<GameId>,
    },
    Cardinality {
        game: GameId,
        expected: usize,
        found: usize,
    },
    BackgroundAffordance {
        game: GameId,
        found: Affordance,
    },
    AliasShadowsSymbol {
        game: GameId,
        symbol: char,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { symbol, games } => {
                let names: Vec<_> = games.iter().map(|g| g.as_str()).collect();
                write!(f, "symbol {symbol:?} shared by {}", names.join(", "))
            }
            Violation::Cardinality { game, expected, found } => {
                write!(f, "{game} has {found} tiles, expected {expected}")
            }
            Violation::BackgroundAffordance { game, found } => {
                write!(f, "{game} background maps to {found}, expected -")
            }
            Violation::AliasShadowsSymbol { game, symbol } => {
                write!(f, "{game} alias {symbol:?} shadows a tileset symbol")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub sizes: Vec<(GameId, usize)>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_registry(registry: &Registry) -> ValidationReport {
    let mut violations = Vec::new();
    let sizes: Vec<_> = registry
        .profiles()
        .iter()
        .map(|p| (p.game(), p.tileset.len()))
        .collect();

    for (game, expected) in EXPECTED_TILESET_SIZES {
        let found = registry.profile(game).tileset.len();
        if found != expected {
            violations.push(Violation::Cardinality { game, expected, found });
        }
    }

    let mut owners: BTreeMap<u8, Vec<GameId>> = BTreeMap::new();
    for p in registry.profiles() {
        for &s in p.tileset.symbols() {
            owners.entry(s).or_default().push(p.game());
        }
    }
    for (symbol, games) in owners {
        if games.len() > 1 {
            violations.push(Violation::Overlap {
                symbol: symbol as char,
                games,
            });
        }
    }

    for p in registry.profiles() {
        let found = p.affordances.get(p.background).unwrap_or(Affordance::Empty);
        if found != Affordance::Empty {
            violations.push(Violation::BackgroundAffordance { game: p.game(), found });
        }
        for &raw in p.aliases.keys() {
            if p.tileset.contains(raw) {
                violations.push(Violation::AliasShadowsSymbol {
                    game: p.game(),
                    symbol: raw as char,
                });
            }
        }
    }

    ValidationReport { sizes, violations }
}
