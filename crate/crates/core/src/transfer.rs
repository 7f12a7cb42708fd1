//! Source level -> sketch -> target filter -> target-game level.
//!
//! MRF filters run in process. Autoencoder filters live outside the crate
//! and are reached through segment packs: either a pack of precomputed
//! outputs ([`PackFilter`]) or a command that turns a sketch pack into a
//! tile pack ([`CommandFilter`]).

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::level::{to_sketch, Sketch, TileGrid};
use crate::mrf::{FilterOutput, MrfModel, NeighborhoodOrder};
use crate::registry::{AffordanceMap, GameId, GameProfile, Registry};
use crate::rng::{item_seed, seeded, FilterRng};
use crate::segment::{read_pack, write_pack, Layer, PackRecord, SegmentOrigin, SEGMENT_HEIGHT, SEGMENT_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Mrf4,
    Mrf8,
    Ae,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Mrf4, FilterKind::Mrf8, FilterKind::Ae];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Mrf4 => "mrf4",
            FilterKind::Mrf8 => "mrf8",
            FilterKind::Ae => "ae",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Mrf4 => "MRF-4",
            FilterKind::Mrf8 => "MRF-8",
            FilterKind::Ae => "AE",
        }
    }

    pub fn order(self) -> Option<NeighborhoodOrder> {
        match self {
            FilterKind::Mrf4 => Some(NeighborhoodOrder::Four),
            FilterKind::Mrf8 => Some(NeighborhoodOrder::Eight),
            FilterKind::Ae => None,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "mrf4" => Ok(FilterKind::Mrf4),
            "mrf8" => Ok(FilterKind::Mrf8),
            "ae" => Ok(FilterKind::Ae),
            _ => Err(Error::InvalidParameter(format!("unknown filter {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    WholeLevel,
    /// 15x16 segments only.
    Segment,
}

/// A sketch to tiles translator for one target game.
pub trait Filter: Sync {
    fn target(&self) -> GameId;
    fn kind(&self) -> FilterKind;
    fn granularity(&self) -> Granularity;

    fn apply(&self, sketch: &Sketch, rng: &mut FilterRng) -> Result<FilterOutput>;

    /// Item `i` is filtered with a stream seeded by `item_seed(seed, i)`.
    fn apply_batch(&self, items: &[SketchItem], seed: u64) -> Vec<Result<FilterOutput>> {
        map_ordered(items, |i, item| {
            check_granularity(self, &item.sketch)?;
            self.apply(&item.sketch, &mut seeded(item_seed(seed, i)))
        })
    }
}

fn check_granularity<F: Filter + ?Sized>(filter: &F, sketch: &Sketch) -> Result<()> {
    let (height, width) = sketch.cells.dims();
    if filter.granularity() == Granularity::Segment && (height, width) != (SEGMENT_HEIGHT, SEGMENT_WIDTH) {
        return Err(Error::GranularityMismatch { height, width });
    }
    Ok(())
}

pub struct MrfFilter {
    model: MrfModel,
    profile: GameProfile,
}

impl MrfFilter {
    pub fn new(model: MrfModel, profile: GameProfile) -> Result<Self> {
        model.check_tileset(&profile)?;
        Ok(MrfFilter { model, profile })
    }

    pub fn model(&self) -> &MrfModel {
        &self.model
    }
}

impl Filter for MrfFilter {
    fn target(&self) -> GameId {
        self.model.game
    }

    fn kind(&self) -> FilterKind {
        match self.model.order {
            NeighborhoodOrder::Four => FilterKind::Mrf4,
            NeighborhoodOrder::Eight => FilterKind::Mrf8,
        }
    }

    fn granularity(&self) -> Granularity {
        Granularity::WholeLevel
    }

    fn apply(&self, sketch: &Sketch, rng: &mut FilterRng) -> Result<FilterOutput> {
        self.model.apply(&self.profile, sketch, rng)
    }
}

/// Serves precomputed tile segments, matched to sketches by segment id
/// (`level@top,left`).
pub struct PackFilter {
    target: GameId,
    outputs: HashMap<String, TileGrid>,
}

impl PackFilter {
    pub fn from_records(target: GameId, records: &[PackRecord], registry: &Registry) -> Result<Self> {
        let mut outputs = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.tileset != Some(target) {
                return Err(Error::format(i + 1, format!("expected {target} tiles")));
            }
            let grid = r.to_tile_grid(registry)?;
            outputs.insert(r.origin().id(), grid);
        }
        Ok(PackFilter { target, outputs })
    }

    pub fn load(path: &Path, target: GameId, registry: &Registry) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let records = read_pack(BufReader::new(file))?;
        PackFilter::from_records(target, &records, registry)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

impl Filter for PackFilter {
    fn target(&self) -> GameId {
        self.target
    }

    fn kind(&self) -> FilterKind {
        FilterKind::Ae
    }

    fn granularity(&self) -> Granularity {
        Granularity::Segment
    }

    fn apply(&self, sketch: &Sketch, _rng: &mut FilterRng) -> Result<FilterOutput> {
        check_granularity(self, sketch)?;
        let grid = self
            .outputs
            .get(&sketch.id)
            .ok_or_else(|| Error::External(format!("no precomputed output for {}", sketch.id)))?;
        Ok(FilterOutput {
            grid: TileGrid {
                id: sketch.id.clone(),
                ..grid.clone()
            },
            substitutions: Vec::new(),
        })
    }
}

/// Runs an external program once per batch. `{input}`, `{output}` and
/// `{target}` in the arguments are replaced by the sketch pack path, the
/// expected tile pack path and the target game's slug.
pub struct CommandFilter {
    target: GameId,
    command: Vec<String>,
    workdir: PathBuf,
    registry: Registry,
}

impl CommandFilter {
    pub fn new(target: GameId, command: Vec<String>, workdir: PathBuf, registry: Registry) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::InvalidParameter("empty filter command".into()));
        }
        Ok(CommandFilter {
            target,
            command,
            workdir,
            registry,
        })
    }

    fn run(&self, items: &[SketchItem]) -> Result<Vec<TileGrid>> {
        fs::create_dir_all(&self.workdir).map_err(|e| Error::io(&self.workdir, e))?;
        let input = self.workdir.join(format!("sketches-{}.jsonl", self.target.slug()));
        let output = self.workdir.join(format!("tiles-{}.jsonl", self.target.slug()));
        let records: Vec<PackRecord> = items
            .iter()
            .map(|it| PackRecord::from_sketch(&it.origin, &it.sketch))
            .collect();
        let file = fs::File::create(&input).map_err(|e| Error::io(&input, e))?;
        write_pack(std::io::BufWriter::new(file), &records)?;
        let _ = fs::remove_file(&output);

        let args: Vec<String> = self
            .command
            .iter()
            .map(|a| {
                a.replace("{input}", &input.to_string_lossy())
                    .replace("{output}", &output.to_string_lossy())
                    .replace("{target}", self.target.slug())
            })
            .collect();
        let status = Command::new(&args[0])
            .args(&args[1..])
            .status()
            .map_err(|e| Error::External(format!("{}: {e}", args[0])))?;
        if !status.success() {
            return Err(Error::External(format!("{} exited with {status}", args[0])));
        }

        let file = fs::File::open(&output).map_err(|e| Error::io(&output, e))?;
        let back = read_pack(BufReader::new(file))?;
        if back.len() != records.len() {
            return Err(Error::External(format!(
                "sent {} sketches, received {} segments",
                records.len(),
                back.len()
            )));
        }
        records
            .iter()
            .zip(&back)
            .enumerate()
            .map(|(i, (sent, got))| {
                if got.origin() != sent.origin() || got.layer != Layer::Tiles || got.tileset != Some(self.target) {
                    return Err(Error::format(i + 1, "record does not answer the matching sketch"));
                }
                let mut grid = got.to_tile_grid(&self.registry)?;
                grid.id = items[i].sketch.id.clone();
                Ok(grid)
            })
            .collect()
    }
}

impl Filter for CommandFilter {
    fn target(&self) -> GameId {
        self.target
    }

    fn kind(&self) -> FilterKind {
        FilterKind::Ae
    }

    fn granularity(&self) -> Granularity {
        Granularity::Segment
    }

    /// Single sketches go out under the target game with an origin read
    /// from the sketch id when it has the segment form.
    fn apply(&self, sketch: &Sketch, _rng: &mut FilterRng) -> Result<FilterOutput> {
        check_granularity(self, sketch)?;
        let item = SketchItem {
            origin: origin_from_id(self.target, &sketch.id),
            windowed: true,
            sketch: sketch.clone(),
        };
        let grid = self.run(std::slice::from_ref(&item))?.remove(0);
        Ok(FilterOutput {
            grid,
            substitutions: Vec::new(),
        })
    }

    fn apply_batch(&self, items: &[SketchItem], _seed: u64) -> Vec<Result<FilterOutput>> {
        let mut ok = Vec::new();
        let mut results: Vec<Option<Result<FilterOutput>>> = Vec::with_capacity(items.len());
        for item in items {
            match check_granularity(self, &item.sketch) {
                Ok(()) => {
                    ok.push(item.clone());
                    results.push(None);
                }
                Err(e) => results.push(Some(Err(e))),
            }
        }
        let mut grids = match self.run(&ok) {
            Ok(grids) => grids.into_iter().map(Ok).collect::<Vec<_>>(),
            Err(e) => {
                let msg = e.to_string();
                ok.iter().map(|_| Err(Error::External(msg.clone()))).collect()
            }
        }
        .into_iter();
        results
            .into_iter()
            .map(|slot| {
                slot.unwrap_or_else(|| {
                    grids
                        .next()
                        .expect("one result per forwarded item")
                        .map(|grid| FilterOutput {
                            grid,
                            substitutions: Vec::new(),
                        })
                })
            })
            .collect()
    }
}

fn origin_from_id(game: GameId, id: &str) -> SegmentOrigin {
    let parsed = id.rsplit_once('@').and_then(|(level, pos)| {
        let (top, left) = pos.split_once(',')?;
        Some((level, top.parse().ok()?, left.parse().ok()?))
    });
    match parsed {
        Some((level, top, left)) => SegmentOrigin {
            game,
            level: level.to_string(),
            top,
            left,
        },
        None => SegmentOrigin {
            game,
            level: id.to_string(),
            top: 0,
            left: 0,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub source_game: GameId,
    pub source_id: String,
    pub target: GameId,
    pub filter: FilterKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transferred {
    pub output: FilterOutput,
    pub provenance: Provenance,
}

/// `filter(to_sketch(source))`, with nothing else in between.
pub fn style_transfer(
    source: &TileGrid,
    source_map: &AffordanceMap,
    filter: &dyn Filter,
    seed: u64,
) -> Result<Transferred> {
    let sketch = to_sketch(source, source_map)?;
    check_granularity(filter, &sketch)?;
    let output = filter.apply(&sketch, &mut seeded(seed))?;
    Ok(Transferred {
        output,
        provenance: Provenance {
            source_game: source.game,
            source_id: source.id.clone(),
            target: filter.target(),
            filter: filter.kind(),
            seed,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Levels,
    Segments,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferJob {
    pub source: GameId,
    pub target: GameId,
    pub kind: FilterKind,
    pub selection: Selection,
    pub seed: u64,
}

/// One filter input with its provenance. Whole levels have origin (0, 0)
/// and `windowed == false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchItem {
    pub origin: SegmentOrigin,
    pub windowed: bool,
    pub sketch: Sketch,
}

/// Sketches of the job's source selection, in corpus order.
pub fn job_items(job: &TransferJob, corpus: &Corpus, registry: &Registry) -> Result<Vec<SketchItem>> {
    let map = &registry.profile(job.source).affordances;
    match job.selection {
        Selection::Levels => corpus
            .levels(job.source)
            .into_iter()
            .map(|l| {
                Ok(SketchItem {
                    origin: SegmentOrigin {
                        game: l.game,
                        level: l.id.clone(),
                        top: 0,
                        left: 0,
                    },
                    windowed: false,
                    sketch: to_sketch(l, map)?,
                })
            })
            .collect(),
        Selection::Segments => {
            let segments = corpus.segments(job.source, registry)?;
            let items = map_ordered(&segments, |_, s| {
                to_sketch(&s.grid, map).map(|sketch| SketchItem {
                    origin: s.origin.clone(),
                    windowed: true,
                    sketch,
                })
            });
            items.into_iter().collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub source_game: GameId,
    pub source_id: String,
    pub top: Option<usize>,
    pub left: Option<usize>,
    pub target: GameId,
    pub filter: FilterKind,
    pub seed: u64,
    pub substitutions: usize,
    pub error: Option<String>,
}

impl ManifestEntry {
    /// File name for this item's output level.
    pub fn file_name(&self) -> String {
        match (self.top, self.left) {
            (Some(t), Some(l)) => format!("{}_{t}_{l}.txt", self.source_id),
            _ => format!("{}.txt", self.source_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchOutput {
    /// `None` where the item failed; see the manifest.
    pub outputs: Vec<Option<FilterOutput>>,
    pub manifest: Vec<ManifestEntry>,
}

impl BatchOutput {
    pub fn failures(&self) -> usize {
        self.manifest.iter().filter(|e| e.error.is_some()).count()
    }
}

/// Filters every item; item failures are recorded in the manifest and do
/// not stop the batch.
pub fn batch_transfer(job: &TransferJob, items: &[SketchItem], filter: &dyn Filter) -> Result<BatchOutput> {
    if filter.target() != job.target {
        return Err(Error::GameMismatch {
            expected: job.target,
            found: filter.target(),
        });
    }
    if filter.kind() != job.kind {
        return Err(Error::InvalidParameter(format!(
            "job asks for {} but the filter is {}",
            job.kind,
            filter.kind()
        )));
    }
    let results = filter.apply_batch(items, job.seed);
    let mut outputs = Vec::with_capacity(items.len());
    let mut manifest = Vec::with_capacity(items.len());
    for (i, (item, result)) in items.iter().zip(results).enumerate() {
        let (output, substitutions, error) = match result {
            Ok(out) => {
                let n = out.substitutions.len();
                (Some(out), n, None)
            }
            Err(e) => (None, 0, Some(e.to_string())),
        };
        manifest.push(ManifestEntry {
            index: i,
            source_game: item.origin.game,
            source_id: item.origin.level.clone(),
            top: item.windowed.then_some(item.origin.top),
            left: item.windowed.then_some(item.origin.left),
            target: job.target,
            filter: job.kind,
            seed: item_seed(job.seed, i),
            substitutions,
            error,
        });
        outputs.push(output);
    }
    Ok(BatchOutput { outputs, manifest })
}

pub fn write_manifest<W: Write>(out: W, manifest: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for entry in manifest {
        w.serialize(entry)?;
    }
    w.flush().map_err(|e| Error::io("<manifest>", e))
}

/// Writes each successful output as `<dir>/<file_name>` plus
/// `<dir>/manifest.csv`.
pub fn write_batch(dir: &Path, batch: &BatchOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (entry, output) in batch.manifest.iter().zip(&batch.outputs) {
        if let Some(out) = output {
            let path = dir.join(entry.file_name());
            fs::write(&path, out.grid.to_text()).map_err(|e| Error::io(&path, e))?;
        }
    }
    let path = dir.join("manifest.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_manifest(file, &batch.manifest)
}

/// Share of cells whose affordance in `output` matches `sketch`.
pub fn affordance_agreement(output: &TileGrid, sketch: &Sketch, map: &AffordanceMap) -> Result<f64> {
    let resketched = to_sketch(output, map)?;
    if resketched.cells.dims() != sketch.cells.dims() {
        return Err(Error::DimensionMismatch(format!(
            "output {:?} vs sketch {:?}",
            resketched.cells.dims(),
            sketch.cells.dims()
        )));
    }
    let same = resketched
        .cells
        .cells()
        .iter()
        .zip(sketch.cells.cells())
        .filter(|(a, b)| a == b)
        .count();
    Ok(same as f64 / sketch.cells.cells().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{parse_level, Grid};
    use crate::mrf::train_from_levels;
    use crate::segment::extract_segments;

    fn smb_level() -> TileGrid {
        let r = Registry::default();
        let mut rows = vec!["------------------"; 12];
        rows.push("---?----o----E----");
        rows.push("XXXXXX--XXXXXXXXXX");
        rows.push("XXXXXX--XXXXXXXXXX");
        parse_level(&rows.join("\n"), r.profile(GameId::Smb), "toy").unwrap()
    }

    fn mrf(game: GameId, kind: FilterKind) -> MrfFilter {
        let r = Registry::default();
        let model = train_from_levels(&[smb_level()], r.profile(GameId::Smb), kind.order().unwrap()).unwrap();
        assert_eq!(game, GameId::Smb);
        MrfFilter::new(model, r.profile(game).clone()).unwrap()
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("mrf4".parse::<FilterKind>().unwrap(), FilterKind::Mrf4);
        assert_eq!("MRF-8".parse::<FilterKind>().unwrap(), FilterKind::Mrf8);
        assert_eq!("ae".parse::<FilterKind>().unwrap(), FilterKind::Ae);
        assert!("gan".parse::<FilterKind>().is_err());
    }

    #[test]
    fn self_transfer_keeps_sketch() {
        let r = Registry::default();
        let map = &r.profile(GameId::Smb).affordances;
        let f = mrf(GameId::Smb, FilterKind::Mrf4);
        let t = style_transfer(&smb_level(), map, &f, 3).unwrap();
        assert_eq!(
            to_sketch(&t.output.grid, map).unwrap(),
            to_sketch(&smb_level(), map).unwrap()
        );
        assert_eq!(t.provenance.filter, FilterKind::Mrf4);
        assert_eq!(t.provenance.seed, 3);
        // composition: no hidden step between sketching and filtering
        let direct = f.apply(&to_sketch(&smb_level(), map).unwrap(), &mut seeded(3)).unwrap();
        assert_eq!(direct, t.output);
    }

    struct Echo;

    impl Filter for Echo {
        fn target(&self) -> GameId {
            GameId::Smb
        }
        fn kind(&self) -> FilterKind {
            FilterKind::Ae
        }
        fn granularity(&self) -> Granularity {
            Granularity::Segment
        }
        fn apply(&self, sketch: &Sketch, _rng: &mut FilterRng) -> Result<FilterOutput> {
            if sketch.cells.at(0, 0) == crate::registry::Affordance::Hazard {
                return Err(Error::External("refused".into()));
            }
            let tiles = sketch.cells.map(|a| {
                if a == crate::registry::Affordance::Solid {
                    b'X'
                } else {
                    b'-'
                }
            });
            Ok(FilterOutput {
                grid: TileGrid {
                    game: GameId::Smb,
                    id: sketch.id.clone(),
                    tiles,
                },
                substitutions: Vec::new(),
            })
        }
    }

    #[test]
    fn segment_filters_reject_whole_levels() {
        let r = Registry::default();
        let err = style_transfer(&smb_level(), &r.profile(GameId::Smb).affordances, &Echo, 0).unwrap_err();
        assert!(matches!(err, Error::GranularityMismatch { height: 15, width: 18 }));
    }

    fn items(level: &TileGrid) -> Vec<SketchItem> {
        let r = Registry::default();
        extract_segments(level)
            .unwrap()
            .into_iter()
            .map(|s| SketchItem {
                sketch: to_sketch(&s.grid, &r.profile(s.grid.game).affordances).unwrap(),
                origin: s.origin,
                windowed: true,
            })
            .collect()
    }

    #[test]
    fn batch_records_item_errors() {
        let mut its = items(&smb_level());
        its[1].sketch.cells.set(0, 0, crate::registry::Affordance::Hazard);
        let job = TransferJob {
            source: GameId::Smb,
            target: GameId::Smb,
            kind: FilterKind::Ae,
            selection: Selection::Segments,
            seed: 9,
        };
        let out = batch_transfer(&job, &its, &Echo).unwrap();
        assert_eq!(out.outputs.len(), 3);
        assert!(out.outputs[1].is_none());
        assert_eq!(out.failures(), 1);
        assert_eq!(out.manifest[1].error.as_deref(), Some("external filter: refused"));
        assert_eq!(out.manifest[2].seed, 9 ^ 2);
        assert_eq!(out.manifest[2].left, Some(2));
        assert_eq!(out.manifest[0].file_name(), "toy_0_0.txt");

        let mut csv_out = Vec::new();
        write_manifest(&mut csv_out, &out.manifest).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,source_game,source_id,top,left,target,filter,seed,substitutions,error"
        );
        assert_eq!(lines.next().unwrap(), "0,SMB,toy,0,0,SMB,ae,9,0,");
    }

    #[test]
    fn empty_batch_and_job_mismatch() {
        let job = TransferJob {
            source: GameId::Smb,
            target: GameId::Smb,
            kind: FilterKind::Ae,
            selection: Selection::Segments,
            seed: 0,
        };
        let out = batch_transfer(&job, &[], &Echo).unwrap();
        assert!(out.outputs.is_empty() && out.manifest.is_empty());
        let wrong = TransferJob {
            target: GameId::Ki,
            ..job.clone()
        };
        assert!(matches!(
            batch_transfer(&wrong, &[], &Echo),
            Err(Error::GameMismatch { .. })
        ));
        let wrong_kind = TransferJob {
            kind: FilterKind::Mrf4,
            ..job
        };
        assert!(batch_transfer(&wrong_kind, &[], &Echo).is_err());
    }

    #[test]
    fn mrf_batch_is_seed_deterministic() {
        let its = items(&smb_level());
        let f = mrf(GameId::Smb, FilterKind::Mrf8);
        let job = TransferJob {
            source: GameId::Smb,
            target: GameId::Smb,
            kind: FilterKind::Mrf8,
            selection: Selection::Segments,
            seed: 42,
        };
        let a = batch_transfer(&job, &its, &f).unwrap();
        let b = batch_transfer(&job, &its, &f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.failures(), 0);
    }

    #[test]
    fn pack_filter_serves_by_id() {
        let r = Registry::default();
        let its = items(&smb_level());
        let records: Vec<PackRecord> = its
            .iter()
            .map(|it| {
                let grid = TileGrid {
                    game: GameId::Smb,
                    id: it.sketch.id.clone(),
                    tiles: Grid::filled(15, 16, b'-'),
                };
                PackRecord::from_tiles(&it.origin, &grid)
            })
            .collect();
        let f = PackFilter::from_records(GameId::Smb, &records, &r).unwrap();
        assert_eq!(f.len(), 3);
        let out = f.apply(&its[2].sketch, &mut seeded(0)).unwrap();
        assert_eq!(out.grid.id, "toy@0,2");
        let mut stranger = its[0].sketch.clone();
        stranger.id = "elsewhere@0,0".into();
        assert!(matches!(f.apply(&stranger, &mut seeded(0)), Err(Error::External(_))));
        assert!(PackFilter::from_records(GameId::Ki, &records, &r).is_err());
    }

    #[test]
    fn origin_ids_parse() {
        let o = origin_from_id(GameId::Mm, "megaman_1@3,17");
        assert_eq!((o.level.as_str(), o.top, o.left), ("megaman_1", 3, 17));
        let o = origin_from_id(GameId::Mm, "plain");
        assert_eq!((o.level.as_str(), o.top, o.left), ("plain", 0, 0));
    }

    #[test]
    fn agreement_rate() {
        let r = Registry::default();
        let map = &r.profile(GameId::Smb).affordances;
        let lvl = smb_level();
        let sk = to_sketch(&lvl, map).unwrap();
        assert_eq!(affordance_agreement(&lvl, &sk, map).unwrap(), 1.0);
        let mut other = lvl.clone();
        other.tiles.set(0, 0, b'X');
        let rate = affordance_agreement(&other, &sk, map).unwrap();
        assert!((rate - (1.0 - 1.0 / 270.0)).abs() < 1e-12);
    }
}
