//! The full evaluation run: every ordered game pair through every
//! requested filter, with levels, models and the three report families
//! written under one output directory.
//!
//! Layout:
//!
//! ```text
//! models/<target>-<filter>.txt
//! levels/<filter>/<source>-to-<target>/<level>.txt
//! segments/<filter>/<source>-to-<target>.jsonl      (+ .manifest.csv)
//! reports/segment_counts.txt
//! reports/transfer_summary.csv
//! reports/apkldiv_segments.csv, reports/apkldiv_summary.csv
//! reports/playability_segments.csv, reports/playability_summary.csv
//! reports/histograms.csv, reports/histogram_distances.csv
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{Corpus, SegmentCountReport};
use crate::error::{Error, Result};
use crate::evaluation::{apkldiv_paired, histogram_distance, round_robin, tile_histogram, ApkldivReport};
use crate::level::{to_sketch, Sketch, TileGrid};
use crate::mrf::{train_from_levels, MrfModel, NeighborhoodOrder};
use crate::playability::playable_percentage;
use crate::registry::{GameId, Registry};
use crate::report::{
    histogram_rows, pair_label, write_apkldiv_csv, write_apkldiv_summary, write_csv, write_playability_csv,
    write_playability_summary, ApkldivEntry, Comparison, HistogramRow, PlayabilityEntry,
};
use crate::rng::item_seed;
use crate::segment::{write_pack, PackRecord};
use crate::transfer::{
    batch_transfer, job_items, style_transfer, write_manifest, Filter, FilterKind, MrfFilter, PackFilter, Selection,
    SketchItem, TransferJob,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ReproConfig {
    pub seed: u64,
    pub epsilon: f64,
    pub filters: Vec<FilterKind>,
    /// Directory of AE tile packs named `<source>-to-<target>.jsonl`.
    pub ae_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

/// Outcome of one (source, target, filter) run over the source segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub source: GameId,
    pub target: GameId,
    pub filter: FilterKind,
    pub segments: usize,
    pub failed: usize,
    pub substitutions: usize,
    /// Affordances of substituted cells in the source sketch, as symbols.
    pub substituted_affordances: String,
    /// Unflagged cells whose re-sketched affordance differs from the source.
    pub affordance_mismatches: usize,
    pub playable_percent: f64,
    pub apkldiv_tf_vs_source: f64,
    pub apkldiv_tf_vs_source_std: f64,
    pub apkldiv_tf_vs_target: f64,
    pub apkldiv_tf_vs_target_std: f64,
    pub histogram_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproSummary {
    pub pairs: Vec<PairResult>,
    /// Requested (source, target, filter) runs with no filter available.
    pub absent: Vec<(GameId, GameId, FilterKind)>,
    pub segment_counts: Vec<SegmentCountReport>,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn pair_dir(source: GameId, target: GameId) -> String {
    format!("{}-to-{}", source.slug(), target.slug())
}

pub fn run(corpus: &Corpus, registry: &Registry, cfg: &ReproConfig) -> Result<ReproSummary> {
    let out = &cfg.out_dir;
    let reports = out.join("reports");
    create_dir(&reports)?;

    let segment_counts: Vec<SegmentCountReport> = GameId::ALL
        .iter()
        .map(|&g| corpus.segment_report(g, registry))
        .collect();
    let text: String = segment_counts.iter().map(|r| r.to_string()).collect();
    let path = reports.join("segment_counts.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

    let mut items: BTreeMap<GameId, Vec<SketchItem>> = BTreeMap::new();
    for game in GameId::ALL {
        let job = TransferJob {
            source: game,
            target: game,
            kind: FilterKind::Mrf4,
            selection: Selection::Segments,
            seed: cfg.seed,
        };
        items.insert(game, job_items(&job, corpus, registry)?);
    }

    let mut histograms: Vec<HistogramRow> = Vec::new();
    let mut originals = BTreeMap::new();
    for game in GameId::ALL {
        let levels = corpus.levels(game);
        if levels.is_empty() {
            continue;
        }
        let h = tile_histogram(levels)?;
        histograms.extend(histogram_rows(&format!("Original {game}"), &h, registry.profile(game)));
        originals.insert(game, h);
    }

    let mut models: BTreeMap<(GameId, FilterKind), MrfModel> = BTreeMap::new();
    let mut pairs = Vec::new();
    let mut absent = Vec::new();
    let mut apk_entries = Vec::new();
    let mut play_entries = Vec::new();

    let kinds: Vec<FilterKind> = FilterKind::ALL
        .into_iter()
        .filter(|k| cfg.filters.contains(k))
        .collect();
    for &kind in &kinds {
        for (source, target) in GameId::transfer_pairs() {
            let filter: Box<dyn Filter> = match kind.order() {
                Some(order) => {
                    let model = match models.get(&(target, kind)) {
                        Some(m) => m.clone(),
                        None => {
                            let m = train_target(corpus, registry, target, order)?;
                            let dir = out.join("models");
                            create_dir(&dir)?;
                            let path = dir.join(format!("{}-{kind}.txt", target.slug()));
                            fs::write(&path, m.save()).map_err(|e| Error::io(&path, e))?;
                            models.insert((target, kind), m.clone());
                            m
                        }
                    };
                    Box::new(MrfFilter::new(model, registry.profile(target).clone())?)
                }
                None => match &cfg.ae_dir {
                    Some(dir) if dir.join(format!("{}.jsonl", pair_dir(source, target))).is_file() => {
                        let path = dir.join(format!("{}.jsonl", pair_dir(source, target)));
                        Box::new(PackFilter::load(&path, target, registry)?)
                    }
                    _ => {
                        absent.push((source, target, kind));
                        continue;
                    }
                },
            };
            let source_items = &items[&source];
            if source_items.is_empty() {
                absent.push((source, target, kind));
                continue;
            }
            let mut result = run_pair(
                registry,
                cfg,
                filter.as_ref(),
                source_items,
                &items[&target],
                source,
                &mut apk_entries,
                &mut play_entries,
            )?;
            if kind != FilterKind::Ae {
                let (rows, hist) = whole_levels(corpus, registry, cfg, filter.as_ref(), source, target)?;
                if let (Some(h), Some(orig)) = (&hist, originals.get(&target)) {
                    result.histogram_distance = Some(histogram_distance(h, orig)?);
                }
                histograms.extend(rows);
            }
            pairs.push(result);
        }
    }

    write_csv(create_file(&reports.join("transfer_summary.csv"))?, &pairs)?;
    write_apkldiv_csv(create_file(&reports.join("apkldiv_segments.csv"))?, &apk_entries)?;
    write_apkldiv_summary(create_file(&reports.join("apkldiv_summary.csv"))?, &apk_entries)?;
    write_playability_csv(create_file(&reports.join("playability_segments.csv"))?, &play_entries)?;
    write_playability_summary(create_file(&reports.join("playability_summary.csv"))?, &play_entries)?;
    write_csv(create_file(&reports.join("histograms.csv"))?, &histograms)?;
    #[derive(Serialize)]
    struct DistanceRow {
        pair: String,
        filter: FilterKind,
        total_variation: Option<f64>,
    }
    write_csv(
        create_file(&reports.join("histogram_distances.csv"))?,
        pairs
            .iter()
            .filter(|p| p.filter != FilterKind::Ae)
            .map(|p| DistanceRow {
                pair: pair_label(p.source, p.target),
                filter: p.filter,
                total_variation: p.histogram_distance,
            }),
    )?;

    Ok(ReproSummary {
        pairs,
        absent,
        segment_counts,
    })
}

/// MRF trained on every whole level of `target`.
pub fn train_target(
    corpus: &Corpus,
    registry: &Registry,
    target: GameId,
    order: NeighborhoodOrder,
) -> Result<MrfModel> {
    let levels: Vec<TileGrid> = corpus.levels(target).into_iter().cloned().collect();
    train_from_levels(&levels, registry.profile(target), order)
}

#[allow(clippy::too_many_arguments)]
fn run_pair(
    registry: &Registry,
    cfg: &ReproConfig,
    filter: &dyn Filter,
    source_items: &[SketchItem],
    target_items: &[SketchItem],
    source: GameId,
    apk_entries: &mut Vec<ApkldivEntry>,
    play_entries: &mut Vec<PlayabilityEntry>,
) -> Result<PairResult> {
    let target = filter.target();
    let kind = filter.kind();
    let job = TransferJob {
        source,
        target,
        kind,
        selection: Selection::Segments,
        seed: cfg.seed,
    };
    let batch = batch_transfer(&job, source_items, filter)?;

    let dir = cfg.out_dir.join("segments").join(kind.as_str());
    create_dir(&dir)?;
    let stem = pair_dir(source, target);
    let records: Vec<PackRecord> = source_items
        .iter()
        .zip(&batch.outputs)
        .filter_map(|(item, out)| out.as_ref().map(|o| PackRecord::from_tiles(&item.origin, &o.grid)))
        .collect();
    write_pack(create_file(&dir.join(format!("{stem}.jsonl")))?, &records)?;
    write_manifest(create_file(&dir.join(format!("{stem}.manifest.csv")))?, &batch.manifest)?;

    let target_map = &registry.profile(target).affordances;
    let mut ids = Vec::new();
    let mut sources: Vec<&Sketch> = Vec::new();
    let mut transferred: Vec<Sketch> = Vec::new();
    let mut substitutions = 0;
    let mut substituted = std::collections::BTreeSet::new();
    let mut mismatches = 0;
    for (item, out) in source_items.iter().zip(&batch.outputs) {
        let Some(out) = out else { continue };
        let tf = to_sketch(&out.grid, target_map)?;
        for &(r, c) in &out.substitutions {
            substituted.insert(item.sketch.cells.at(r, c).symbol());
        }
        substitutions += out.substitutions.len();
        let (h, w) = tf.cells.dims();
        for r in 0..h {
            for c in 0..w {
                if tf.cells.at(r, c) != item.sketch.cells.at(r, c) && !out.substitutions.contains(&(r, c)) {
                    mismatches += 1;
                }
            }
        }
        ids.push(item.sketch.id.clone());
        sources.push(&item.sketch);
        transferred.push(tf);
    }
    if transferred.is_empty() {
        return Err(Error::External(format!(
            "{} {kind}: every segment failed",
            pair_label(source, target)
        )));
    }

    let play = playable_percentage(&transferred, &registry.profile(target).movement)?;
    let vs_source = apkldiv_paired(&transferred, &sources, cfg.epsilon)?.with_games(source, target);
    let target_pool: Vec<&Sketch> = target_items.iter().map(|i| &i.sketch).collect();
    let vs_target: Option<ApkldivReport> = if target_pool.is_empty() {
        None
    } else {
        let partners: Vec<&Sketch> = round_robin(&target_pool, transferred.len())
            .into_iter()
            .copied()
            .collect();
        Some(apkldiv_paired(&transferred, &partners, cfg.epsilon)?.with_games(source, target))
    };

    let result = PairResult {
        source,
        target,
        filter: kind,
        segments: source_items.len(),
        failed: batch.failures(),
        substitutions,
        substituted_affordances: substituted.into_iter().collect(),
        affordance_mismatches: mismatches,
        playable_percent: play.percentage,
        apkldiv_tf_vs_source: vs_source.mean,
        apkldiv_tf_vs_source_std: vs_source.std,
        apkldiv_tf_vs_target: vs_target.as_ref().map_or(f64::NAN, |r| r.mean),
        apkldiv_tf_vs_target_std: vs_target.as_ref().map_or(f64::NAN, |r| r.std),
        histogram_distance: None,
    };
    apk_entries.push(ApkldivEntry {
        source,
        target,
        filter: kind,
        comparison: Comparison::TfVsSource,
        segments: ids.clone(),
        report: vs_source,
    });
    if let Some(report) = vs_target {
        apk_entries.push(ApkldivEntry {
            source,
            target,
            filter: kind,
            comparison: Comparison::TfVsTarget,
            segments: ids.clone(),
            report,
        });
    }
    play_entries.push(PlayabilityEntry {
        source,
        target,
        filter: kind,
        segments: ids,
        batch: play,
    });
    Ok(result)
}

/// Transfers every whole source level, writes the outputs and returns
/// their histogram rows.
fn whole_levels(
    corpus: &Corpus,
    registry: &Registry,
    cfg: &ReproConfig,
    filter: &dyn Filter,
    source: GameId,
    target: GameId,
) -> Result<(Vec<HistogramRow>, Option<crate::evaluation::TileHistogram>)> {
    let kind = filter.kind();
    let dir = cfg
        .out_dir
        .join("levels")
        .join(kind.as_str())
        .join(pair_dir(source, target));
    create_dir(&dir)?;
    let map = &registry.profile(source).affordances;
    let levels = corpus.levels(source);
    let outputs = crate::exec::map_ordered(&levels, |i, level| {
        style_transfer(level, map, filter, item_seed(cfg.seed, i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for t in &outputs {
        let path = dir.join(format!("{}.txt", t.provenance.source_id));
        fs::write(&path, t.output.grid.to_text()).map_err(|e| Error::io(&path, e))?;
    }
    if outputs.is_empty() {
        return Ok((Vec::new(), None));
    }
    let hist = tile_histogram(outputs.iter().map(|t| &t.output.grid))?;
    let label = format!("{} {}", pair_label(source, target), kind.label());
    Ok((histogram_rows(&label, &hist, registry.profile(target)), Some(hist)))
}
