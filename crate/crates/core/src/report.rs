//! CSV report writers and the published reference tables.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::evaluation::{ApkldivReport, TileHistogram};
use crate::playability::PlayabilityBatch;
use crate::registry::{GameId, GameProfile};
use crate::transfer::FilterKind;

use GameId::{Ki, Met, Mm, Smb};

/// Published playable-segment percentages per (source, target):
/// MRF-4, MRF-8, AE-128, AE-256.
pub const PUBLISHED_PLAYABILITY: [(GameId, GameId, [f64; 4]); 12] = [
    (Ki, Smb, [75.0, 67.5, 81.25, 75.0]),
    (Mm, Smb, [39.86, 43.36, 80.42, 77.62]),
    (Met, Smb, [33.07, 31.65, 72.87, 79.54]),
    (Smb, Ki, [75.57, 71.59, 62.5, 60.8]),
    (Mm, Ki, [44.76, 46.85, 49.65, 48.25]),
    (Met, Ki, [48.79, 46.37, 32.87, 39.31]),
    (Smb, Mm, [71.34, 68.18, 59.09, 64.21]),
    (Ki, Mm, [69.23, 63.75, 60.0, 67.5]),
    (Met, Mm, [32.63, 33.47, 38.39, 48.28]),
    (Smb, Met, [85.8, 81.25, 60.23, 63.07]),
    (Ki, Met, [72.15, 73.75, 61.25, 65.0]),
    (Mm, Met, [46.77, 52.45, 61.54, 60.14]),
];

/// (source, target, (mean, std) transferred vs source, (mean, std)
/// transferred vs original target).
pub type PublishedApkldiv = (GameId, GameId, (f64, f64), (f64, f64));

/// Published AE-256 APKLDiv.
pub const PUBLISHED_APKLDIV_AE256: [PublishedApkldiv; 12] = [
    (Ki, Smb, (0.71, 0.61), (1.52, 1.36)),
    (Mm, Smb, (1.39, 1.15), (2.13, 1.70)),
    (Met, Smb, (1.32, 1.19), (2.05, 1.63)),
    (Smb, Ki, (0.27, 0.22), (0.87, 0.58)),
    (Mm, Ki, (1.34, 1.11), (1.99, 1.6)),
    (Met, Ki, (1.17, 1.02), (1.72, 1.38)),
    (Smb, Mm, (0.45, 0.32), (1.08, 0.62)),
    (Ki, Mm, (0.38, 0.36), (1.8, 0.56)),
    (Met, Mm, (0.82, 0.61), (1.23, 0.98)),
    (Smb, Met, (0.19, 0.16), (1.22, 0.74)),
    (Ki, Met, (0.38, 0.38), (2.31, 2.14)),
    (Mm, Met, (0.97, 0.74), (1.67, 1.45)),
];

pub fn published_playability(source: GameId, target: GameId) -> [f64; 4] {
    PUBLISHED_PLAYABILITY
        .iter()
        .find(|(s, t, _)| *s == source && *t == target)
        .map(|r| r.2)
        .expect("every ordered pair of distinct games is listed")
}

pub fn pair_label(source: GameId, target: GameId) -> String {
    format!("{source}-{target}")
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| csv::Error::from(e).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    TfVsSource,
    TfVsTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApkldivEntry {
    pub source: GameId,
    pub target: GameId,
    pub filter: FilterKind,
    pub comparison: Comparison,
    /// Segment id for each paired value.
    pub segments: Vec<String>,
    pub report: ApkldivReport,
}

#[derive(Serialize)]
struct ApkldivRow<'a> {
    source: GameId,
    target: GameId,
    filter: FilterKind,
    comparison: Comparison,
    segment: &'a str,
    k2: f64,
    k3: f64,
    k4: f64,
    apkldiv: f64,
    std: Option<f64>,
    epsilon: f64,
    log_base: &'static str,
}

/// One row per segment pair, then a `summary` row holding per-k means,
/// the overall mean and the population std.
pub fn write_apkldiv_csv<W: Write>(out: W, entries: &[ApkldivEntry]) -> Result<()> {
    let mut rows = Vec::new();
    for e in entries {
        let r = &e.report;
        let per_k = |j: usize| &r.per_k[j].1;
        for (i, seg) in e.segments.iter().enumerate() {
            rows.push(ApkldivRow {
                source: e.source,
                target: e.target,
                filter: e.filter,
                comparison: e.comparison,
                segment: seg,
                k2: per_k(0)[i],
                k3: per_k(1)[i],
                k4: per_k(2)[i],
                apkldiv: r.values[i],
                std: None,
                epsilon: r.epsilon,
                log_base: r.log_base,
            });
        }
        let mean_k = |j: usize| crate::evaluation::mean_std(per_k(j)).0;
        rows.push(ApkldivRow {
            source: e.source,
            target: e.target,
            filter: e.filter,
            comparison: e.comparison,
            segment: "summary",
            k2: mean_k(0),
            k3: mean_k(1),
            k4: mean_k(2),
            apkldiv: r.mean,
            std: Some(r.std),
            epsilon: r.epsilon,
            log_base: r.log_base,
        });
    }
    write_csv(out, rows)
}

#[derive(Serialize)]
struct ApkldivSummaryRow {
    pair: String,
    filter: FilterKind,
    tf_vs_source_mean: f64,
    tf_vs_source_std: f64,
    tf_vs_target_mean: f64,
    tf_vs_target_std: f64,
    published_ae256_tf_vs_source: String,
    published_ae256_tf_vs_target: String,
}

/// Pairs each `TfVsSource` entry with the `TfVsTarget` entry of the same
/// pair and filter.
pub fn write_apkldiv_summary<W: Write>(out: W, entries: &[ApkldivEntry]) -> Result<()> {
    let rows = entries
        .iter()
        .filter(|e| e.comparison == Comparison::TfVsSource)
        .filter_map(|src| {
            let tgt = entries.iter().find(|e| {
                e.comparison == Comparison::TfVsTarget
                    && (e.source, e.target, e.filter) == (src.source, src.target, src.filter)
            })?;
            let published = PUBLISHED_APKLDIV_AE256
                .iter()
                .find(|p| (p.0, p.1) == (src.source, src.target))?;
            Some(ApkldivSummaryRow {
                pair: pair_label(src.source, src.target),
                filter: src.filter,
                tf_vs_source_mean: src.report.mean,
                tf_vs_source_std: src.report.std,
                tf_vs_target_mean: tgt.report.mean,
                tf_vs_target_std: tgt.report.std,
                published_ae256_tf_vs_source: format!("{}±{}", published.2 .0, published.2 .1),
                published_ae256_tf_vs_target: format!("{}±{}", published.3 .0, published.3 .1),
            })
        });
    write_csv(out, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayabilityEntry {
    pub source: GameId,
    pub target: GameId,
    pub filter: FilterKind,
    pub segments: Vec<String>,
    pub batch: PlayabilityBatch,
}

#[derive(Serialize)]
struct PlayabilityRow<'a> {
    source: GameId,
    target: GameId,
    filter: FilterKind,
    segment: &'a str,
    horizontal: bool,
    vertical: bool,
    playable: bool,
}

pub fn write_playability_csv<W: Write>(out: W, entries: &[PlayabilityEntry]) -> Result<()> {
    let rows = entries.iter().flat_map(|e| {
        e.segments
            .iter()
            .zip(&e.batch.results)
            .map(move |(seg, p)| PlayabilityRow {
                source: e.source,
                target: e.target,
                filter: e.filter,
                segment: seg,
                horizontal: p.horizontal,
                vertical: p.vertical,
                playable: p.playable(),
            })
    });
    write_csv(out, rows)
}

#[derive(Serialize)]
struct PlayabilitySummaryRow {
    pair: String,
    mrf4: String,
    mrf4_published: f64,
    mrf8: String,
    mrf8_published: f64,
    ae: String,
    ae128_published: f64,
    ae256_published: f64,
}

/// Table layout: one row per pair, measured percentage next to the
/// published one for every filter. Filters with no entry read `absent`.
pub fn write_playability_summary<W: Write>(out: W, entries: &[PlayabilityEntry]) -> Result<()> {
    let measured = |s: GameId, t: GameId, f: FilterKind| {
        entries
            .iter()
            .find(|e| (e.source, e.target, e.filter) == (s, t, f))
            .map_or_else(|| "absent".to_string(), |e| format!("{:.2}", e.batch.percentage))
    };
    let rows = PUBLISHED_PLAYABILITY.iter().map(|&(s, t, p)| PlayabilitySummaryRow {
        pair: pair_label(s, t),
        mrf4: measured(s, t, FilterKind::Mrf4),
        mrf4_published: p[0],
        mrf8: measured(s, t, FilterKind::Mrf8),
        mrf8_published: p[1],
        ae: measured(s, t, FilterKind::Ae),
        ae128_published: p[2],
        ae256_published: p[3],
    });
    write_csv(out, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub label: String,
    pub game: GameId,
    pub symbol: char,
    pub name: String,
    pub frequency: f64,
}

/// Every tileset symbol in registry order, zero frequencies included.
pub fn histogram_rows(label: &str, hist: &TileHistogram, profile: &GameProfile) -> Vec<HistogramRow> {
    profile
        .tileset
        .symbols()
        .iter()
        .map(|&s| HistogramRow {
            label: label.to_string(),
            game: hist.game,
            symbol: s as char,
            name: profile.tileset.name(s).unwrap_or_default().to_string(),
            frequency: hist.frequency(s),
        })
        .collect()
}
