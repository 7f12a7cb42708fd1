//! Content, style and aggregate metrics: affordance-pattern KL divergence
//! and tile histograms.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::map_ordered;
use crate::level::{Sketch, TileGrid};
use crate::registry::GameId;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const PATTERN_SIZES: [usize; 3] = [2, 3, 4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternDistribution {
    k: usize,
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl PatternDistribution {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Pattern text is the k x k window read row-major.
    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn probability(&self, pattern: &str) -> f64 {
        match self.counts.get(pattern) {
            Some(&n) => n as f64 / self.total as f64,
            None => 0.0,
        }
    }
}

pub fn pattern_distribution<'a>(
    sketches: impl IntoIterator<Item = &'a Sketch>,
    k: usize,
) -> Result<PatternDistribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("pattern size must be at least 1".into()));
    }
    let mut counts = BTreeMap::new();
    let mut total = 0;
    let mut any = false;
    for s in sketches {
        any = true;
        let (h, w) = s.cells.dims();
        if h < k || w < k {
            return Err(Error::SketchTooSmall { height: h, width: w, k });
        }
        let mut key = String::with_capacity(k * k);
        for top in 0..=h - k {
            for left in 0..=w - k {
                key.clear();
                for r in top..top + k {
                    for c in left..left + k {
                        key.push(s.cells.at(r, c).symbol());
                    }
                }
                *counts.entry(key.clone()).or_insert(0) += 1;
                total += 1;
            }
        }
    }
    if !any {
        return Err(Error::EmptySet);
    }
    Ok(PatternDistribution { k, counts, total })
}

/// Smoothed D(P || Q) in nats over the joint support of P and Q.
pub fn kl_divergence(p: &PatternDistribution, q: &PatternDistribution, epsilon: f64) -> Result<f64> {
    if p.k != q.k {
        return Err(Error::MismatchedPatternSize(p.k, q.k));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let support: Vec<&String> = {
        let mut keys: Vec<&String> = p.counts.keys().chain(q.counts.keys()).collect();
        keys.sort_unstable();
        keys.dedup();
        keys
    };
    let n = support.len() as f64;
    let p_norm = p.total as f64 + epsilon * n;
    let q_norm = q.total as f64 + epsilon * n;
    let mut d = 0.0;
    for x in support {
        let pc = p.counts.get(x).copied().unwrap_or(0) as f64;
        let qc = q.counts.get(x).copied().unwrap_or(0) as f64;
        let px = (pc + epsilon) / p_norm;
        let qx = (qc + epsilon) / q_norm;
        d += px * (px / qx).ln();
    }
    // rounding can leave a sum a few ulps below zero
    Ok(d.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ApkldivMode {
    Paired,
    Unpaired,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApkldivReport {
    pub source: Option<GameId>,
    pub target: Option<GameId>,
    pub mode: ApkldivMode,
    pub epsilon: f64,
    pub log_base: &'static str,
    /// Paired: one value per segment pair. Unpaired: one value per k.
    pub values: Vec<f64>,
    /// `(k, values)`; paired mode keeps one value per pair for each k.
    pub per_k: Vec<(usize, Vec<f64>)>,
    pub mean: f64,
    pub std: f64,
}

impl ApkldivReport {
    pub fn with_games(mut self, source: GameId, target: GameId) -> Self {
        self.source = Some(source);
        self.target = Some(target);
        self
    }
}

/// Population mean and standard deviation, accumulated in input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-k divergences of one sketch against another.
pub fn segment_apkldiv(a: &Sketch, b: &Sketch, epsilon: f64) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, &k) in out.iter_mut().zip(&PATTERN_SIZES) {
        let p = pattern_distribution([a], k)?;
        let q = pattern_distribution([b], k)?;
        *slot = kl_divergence(&p, &q, epsilon)?;
    }
    Ok(out)
}

/// Pairs `a[i]` with `b[i]`; each pair scores the mean over k of
/// D(a_i || b_i).
pub fn apkldiv_paired(a: &[Sketch], b: &[&Sketch], epsilon: f64) -> Result<ApkldivReport> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sketches paired with {}",
            a.len(),
            b.len()
        )));
    }
    let per_pair = map_ordered(a, |i, s| segment_apkldiv(s, b[i], epsilon))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_pair.iter().map(|v| v.iter().sum::<f64>() / 3.0).collect();
    let per_k = PATTERN_SIZES
        .iter()
        .enumerate()
        .map(|(j, &k)| (k, per_pair.iter().map(|v| v[j]).collect()))
        .collect();
    let (mean, std) = mean_std(&values);
    Ok(ApkldivReport {
        source: None,
        target: None,
        mode: ApkldivMode::Paired,
        epsilon,
        log_base: "e",
        values,
        per_k,
        mean,
        std,
    })
}

/// Pools each set into one distribution per k.
pub fn apkldiv_unpaired(a: &[Sketch], b: &[Sketch], epsilon: f64) -> Result<ApkldivReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut values = Vec::with_capacity(3);
    for k in PATTERN_SIZES {
        let p = pattern_distribution(a, k)?;
        let q = pattern_distribution(b, k)?;
        values.push(kl_divergence(&p, &q, epsilon)?);
    }
    let per_k = PATTERN_SIZES.iter().zip(&values).map(|(&k, &v)| (k, vec![v])).collect();
    let (mean, std) = mean_std(&values);
    Ok(ApkldivReport {
        source: None,
        target: None,
        mode: ApkldivMode::Unpaired,
        epsilon,
        log_base: "e",
        values,
        per_k,
        mean,
        std,
    })
}

/// Partner for each of `n` items, cycling through `pool`.
pub fn round_robin<T>(pool: &[T], n: usize) -> Vec<&T> {
    if pool.is_empty() {
        return Vec::new();
    }
    (0..n).map(|i| &pool[i % pool.len()]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileHistogram {
    pub game: GameId,
    counts: BTreeMap<u8, u64>,
    total: u64,
}

impl TileHistogram {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequency(&self, symbol: u8) -> f64 {
        self.counts.get(&symbol).map_or(0.0, |&n| n as f64 / self.total as f64)
    }

    /// Observed symbols in byte order.
    pub fn frequencies(&self) -> Vec<(u8, f64)> {
        self.counts.keys().map(|&s| (s, self.frequency(s))).collect()
    }
}

pub fn tile_histogram<'a>(levels: impl IntoIterator<Item = &'a TileGrid>) -> Result<TileHistogram> {
    let mut game = None;
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for level in levels {
        match game {
            None => game = Some(level.game),
            Some(g) if g != level.game => return Err(Error::MixedGames),
            _ => {}
        }
        for &t in level.tiles.cells() {
            *counts.entry(t).or_insert(0) += 1;
            total += 1;
        }
    }
    let game = game.ok_or(Error::EmptySet)?;
    if total == 0 {
        return Err(Error::EmptySet);
    }
    Ok(TileHistogram { game, counts, total })
}

/// Total-variation distance, in [0, 1].
pub fn histogram_distance(a: &TileHistogram, b: &TileHistogram) -> Result<f64> {
    if a.game != b.game {
        return Err(Error::GameMismatch {
            expected: a.game,
            found: b.game,
        });
    }
    let mut symbols: Vec<u8> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    symbols.sort_unstable();
    symbols.dedup();
    let sum: f64 = symbols.iter().map(|&s| (a.frequency(s) - b.frequency(s)).abs()).sum();
    Ok(0.5 * sum)
}
