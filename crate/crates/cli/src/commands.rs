use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::Serialize;
use sketchfilter::corpus::Corpus;
use sketchfilter::evaluation::{apkldiv_paired, apkldiv_unpaired, round_robin, tile_histogram, ApkldivMode};
use sketchfilter::level::to_sketch;
use sketchfilter::playability::playable_percentage;
use sketchfilter::registry::validate_registry;
use sketchfilter::report::{histogram_rows, write_csv, HistogramRow};
use sketchfilter::repro::{self, train_target, ReproConfig};
use sketchfilter::segment::{read_pack, sketch_records, tile_records, write_pack, ChannelOrder, Layer, PackRecord};
use sketchfilter::transfer::{
    batch_transfer, job_items, write_batch, CommandFilter, Filter, FilterKind, MrfFilter, PackFilter, Selection,
    TransferJob,
};
use sketchfilter::{GameId, Registry, Sketch, TileGrid};

use crate::{Cli, CliError, Command, EvalCommand, Global, TransferArgs};

pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if !(g.epsilon > 0.0 && g.epsilon.is_finite()) {
        return Err(CliError::Usage(format!("--epsilon must be positive, got {}", g.epsilon)).into());
    }
    let registry = load_registry(g)?;
    match cli.command {
        Command::Validate => validate(g, &registry),
        Command::Sketch { game, level, output } => {
            let corpus = load_corpus(g, &registry)?;
            let grid = find_level(&corpus, game, &level)?;
            let sketch = to_sketch(grid, &registry.profile(game).affordances)?;
            emit(output.as_deref(), sketch.to_text().as_bytes())
        }
        Command::TrainMrf { game, order, output } => {
            let kind: FilterKind = format!("mrf{order}").parse()?;
            let corpus = load_corpus(g, &registry)?;
            let model = train_target(&corpus, &registry, game, kind.order().expect("mrf kinds have an order"))?;
            let path = output.unwrap_or_else(|| g.out.join("models").join(format!("{}-{kind}.txt", game.slug())));
            write_file(&path, model.save().as_bytes())?;
            println!("{}: {} contexts -> {}", game, model.context_count(), path.display());
            Ok(())
        }
        Command::Transfer(args) => transfer(g, &registry, args),
        Command::ExportSegments { game } => export_segments(g, &registry, game),
        Command::Eval(cmd) => eval(g, &registry, cmd),
        Command::Repro { filters, ae_dir } => {
            if let Some(dir) = &ae_dir {
                require_dir(dir)?;
            }
            let corpus = load_corpus(g, &registry)?;
            let cfg = ReproConfig {
                seed: g.seed,
                epsilon: g.epsilon,
                filters,
                ae_dir,
                out_dir: g.out.clone(),
            };
            let summary = repro::run(&corpus, &registry, &cfg)?;
            for p in &summary.pairs {
                println!(
                    "{}-{} {:<4} segments {:>5}  playable {:>6.2}%  apkldiv tf/source {:.4}  tf/target {:.4}",
                    p.source,
                    p.target,
                    p.filter,
                    p.segments,
                    p.playable_percent,
                    p.apkldiv_tf_vs_source,
                    p.apkldiv_tf_vs_target
                );
            }
            for (s, t, k) in &summary.absent {
                println!("{s}-{t} {k:<4} absent");
            }
            println!("reports in {}", g.out.join("reports").display());
            Ok(())
        }
    }
}

fn load_registry(g: &Global) -> Result<Registry> {
    match &g.registry {
        Some(dir) => {
            require_dir(dir)?;
            Ok(Registry::from_dir(dir)?)
        }
        None => Ok(Registry::default()),
    }
}

fn require_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::MissingPath(dir.to_path_buf()).into())
    }
}

fn load_corpus(g: &Global, registry: &Registry) -> Result<Corpus> {
    require_dir(&g.corpus)?;
    Ok(Corpus::load(&g.corpus, registry)?)
}

fn find_level<'a>(corpus: &'a Corpus, game: GameId, level: &str) -> Result<&'a TileGrid> {
    corpus.level(game, level).ok_or_else(|| {
        CliError::UnknownLevel {
            game,
            level: level.to_string(),
        }
        .into()
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(buf)
}

fn validate(g: &Global, registry: &Registry) -> Result<()> {
    let report = validate_registry(registry);
    for (game, n) in &report.sizes {
        println!("{game}: {n} tiles");
    }
    for v in &report.violations {
        println!("violation: {v}");
    }
    if !report.is_ok() {
        return Err(CliError::Validation(format!("{} registry violation(s)", report.violations.len())).into());
    }
    let corpus = load_corpus(g, registry)?;
    for game in GameId::ALL {
        let levels = corpus.levels(game);
        let segments = corpus.segment_report(game, registry).total;
        println!("{game}: {} levels, {segments} segments", levels.len());
    }
    if corpus.is_empty() {
        return Err(CliError::Validation(format!("no levels under {}", g.corpus.display())).into());
    }
    println!("ok");
    Ok(())
}

fn transfer(g: &Global, registry: &Registry, args: TransferArgs) -> Result<()> {
    let is_ae = args.filter == FilterKind::Ae;
    if !is_ae && (args.ae_pack.is_some() || !args.ae_command.is_empty()) {
        return Err(CliError::Usage("--ae-pack and an AE command only apply to --filter ae".into()).into());
    }
    if is_ae && args.ae_pack.is_none() && args.ae_command.is_empty() {
        return Err(CliError::Usage("--filter ae needs --ae-pack PATH or an AE command after `--`".into()).into());
    }
    if let Some(pack) = &args.ae_pack {
        if !pack.is_file() {
            return Err(CliError::MissingPath(pack.clone()).into());
        }
    }
    let corpus = load_corpus(g, registry)?;
    if let Some(level) = &args.level {
        find_level(&corpus, args.source, level)?;
    }

    let selection = if is_ae || args.segments {
        Selection::Segments
    } else {
        Selection::Levels
    };
    let job = TransferJob {
        source: args.source,
        target: args.target,
        kind: args.filter,
        selection,
        seed: g.seed,
    };
    let mut items = job_items(&job, &corpus, registry)?;
    if let Some(level) = &args.level {
        items.retain(|it| &it.origin.level == level);
    }
    let dir = g.out.join("transfer").join(args.filter.as_str()).join(format!(
        "{}-to-{}",
        args.source.slug(),
        args.target.slug()
    ));

    let filter: Box<dyn Filter> = match args.filter.order() {
        Some(order) => Box::new(MrfFilter::new(
            train_target(&corpus, registry, args.target, order)?,
            registry.profile(args.target).clone(),
        )?),
        None => match args.ae_pack {
            Some(pack) => Box::new(PackFilter::load(&pack, args.target, registry)?),
            None => Box::new(CommandFilter::new(
                args.target,
                args.ae_command,
                dir.join("exchange"),
                registry.clone(),
            )?),
        },
    };
    let batch = batch_transfer(&job, &items, filter.as_ref())?;
    write_batch(&dir, &batch)?;
    if selection == Selection::Segments {
        let records: Vec<PackRecord> = items
            .iter()
            .zip(&batch.outputs)
            .filter_map(|(it, out)| out.as_ref().map(|o| PackRecord::from_tiles(&it.origin, &o.grid)))
            .collect();
        let path = dir.join("segments.jsonl");
        let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        write_pack(BufWriter::new(file), &records)?;
    }
    println!(
        "{} {} -> {}: {} outputs, {} failed, in {}",
        args.filter.label(),
        args.source,
        args.target,
        batch.outputs.len() - batch.failures(),
        batch.failures(),
        dir.display()
    );
    Ok(())
}

fn export_segments(g: &Global, registry: &Registry, game: GameId) -> Result<()> {
    let corpus = load_corpus(g, registry)?;
    let segments = corpus.segments(game, registry)?;
    let dir = g.out.join("segments").join(game.slug());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, records) in [
        ("sketches.jsonl", sketch_records(&segments, registry)?),
        ("tiles.jsonl", tile_records(&segments)),
    ] {
        let path = dir.join(name);
        let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        write_pack(BufWriter::new(file), &records)?;
    }
    write_file(
        &dir.join("channels.json"),
        ChannelOrder::for_profile(registry.profile(game)).to_json().as_bytes(),
    )?;
    let report = corpus.segment_report(game, registry).to_string();
    write_file(&dir.join("counts.txt"), report.as_bytes())?;
    print!("{report}");
    println!("{} records -> {}", segments.len(), dir.display());
    Ok(())
}

fn load_pack(path: &Path) -> Result<Vec<PackRecord>> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_pack(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Sketches of every record; tile records are sketched with their
/// tileset's affordance map.
fn pack_sketches(records: &[PackRecord], registry: &Registry) -> Result<Vec<Sketch>> {
    records
        .iter()
        .map(|r| match (r.layer, r.tileset) {
            (Layer::Tiles, Some(game)) => {
                let grid = r.to_tile_grid(registry)?;
                Ok(to_sketch(&grid, &registry.profile(game).affordances)?)
            }
            _ => Ok(r.to_sketch()?),
        })
        .collect()
}

#[derive(Serialize)]
struct ApkldivRow<'a> {
    a: &'a str,
    b: &'a str,
    k2: f64,
    k3: f64,
    k4: f64,
    apkldiv: f64,
    std: Option<f64>,
    epsilon: f64,
    log_base: &'static str,
}

#[derive(Serialize)]
struct PlayRow<'a> {
    segment: &'a str,
    horizontal: bool,
    vertical: bool,
    playable: bool,
}

fn eval(g: &Global, registry: &Registry, cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Apkldiv { a, b, unpaired, output } => {
            let a = pack_sketches(&load_pack(&a)?, registry)?;
            let b = pack_sketches(&load_pack(&b)?, registry)?;
            let report = if unpaired {
                apkldiv_unpaired(&a, &b, g.epsilon)?
            } else {
                let refs: Vec<&Sketch> = b.iter().collect();
                let partners: Vec<&Sketch> = round_robin(&refs, a.len()).into_iter().copied().collect();
                apkldiv_paired(&a, &partners, g.epsilon)?
            };
            let mut rows = Vec::new();
            let k = |j: usize| &report.per_k[j].1;
            if report.mode == ApkldivMode::Paired {
                let partners = round_robin(&b, a.len());
                for (i, (sa, sb)) in a.iter().zip(partners).enumerate() {
                    rows.push(ApkldivRow {
                        a: &sa.id,
                        b: &sb.id,
                        k2: k(0)[i],
                        k3: k(1)[i],
                        k4: k(2)[i],
                        apkldiv: report.values[i],
                        std: None,
                        epsilon: report.epsilon,
                        log_base: report.log_base,
                    });
                }
            }
            let mean = |j: usize| k(j).iter().sum::<f64>() / k(j).len() as f64;
            rows.push(ApkldivRow {
                a: "summary",
                b: "summary",
                k2: mean(0),
                k3: mean(1),
                k4: mean(2),
                apkldiv: report.mean,
                std: Some(report.std),
                epsilon: report.epsilon,
                log_base: report.log_base,
            });
            emit(output.as_deref(), &csv_bytes(rows)?)
        }
        EvalCommand::Hist { games, pack, output } => {
            let mut rows: Vec<HistogramRow> = Vec::new();
            let games = if games.is_empty() && pack.is_empty() {
                GameId::ALL.to_vec()
            } else {
                games
            };
            if !games.is_empty() {
                let corpus = load_corpus(g, registry)?;
                for game in games {
                    let hist = tile_histogram(corpus.levels(game))?;
                    rows.extend(histogram_rows(&game.to_string(), &hist, registry.profile(game)));
                }
            }
            for path in pack {
                let records = load_pack(&path)?;
                let grids = records
                    .iter()
                    .map(|r| r.to_tile_grid(registry))
                    .collect::<Result<Vec<_>, _>>()?;
                let hist = tile_histogram(&grids)?;
                rows.extend(histogram_rows(
                    &path.display().to_string(),
                    &hist,
                    registry.profile(hist.game),
                ));
            }
            emit(output.as_deref(), &csv_bytes(rows)?)
        }
        EvalCommand::Play { pack, movement, output } => {
            let records = load_pack(&pack)?;
            let game = match movement.or_else(|| records.first().and_then(|r| r.tileset)) {
                Some(game) => game,
                None => {
                    return Err(CliError::Usage("sketch packs need --movement GAME".into()).into());
                }
            };
            let sketches = pack_sketches(&records, registry)?;
            let batch = playable_percentage(&sketches, &registry.profile(game).movement)?;
            let rows = sketches.iter().zip(&batch.results).map(|(s, p)| PlayRow {
                segment: &s.id,
                horizontal: p.horizontal,
                vertical: p.vertical,
                playable: p.playable(),
            });
            emit(output.as_deref(), &csv_bytes(rows)?)?;
            eprintln!(
                "{game} movement: {:.2}% playable of {}",
                batch.percentage,
                sketches.len()
            );
            Ok(())
        }
    }
}
