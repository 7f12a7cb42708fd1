use std::fs;
use std::path::Path;

use sketchfilter::corpus::Corpus;
use sketchfilter::level::to_sketch;
use sketchfilter::segment::{
    pack_to_string, read_pack, sketch_records, tile_records, ChannelOrder, Layer, PackRecord, SEGMENT_HEIGHT,
    SEGMENT_WIDTH,
};
use sketchfilter::transfer::{
    batch_transfer, job_items, CommandFilter, FilterKind, PackFilter, Selection, SketchItem, TransferJob,
};
use sketchfilter::{Affordance, GameId, Registry};

fn sample() -> (Registry, Corpus) {
    let r = Registry::default();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_corpus");
    let c = Corpus::load(&root, &r).unwrap();
    (r, c)
}

fn ki_items(r: &Registry, c: &Corpus, source: GameId, take: usize) -> (TransferJob, Vec<SketchItem>) {
    let job = TransferJob {
        source,
        target: GameId::Ki,
        kind: FilterKind::Ae,
        selection: Selection::Segments,
        seed: 3,
    };
    let mut items = job_items(&job, c, r).unwrap();
    items.truncate(take);
    (job, items)
}

#[test]
fn exported_packs_round_trip_bit_exact() {
    let (r, c) = sample();
    for game in GameId::ALL {
        let segments = c.segments(game, &r).unwrap();
        assert_eq!(segments.len(), c.segment_report(game, &r).total);
        for records in [sketch_records(&segments, &r).unwrap(), tile_records(&segments)] {
            let text = pack_to_string(&records);
            assert_eq!(text.lines().count(), segments.len());
            let back = read_pack(text.as_bytes()).unwrap();
            assert_eq!(pack_to_string(&back), text);
            for (rec, seg) in back.iter().zip(&segments) {
                assert_eq!(rec.origin(), seg.origin);
                assert_eq!(rec.rows.len(), SEGMENT_HEIGHT);
                assert!(rec.rows.iter().all(|row| row.chars().count() == SEGMENT_WIDTH));
                match rec.layer {
                    Layer::Tiles => assert_eq!(rec.to_tile_grid(&r).unwrap().tiles, seg.grid.tiles),
                    Layer::Sketch => {
                        let sketch = to_sketch(&seg.grid, &r.profile(game).affordances).unwrap();
                        assert_eq!(rec.to_sketch().unwrap().cells, sketch.cells);
                    }
                }
            }
        }
    }
}

#[test]
fn channel_order_matches_pack_symbols() {
    let (r, c) = sample();
    for game in GameId::ALL {
        let order = ChannelOrder::for_profile(r.profile(game));
        let segments = c.segments(game, &r).unwrap();
        for rec in tile_records(&segments[..segments.len().min(50)]) {
            assert!(rec
                .rows
                .iter()
                .flat_map(|row| row.chars())
                .all(|ch| order.tiles.iter().any(|t| t.symbol == ch)));
        }
        assert_eq!(order.sketch.len(), Affordance::ALL.len());
    }
}

#[test]
fn pack_filter_serves_records_by_segment_id() {
    let (r, c) = sample();
    let (job, items) = ki_items(&r, &c, GameId::Ki, 5);
    let segments = c.segments(GameId::Ki, &r).unwrap();
    let records = tile_records(&segments[..5]);
    let filter = PackFilter::from_records(GameId::Ki, &records, &r).unwrap();
    let batch = batch_transfer(&job, &items, &filter).unwrap();
    assert_eq!(batch.failures(), 0);
    for (out, seg) in batch.outputs.iter().zip(&segments) {
        assert_eq!(out.as_ref().unwrap().grid.tiles, seg.grid.tiles);
    }

    let (_, more) = ki_items(&r, &c, GameId::Ki, 6);
    let batch = batch_transfer(&job, &more, &filter).unwrap();
    assert_eq!(batch.failures(), 1);
    assert!(batch.manifest[5]
        .error
        .as_deref()
        .unwrap()
        .contains("no precomputed output"));

    let wrong: Vec<PackRecord> = tile_records(&c.segments(GameId::Smb, &r).unwrap()[..1]);
    assert!(PackFilter::from_records(GameId::Ki, &wrong, &r).is_err());
}

/// Maps sketch rows to KI tiles without touching the provenance fields.
const SED_TO_KI: &str = r#"h; s/.*"rows"://; y/X|E*-/#DH../; x; s/"rows":.*//; s/"layer":"sketch"/"layer":"tiles","tileset":"KI"/; G; s/\n/"rows":/"#;

#[test]
fn command_filter_exchanges_packs_with_a_process() {
    let (r, c) = sample();
    let dir = tempfile::tempdir().unwrap();
    let (job, items) = ki_items(&r, &c, GameId::Smb, 20);
    let command = vec![
        "sh".into(),
        "-c".into(),
        format!("sed -e '{SED_TO_KI}' {{input}} > {{output}}"),
    ];
    let filter = CommandFilter::new(GameId::Ki, command, dir.path().to_path_buf(), r.clone()).unwrap();
    let batch = batch_transfer(&job, &items, &filter).unwrap();
    assert_eq!(batch.failures(), 0, "{:?}", batch.manifest);
    for (out, item) in batch.outputs.iter().zip(&items) {
        let out = out.as_ref().unwrap();
        assert_eq!(out.grid.game, GameId::Ki);
        let back = to_sketch(&out.grid, &r.profile(GameId::Ki).affordances).unwrap();
        for (a, b) in item.sketch.cells.cells().iter().zip(back.cells.cells()) {
            if *a != Affordance::Collectable {
                assert_eq!(a, b);
            }
        }
    }
    let sent = fs::read_to_string(dir.path().join("sketches-ki.jsonl")).unwrap();
    assert_eq!(sent.lines().count(), 20);
    assert!(dir.path().join("tiles-ki.jsonl").exists());
}

#[test]
fn command_filter_failures_land_in_the_manifest() {
    let (r, c) = sample();
    let dir = tempfile::tempdir().unwrap();
    let (job, items) = ki_items(&r, &c, GameId::Ki, 3);

    let failing = CommandFilter::new(GameId::Ki, vec!["false".into()], dir.path().into(), r.clone()).unwrap();
    let batch = batch_transfer(&job, &items, &failing).unwrap();
    assert_eq!(batch.failures(), 3);

    let short = vec!["sh".into(), "-c".into(), "head -n 1 {input} > {output}".into()];
    let short = CommandFilter::new(GameId::Ki, short, dir.path().into(), r.clone()).unwrap();
    let batch = batch_transfer(&job, &items, &short).unwrap();
    assert_eq!(batch.failures(), 3);

    assert!(CommandFilter::new(GameId::Ki, Vec::new(), dir.path().into(), r).is_err());
}
