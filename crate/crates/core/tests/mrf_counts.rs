use std::collections::BTreeMap;
use std::path::PathBuf;

use sketchfilter::level::{parse_level, to_sketch};
use sketchfilter::mrf::{train_from_levels, MrfModel, NeighborhoodOrder};
use sketchfilter::{GameId, Registry, TileGrid};

/// Recount by explicit direction names, written independently of the
/// model's offset tables.
fn recount(levels: &[TileGrid], registry: &Registry, order: NeighborhoodOrder) -> BTreeMap<(String, u8), u64> {
    let names: &[&str] = match order {
        NeighborhoodOrder::Four => &["n", "s", "e", "w"],
        NeighborhoodOrder::Eight => &["nw", "n", "ne", "w", "e", "sw", "s", "se"],
    };
    let mut table = BTreeMap::new();
    for level in levels {
        let map = &registry.profile(level.game).affordances;
        let rows: Vec<Vec<u8>> = level.tiles.rows().map(|r| r.to_vec()).collect();
        let h = rows.len() as i64;
        let w = rows[0].len() as i64;
        let look = |r: i64, c: i64| -> char {
            if r < 0 || c < 0 || r >= h || c >= w {
                '#'
            } else {
                map.get(rows[r as usize][c as usize]).unwrap().symbol()
            }
        };
        for r in 0..h {
            for c in 0..w {
                let key: String = names
                    .iter()
                    .map(|name| {
                        let dr = if name.contains('n') {
                            -1
                        } else if name.contains('s') {
                            1
                        } else {
                            0
                        };
                        let dc = if name.contains('w') {
                            -1
                        } else if name.contains('e') {
                            1
                        } else {
                            0
                        };
                        look(r + dr, c + dc)
                    })
                    .collect();
                *table.entry((key, rows[r as usize][c as usize])).or_insert(0) += 1;
            }
        }
    }
    table
}

fn flatten(model: &MrfModel) -> BTreeMap<(String, u8), u64> {
    model
        .counts()
        .iter()
        .flat_map(|(ctx, row)| row.iter().map(move |(&t, &n)| ((ctx.as_str().to_string(), t), n)))
        .collect()
}

fn corpus(game: GameId, texts: &[&str]) -> Vec<TileGrid> {
    let r = Registry::default();
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| parse_level(t, r.profile(game), format!("l{i}")).unwrap())
        .collect()
}

fn synthetic() -> Vec<(GameId, Vec<TileGrid>)> {
    vec![
        (
            GameId::Smb,
            corpus(
                GameId::Smb,
                &["--?-o-\n-E----\nXXXX-X\n", "------\n--<>--\n--[]--\nXXXXXX\n"],
            ),
        ),
        (
            GameId::Ki,
            corpus(GameId::Ki, &["..H.\n.D..\n#T.#\n##M#\n", ".D\n.D\n##\n"]),
        ),
        (
            GameId::Met,
            corpus(GameId::Met, &["-----\n-D-E-\n##B##\n#-H-#\n#@M##\n", "#\n"]),
        ),
    ]
}

#[test]
fn counts_equal_brute_force_recount() {
    let r = Registry::default();
    for (game, levels) in synthetic() {
        for order in [NeighborhoodOrder::Four, NeighborhoodOrder::Eight] {
            let model = train_from_levels(&levels, r.profile(game), order).unwrap();
            let expected = recount(&levels, &r, order);
            assert_eq!(flatten(&model), expected, "{game} order {}", order.len());
            let cells: usize = levels.iter().map(|l| l.height() * l.width()).sum();
            assert_eq!(model.total_count(), cells as u64);
        }
    }
}

#[test]
fn saved_model_reloads_identically() {
    let r = Registry::default();
    for (game, levels) in synthetic() {
        let model = train_from_levels(&levels, r.profile(game), NeighborhoodOrder::Eight).unwrap();
        let text = model.save();
        let back = MrfModel::load(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.save(), text);
    }
}

/// Regenerate with `BLESS=1 cargo test -p sketchfilter --test mrf_counts`.
#[test]
fn golden_model_file() {
    let r = Registry::default();
    let (game, levels) = synthetic().remove(0);
    let model = train_from_levels(&levels, r.profile(game), NeighborhoodOrder::Four).unwrap();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/smb-mrf4.golden.txt");
    if std::env::var_os("BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, model.save()).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file present; run with BLESS=1 to create");
    assert_eq!(model.save(), golden);
}

#[test]
fn sketch_dimensions_follow_level() {
    let r = Registry::default();
    for (game, levels) in synthetic() {
        for l in &levels {
            let s = to_sketch(l, &r.profile(game).affordances).unwrap();
            assert_eq!(s.cells.dims(), l.tiles.dims());
        }
    }
}
