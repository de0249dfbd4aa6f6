use proptest::prelude::*;

use super::*;
use crate::cleanup::{binarize_document, extract_line_masks, remove_grid_lines_with_masks};
use crate::ocr::MockEngine;
use crate::raster::{fill_rect, to_grayscale, PixelFormat};
use crate::synthfix::{generate, FixtureSpec, GroundTruth, HeaderStyle};

fn word(text: &str, x: u32, y: u32, line: u32) -> OcrWord {
    OcrWord {
        text: text.into(),
        bbox: BBox::new(x, y, 18 * text.len() as u32, 21),
        confidence: 90.0,
        block_id: 1,
        line_id: line,
        word_id: x,
    }
}

/// White page with black rules at the given positions (thickness `t`),
/// spanning from the first to the last rail in each direction.
fn ruled_page(w: u32, h: u32, xs: &[u32], ys: &[u32], t: u32) -> Raster {
    let mut img = Raster::filled(w, h, PixelFormat::Rgb8, 255);
    let (x0, x1) = (xs[0], *xs.last().unwrap() + t);
    let (y0, y1) = (ys[0], *ys.last().unwrap() + t);
    for &y in ys {
        fill_rect(&mut img, BBox::new(x0, y, x1 - x0, t), [0, 0, 0]);
    }
    for &x in xs {
        fill_rect(&mut img, BBox::new(x, y0, t, y1 - y0), [0, 0, 0]);
    }
    img
}

fn masks_of(img: &Raster) -> (Raster, LineMasks) {
    let bin = binarize_document(&to_grayscale(img).unwrap()).unwrap();
    let masks = extract_line_masks(&bin).unwrap();
    (bin, masks)
}

/// Cell boxes between rail centers, computed directly from rail positions.
fn oracle_cells(xs: &[u32], ys: &[u32], t: u32) -> Vec<BBox> {
    let c = |p: u32| p + (t - 1) / 2;
    let mut out = Vec::new();
    for r in 0..ys.len() - 1 {
        for k in 0..xs.len() - 1 {
            out.push(BBox::new(c(xs[k]), c(ys[r]), c(xs[k + 1]) - c(xs[k]), c(ys[r + 1]) - c(ys[r])));
        }
    }
    out
}

#[test]
fn lattice_recovers_a_plain_grid() {
    let (xs, ys) = ([50, 170, 300, 460, 560], [60, 110, 160, 210]);
    for t in [1, 2, 3] {
        let img = ruled_page(640, 300, &xs, &ys, t);
        let (_, masks) = masks_of(&img);
        let grid = detect_lattice(&masks, img.bounds(), &TablesConfig::default()).unwrap();
        assert_eq!((grid.n_rows, grid.n_cols), (3, 4), "thickness {t}");
        let got: Vec<BBox> = grid.cells.iter().map(|c| c.bbox).collect();
        assert_eq!(got, oracle_cells(&xs, &ys, t), "thickness {t}");
        assert_eq!(grid.source_layer, SourceLayer::Lattice);
    }
}

#[test]
fn lattice_ignores_an_enclosing_border() {
    let (xs, ys) = ([100, 220, 340], [100, 150, 200, 250]);
    // the second variant ties the table to the border with a short rule
    for tied in [false, true] {
        let mut img = ruled_page(600, 400, &xs, &ys, 2);
        let mut rules = vec![
            BBox::new(60, 60, 500, 2),
            BBox::new(60, 358, 500, 2),
            BBox::new(60, 60, 2, 300),
            BBox::new(558, 60, 2, 300),
        ];
        if tied {
            rules.push(BBox::new(342, 175, 216, 2));
        }
        for b in rules {
            fill_rect(&mut img, b, [0, 0, 0]);
        }
        let (_, masks) = masks_of(&img);
        let grid = detect_lattice(&masks, img.bounds(), &TablesConfig::default()).unwrap();
        assert_eq!((grid.n_rows, grid.n_cols), (3, 2), "tied {tied}");
        assert_eq!(grid.cells[0].bbox, oracle_cells(&xs, &ys, 2)[0]);
    }
}

#[test]
fn lattice_not_found_without_rules() {
    let img = Raster::filled(200, 200, PixelFormat::Rgb8, 255);
    let (_, masks) = masks_of(&img);
    let err = detect_lattice(&masks, img.bounds(), &TablesConfig::default()).unwrap_err();
    assert!(matches!(err, Error::LatticeNotFound(_)));
    // a lone rectangle is one cell, not a table
    let img = ruled_page(300, 300, &[20, 200], &[20, 200], 2);
    let (_, masks) = masks_of(&img);
    let err = detect_lattice(&masks, img.bounds(), &TablesConfig::default()).unwrap_err();
    assert!(matches!(err, Error::LatticeNotFound(_)));
}

struct Prepared {
    truth: GroundTruth,
    clean: Raster,
    masks: LineMasks,
}

fn prepare(seed: u64, style: HeaderStyle, n: usize, wrap: f64) -> Prepared {
    let mut spec = FixtureSpec::new(seed, style, n);
    spec.wrap_probability = wrap;
    let (img, truth) = generate(&spec).unwrap();
    let (bin, masks) = masks_of(&img);
    let clean = remove_grid_lines_with_masks(&bin, &masks).unwrap();
    Prepared { truth, clean, masks }
}

fn reader<'a>(p: &'a Prepared, engine: &'a MockEngine, cfg: &'a OcrConfig) -> CellReader<'a> {
    CellReader {
        engine,
        page: &p.clean,
        frame: Frame::identity(p.clean.width(), p.clean.height()),
        cfg,
        min_width: 800,
    }
}

#[test]
fn lattice_matches_generated_grids() {
    for seed in 0..4 {
        let p = prepare(seed, HeaderStyle::Ruled, 3 + seed as usize, 0.0);
        let cfg = TablesConfig::default();
        for truth in [p.truth.header_grid.as_ref().unwrap(), p.truth.product_grid.as_ref().unwrap()] {
            let region = truth.bbox.expand(6, p.clean.width(), p.clean.height());
            let grid = detect_lattice(&p.masks, region, &cfg).unwrap();
            assert_eq!((grid.n_rows, grid.n_cols), (truth.n_rows(), truth.n_cols()), "seed {seed}");
            for (cell, (_, _, want)) in grid.cells.iter().zip(truth.cells()) {
                assert!(cell.bbox.iou(&want) > 0.9, "seed {seed}: {:?} vs {want:?}", cell.bbox);
            }
        }
    }
}

fn header_inputs<'a>(p: &'a Prepared, lexicon: &'a Lexicon) -> HeaderInputs<'a> {
    HeaderInputs {
        masks: &p.masks,
        clean: &p.clean,
        words: &p.truth.words,
        lexicon,
        fuzzy_threshold: 0.8,
    }
}

#[test]
fn each_header_style_takes_its_own_layer() {
    let lexicon = Lexicon::default();
    let ocr = OcrConfig::default();
    for (style, layer) in [
        (HeaderStyle::Ruled, SourceLayer::Lattice),
        (HeaderStyle::BorderlessAligned, SourceLayer::BoxFallback),
        (HeaderStyle::FreeText, SourceLayer::RowWise),
    ] {
        for seed in 10..13 {
            let p = prepare(seed, style, 3, 0.0);
            let engine = MockEngine::new(p.truth.clone());
            let region = p.truth.header_box.unwrap().expand(8, p.clean.width(), p.clean.height());
            let got = extract_header_table(region, &header_inputs(&p, &lexicon), &reader(&p, &engine, &ocr), &TablesConfig::default())
                .unwrap();
            assert_eq!(got.layer, layer, "{style:?} seed {seed}");
            let want: Vec<(String, String)> = p.truth.header_kv.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            assert_eq!(got.pairs, want, "{style:?} seed {seed}");
            assert_eq!(got.fallbacks.len(), match layer {
                SourceLayer::Lattice => 0,
                SourceLayer::BoxFallback => 1,
                SourceLayer::RowWise => 2,
            });
        }
    }
}

#[test]
fn box_fallback_needs_two_cells_in_a_row() {
    let blank = Raster::filled(200, 100, PixelFormat::Binary, 0);
    let err = detect_boxes_fallback(&blank, blank.bounds(), &TablesConfig::default()).unwrap_err();
    assert!(matches!(err, Error::FallbackNotApplicable(_)));
    let mut one_line = blank.clone();
    for x in (20..170).step_by(20) {
        fill_rect(&mut one_line, BBox::new(x, 40, 14, 20), [255, 255, 255]);
    }
    let err = detect_boxes_fallback(&one_line, one_line.bounds(), &TablesConfig::default()).unwrap_err();
    assert!(matches!(err, Error::FallbackNotApplicable(_)));
    let mut spread = Raster::filled(400, 100, PixelFormat::Binary, 0);
    for x in [20, 150, 300] {
        fill_rect(&mut spread, BBox::new(x, 40, 40, 20), [255, 255, 255]);
    }
    let grid = detect_boxes_fallback(&spread, spread.bounds(), &TablesConfig::default()).unwrap();
    assert_eq!((grid.n_rows, grid.n_cols), (1, 3));
}

#[test]
fn product_rows_match_line_items() {
    let lexicon = Lexicon::default();
    let ocr = OcrConfig::default();
    let cfg = TablesConfig::default();
    let mut continuations = 0;
    for seed in 20..26 {
        let p = prepare(seed, HeaderStyle::Ruled, 2 + (seed as usize % 5), 0.5);
        let engine = MockEngine::new(p.truth.clone());
        let g = p.truth.product_grid.as_ref().unwrap();
        let region = BBox::new(0, g.bbox.y.saturating_sub(4), p.clean.width(), g.bbox.h + 70);
        let table = extract_product_rows(&p.clean, region, &reader(&p, &engine, &ocr), &lexicon, 0.8, &cfg).unwrap();
        let got: Vec<_> = table.items.iter().map(|i| i.fields.clone()).collect();
        assert_eq!(got, p.truth.line_items, "seed {seed}");
        assert_eq!(table.totals.len(), 1, "seed {seed}");
        assert_eq!(table.totals[0].values().last(), p.truth.total.as_ref());
        continuations += table.continuation_rows;
        let labels: Vec<&String> = table.grid.row(0).map(|c| &c.text).collect();
        assert_eq!(labels, p.truth.columns.iter().collect::<Vec<_>>());
        for cell in &table.grid.cells {
            assert!(region.contains(&cell.bbox));
            assert!(cell.col < table.grid.n_cols);
        }
    }
    assert!(continuations > 0);
}

#[test]
fn product_rows_need_text() {
    let blank = Raster::filled(300, 200, PixelFormat::Binary, 0);
    let engine = MockEngine::new(GroundTruth::empty(300, 200));
    let ocr = OcrConfig::default();
    let r = CellReader {
        engine: &engine,
        page: &blank,
        frame: Frame::identity(300, 200),
        cfg: &ocr,
        min_width: 800,
    };
    let err = extract_product_rows(&blank, blank.bounds(), &r, &Lexicon::default(), 0.8, &TablesConfig::default());
    assert!(matches!(err, Err(Error::Table(_))));
}

#[test]
fn rowwise_pairs_colons_and_keyless_anchors() {
    let words = vec![
        word("Invoice", 40, 100, 1),
        word("No:", 180, 100, 1),
        word("INV-1042", 260, 100, 1),
        word("GSTIN", 40, 140, 2),
        word("GST4455667", 40, 180, 3),
        word("Lorem", 40, 220, 4),
        word("ipsum", 160, 220, 4),
        word(":", 40, 260, 5),
        word("orphan", 70, 260, 5),
        word("Due", 40, 300, 6),
        word("Date:", 120, 300, 6),
        word("12/03/2024", 40, 340, 7),
    ];
    let kv = extract_rowwise_kv(&words, &Lexicon::default(), 0.8);
    assert_eq!(
        kv.pairs,
        vec![
            ("Invoice No".to_string(), "INV-1042".to_string()),
            ("GSTIN".to_string(), "GST4455667".to_string()),
            ("Due Date".to_string(), "12/03/2024".to_string()),
        ]
    );
    assert_eq!(kv.discarded, vec!["Lorem ipsum".to_string(), ": orphan".to_string()]);
}

#[test]
fn join_words_glues_hyphenated_wraps() {
    let words = vec![word("Cart-", 0, 0, 1), word("ridge", 0, 30, 2), word("Pack", 110, 30, 2)];
    assert_eq!(join_words(&words).0, "Cartridge Pack");
    assert_eq!(join_words(&[]).0, "");
}

#[test]
fn config_validation() {
    assert!(TablesConfig::default().validate().is_ok());
    let bad = TablesConfig {
        box_min_height: 200,
        ..TablesConfig::default()
    };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
}

proptest! {
    #[test]
    fn rowwise_never_emits_empty_keys(
        lines in prop::collection::vec(
            prop::collection::vec("[A-Za-z0-9:/.,-]{1,8}", 1..4), 0..8)
    ) {
        let mut words = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let mut x = 0;
            for (j, t) in line.iter().enumerate() {
                words.push(OcrWord {
                    text: t.clone(),
                    bbox: BBox::new(x, i as u32 * 40, 18 * t.len() as u32, 21),
                    confidence: 90.0,
                    block_id: 1,
                    line_id: i as u32 + 1,
                    word_id: j as u32,
                });
                x += 18 * t.len() as u32 + 12;
            }
        }
        let kv = extract_rowwise_kv(&words, &Lexicon::default(), 0.8);
        for (k, _) in &kv.pairs {
            prop_assert!(!k.trim().is_empty());
        }
        // every line is accounted for at most once
        prop_assert!(kv.pairs.len() + kv.discarded.len() <= lines.len());
    }
}
