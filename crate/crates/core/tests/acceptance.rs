//! Acceptance criteria 1 to 10. Each test prints one `PASS`/`FAIL` line with
//! its measured figures before asserting, so `cargo test --test acceptance --
//! --nocapture` doubles as a report.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use invextract::cleanup::{
    binarize_document, detect_barcodes, detect_pen_marks, extract_line_masks, remove_grid_lines_with_masks,
};
use invextract::geometry::{detect_document_quad, estimate_homography, Quad};
use invextract::ocr::{MockEngine, OcrWord};
use invextract::pipeline::{Pipeline, PipelineConfig, StageDumper, SCHEMA_JSON};
use invextract::raster::{dilate, erode, open, otsu_threshold_value, to_grayscale, write_png, Kernel};
use invextract::synthfix::font::{draw_text, FontMetrics};
use invextract::synthfix::{generate, Column, Distortion, FixtureSpec, GroundTruth, HeaderStyle};
use invextract::tables::{detect_lattice, SourceLayer, TablesConfig};
use invextract::{PixelFormat, Raster};

// Pinned tolerances and budgets.
const PERSPECTIVE_MAX_ERR_PX: f64 = 2.0;
const PERSPECTIVE_MIN_OK: usize = 95;
const TEXT_RECALL_MIN: f64 = 0.98;
const GRID_RESIDUE_MAX: f64 = 0.05;
const SCRIBBLE_REMOVAL_MIN: f64 = 0.95;
const TEXT_LOSS_MAX: f64 = 0.01;
const BARCODE_IOU_MIN: f64 = 0.8;
const LATTICE_CELL_TOL_PX: u32 = 2;
const E2E_CELL_ACCURACY_MIN: f64 = 0.95;

fn report(n: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let verdict = if ok && elapsed <= limit { "PASS" } else { "FAIL" };
    println!(
        "criterion {n:>2} [{name}] {verdict}: {detail}; {:.2}s of {:.0}s budget",
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
    assert!(elapsed <= limit, "criterion {n} ({name}) exceeded its time budget");
}

fn random_binary(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Raster {
    let density: f64 = rng.gen_range(0.05..0.95);
    let data = (0..w * h).map(|_| if rng.gen_bool(density) { 255 } else { 0 }).collect();
    Raster::new(w, h, PixelFormat::Binary, data).unwrap()
}

/// Per-pixel max/min over the kernel window, anchored at the kernel center;
/// pixels outside the image count as background.
fn naive_morph(img: &Raster, kw: u32, kh: u32, dilation: bool) -> Raster {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (ax, ay) = ((kw / 2) as i64, (kh / 2) as i64);
    Raster::from_fn(img.width(), img.height(), PixelFormat::Binary, |x, y| {
        let mut any = false;
        let mut all = true;
        for j in 0..kh as i64 {
            for i in 0..kw as i64 {
                let (dx, dy) = (i - ax, j - ay);
                // dilation reflects the kernel; erosion does not
                let (sx, sy) = if dilation { (x as i64 - dx, y as i64 - dy) } else { (x as i64 + dx, y as i64 + dy) };
                let v = sx >= 0 && sy >= 0 && sx < w && sy < h && img.get(sx as u32, sy as u32) != 0;
                any |= v;
                all &= v;
            }
        }
        if (dilation && any) || (!dilation && all) {
            255
        } else {
            0
        }
    })
}

#[test]
fn criterion_01_morphology_oracle() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let img = random_binary(&mut rng, 32, 32);
        let (kw, kh) = (rng.gen_range(1..=7), rng.gen_range(1..=7));
        let k = Kernel::rect(kw, kh).unwrap();
        let d = naive_morph(&img, kw, kh, true);
        let e = naive_morph(&img, kw, kh, false);
        let o = naive_morph(&e, kw, kh, true);
        mismatches += (dilate(&img, &k, 1).unwrap() != d) as usize;
        mismatches += (erode(&img, &k, 1).unwrap() != e) as usize;
        mismatches += (open(&img, &k).unwrap() != o) as usize;
    }
    report(
        1,
        "morphology oracle",
        mismatches == 0,
        t.elapsed(),
        Duration::from_secs(10),
        &format!("{mismatches} of 600 dilate/erode/open results differ from the naive oracle"),
    );
}

/// Exhaustive Otsu in exact integer arithmetic. Class 0 is `v <= t`; the
/// between-class variance is proportional to `(w1*s0 - w0*s1)^2 / (w0*w1)`.
fn brute_force_otsu(img: &Raster) -> u8 {
    let data = img.data();
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..=255u8 {
        let (mut w0, mut s0, mut w1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for &v in data {
            if v <= t {
                w0 += 1;
                s0 += v as u128;
            } else {
                w1 += 1;
                s1 += v as u128;
            }
        }
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let diff = (w1 * s0).abs_diff(w0 * s1);
        let (num, den) = (diff * diff, w0 * w1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map_or(data[0], |b| b.0)
}

#[test]
fn criterion_02_otsu_oracle() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for i in 0..50 {
        let (w, h) = (rng.gen_range(8..=64), rng.gen_range(8..=64));
        let (a, b): (u8, u8) = (rng.gen(), rng.gen());
        let spread = rng.gen_range(1..=80u8);
        let data = (0..w * h)
            .map(|_| match i % 3 {
                0 => rng.gen(),
                _ => {
                    let c = if rng.gen_bool(0.4) { a } else { b };
                    c.saturating_add(rng.gen_range(0..spread)).saturating_sub(spread / 2)
                }
            })
            .collect();
        let img = Raster::new(w, h, PixelFormat::Gray8, data).unwrap();
        mismatches += (otsu_threshold_value(&img).unwrap() != brute_force_otsu(&img)) as usize;
    }
    report(
        2,
        "otsu oracle",
        mismatches == 0,
        t.elapsed(),
        Duration::from_secs(5),
        &format!("{mismatches} of 50 thresholds differ from exhaustive search"),
    );
}

#[test]
fn criterion_03_perspective_round_trip() {
    let t = Instant::now();
    let (pw, ph) = (1000, 750);
    let mut ok = 0;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut spec = FixtureSpec::new(seed, HeaderStyle::FreeText, 1);
        (spec.page_width, spec.page_height, spec.header_rows) = (pw, ph, 2);
        spec.distortion = Distortion::perspective(seed, pw, ph, 80, 60.0);
        let (img, truth) = generate(&spec).unwrap();
        let gray = to_grayscale(&img).unwrap();
        let Ok(found) = detect_document_quad(&gray, 35000.0) else {
            continue;
        };
        let corner_err = found.max_corner_error(&truth.page_quad);
        // The recovered map must send the true page corners onto the upright
        // rectangle.
        let (rw, rh) = found.rectified_size();
        let target = Quad::rect(rw as f64, rh as f64);
        let hom = estimate_homography(&found, &target).unwrap();
        let mapped = hom.apply_quad(&truth.page_quad);
        let map_err = mapped.max_corner_error(&target);
        let err = corner_err.max(map_err);
        worst = worst.max(err);
        ok += (err <= PERSPECTIVE_MAX_ERR_PX) as usize;
    }
    report(
        3,
        "perspective round-trip",
        ok >= PERSPECTIVE_MIN_OK,
        t.elapsed(),
        Duration::from_secs(60),
        &format!("{ok}/100 seeds within {PERSPECTIVE_MAX_ERR_PX} px (worst {worst:.2} px)"),
    );
}

fn ratio(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

#[test]
fn criterion_04_line_removal() {
    let t = Instant::now();
    let (mut min_recall, mut max_residue) = (1.0f64, 0.0f64);
    for seed in 0..20u64 {
        let style = if seed % 2 == 0 { HeaderStyle::Ruled } else { HeaderStyle::BorderlessAligned };
        let (img, truth) = generate(&FixtureSpec::new(400 + seed, style, 1 + seed as usize % 7)).unwrap();
        let bin = binarize_document(&to_grayscale(&img).unwrap()).unwrap();
        let masks = extract_line_masks(&bin).unwrap();
        let clean = remove_grid_lines_with_masks(&bin, &masks).unwrap();
        min_recall = min_recall.min(ratio(
            clean.count_overlap(&truth.ink_mask),
            truth.ink_mask.count_foreground(),
        ));
        max_residue = max_residue.max(ratio(
            clean.count_overlap(&truth.grid_mask),
            truth.grid_mask.count_foreground(),
        ));
    }
    report(
        4,
        "line removal",
        min_recall >= TEXT_RECALL_MIN && max_residue <= GRID_RESIDUE_MAX,
        t.elapsed(),
        Duration::from_secs(30),
        &format!("worst text recall {min_recall:.4}, worst grid residue {max_residue:.4} over 20 pages"),
    );
}

#[test]
fn criterion_05_pen_mark_removal() {
    let t = Instant::now();
    let (mut min_removed, mut max_loss) = (1.0f64, 0.0f64);
    for seed in 0..20u64 {
        let mut spec = FixtureSpec::new(500 + seed, HeaderStyle::ALL[seed as usize % 3], 3);
        spec.distortion.scribbles = 1 + (seed % 3) as u32;
        let (img, truth) = generate(&spec).unwrap();
        let found = detect_pen_marks(&img).unwrap();
        min_removed = min_removed.min(ratio(
            found.mask.count_overlap(&truth.scribble_mask),
            truth.scribble_mask.count_foreground(),
        ));
        max_loss = max_loss.max(ratio(found.mask.count_overlap(&truth.ink_mask), truth.ink_mask.count_foreground()));
    }
    report(
        5,
        "pen-mark removal",
        min_removed >= SCRIBBLE_REMOVAL_MIN && max_loss <= TEXT_LOSS_MAX,
        t.elapsed(),
        Duration::from_secs(30),
        &format!("worst scribble removal {min_removed:.4}, worst text loss {max_loss:.4} over 20 fixtures"),
    );
}

#[test]
fn criterion_06_barcode_detection() {
    let t = Instant::now();
    let mut min_iou = 1.0f64;
    let mut wrong_count = 0;
    let mut false_hits = 0;
    for seed in 0..20u64 {
        let mut spec = FixtureSpec::new(600 + seed, HeaderStyle::ALL[seed as usize % 3], 2 + seed as usize % 4);
        spec.distortion.barcode = true;
        let (img, truth) = generate(&spec).unwrap();
        let found = detect_barcodes(&to_grayscale(&img).unwrap()).unwrap();
        wrong_count += (found.boxes.len() != 1) as usize;
        let want = truth.barcode_box.unwrap();
        let best = found.boxes.iter().map(|b| b.iou(&want)).fold(0.0, f64::max);
        min_iou = min_iou.min(best);

        let plain = FixtureSpec::new(700 + seed, HeaderStyle::ALL[seed as usize % 3], 2 + seed as usize % 4);
        let (img, _) = generate(&plain).unwrap();
        false_hits += detect_barcodes(&to_grayscale(&img).unwrap()).unwrap().boxes.len();
    }
    report(
        6,
        "barcode detection",
        min_iou >= BARCODE_IOU_MIN && wrong_count == 0 && false_hits == 0,
        t.elapsed(),
        Duration::from_secs(30),
        &format!(
            "worst IoU {min_iou:.3}, {wrong_count} pages without exactly one detection, {false_hits} detections on 20 barcode-free pages"
        ),
    );
}

#[test]
fn criterion_07_lattice_detection() {
    let t = Instant::now();
    let cfg = TablesConfig::default();
    let mut failures = Vec::new();
    let mut worst = 0u32;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
        let rows = rng.gen_range(2..=8usize);
        let cols = rng.gen_range(2..=8usize);
        let mut spec = FixtureSpec::new(800 + seed, HeaderStyle::FreeText, rows - 1);
        spec.page_width = 1500;
        spec.columns = Column::set_of(cols);
        let (img, truth) = generate(&spec).unwrap();
        let bin = binarize_document(&to_grayscale(&img).unwrap()).unwrap();
        let masks = extract_line_masks(&bin).unwrap();
        let g = truth.product_grid.as_ref().unwrap();
        let region = g.bbox.expand(10, img.width(), img.height());
        let grid = match detect_lattice(&masks, region, &cfg) {
            Ok(grid) => grid,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        if (grid.n_rows, grid.n_cols) != (rows, cols) {
            failures.push(format!("seed {seed}: {}x{} instead of {rows}x{cols}", grid.n_rows, grid.n_cols));
            continue;
        }
        for (cell, (_, _, want)) in grid.cells.iter().zip(g.cells()) {
            let b = cell.bbox;
            let err = [
                b.x.abs_diff(want.x),
                b.y.abs_diff(want.y),
                b.right().abs_diff(want.right()),
                b.bottom().abs_diff(want.bottom()),
            ]
            .into_iter()
            .max()
            .unwrap();
            worst = worst.max(err);
        }
    }
    report(
        7,
        "lattice detection",
        failures.is_empty() && worst <= LATTICE_CELL_TOL_PX,
        t.elapsed(),
        Duration::from_secs(30),
        &format!("{} shape failures {:?}, worst cell edge error {worst} px", failures.len(), failures),
    );
}

fn run_mock(img: &Raster, truth: &GroundTruth) -> invextract::pipeline::InvoiceExtraction {
    let engine = MockEngine::new(truth.clone());
    Pipeline::new(PipelineConfig::default())
        .unwrap()
        .run_image(img, "fixture.png", &engine, &StageDumper::disabled())
        .unwrap()
}

#[test]
fn criterion_08_three_layer_fallback() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let expected = [
        (HeaderStyle::Ruled, SourceLayer::Lattice),
        (HeaderStyle::BorderlessAligned, SourceLayer::BoxFallback),
        (HeaderStyle::FreeText, SourceLayer::RowWise),
    ];
    for (style, layer) in expected {
        for seed in 0..5u64 {
            let mut spec = FixtureSpec::new(900 + seed, style, 2 + seed as usize);
            spec.header_rows = 2 + seed as usize;
            let (img, truth) = generate(&spec).unwrap();
            let out = run_mock(&img, &truth);
            if out.diagnostics.header_layer != Some(layer) {
                failures.push(format!("{style:?}/{seed}: layer {:?}", out.diagnostics.header_layer));
            } else if out.header != truth.header_kv {
                failures.push(format!("{style:?}/{seed}: pairs {:?} vs {:?}", out.header, truth.header_kv));
            }
        }
    }
    report(
        8,
        "three-layer fallback",
        failures.is_empty(),
        t.elapsed(),
        Duration::from_secs(30),
        &format!("{} of 15 fixtures wrong {:?}", failures.len(), failures),
    );
}

/// `(matching, total)` over header fields and line-item cells.
fn score(out_header: &IndexMap<String, String>, out_items: &[IndexMap<String, String>], truth: &GroundTruth) -> (usize, usize) {
    let mut hit = 0;
    let mut total = 0;
    for (k, v) in &truth.header_kv {
        total += 1;
        hit += (out_header.get(k) == Some(v)) as usize;
    }
    for (i, item) in truth.line_items.iter().enumerate() {
        for (k, v) in item {
            total += 1;
            hit += (out_items.get(i).and_then(|o| o.get(k)) == Some(v)) as usize;
        }
    }
    (hit, total)
}

#[test]
fn criterion_09_end_to_end() {
    let t = Instant::now();
    let (mut hit, mut total) = (0, 0);
    let (mut clean_hit, mut clean_total) = (0, 0);
    let mut clean_misses = Vec::new();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let style = HeaderStyle::ALL[seed as usize % 3];
        let mut spec = FixtureSpec::new(1000 + seed, style, rng.gen_range(1..=8));
        spec.header_rows = rng.gen_range(2..=6);
        spec.wrap_probability = 0.25;
        let distorted = seed % 2 == 1;
        if distorted {
            spec.distortion = Distortion::bundle(1000 + seed, spec.page_width, spec.page_height);
        }
        let (img, truth) = generate(&spec).unwrap();
        let out = run_mock(&img, &truth);
        let (h, n) = score(&out.header, &out.line_items, &truth);
        hit += h;
        total += n;
        if !distorted {
            clean_hit += h;
            clean_total += n;
            if h != n {
                clean_misses.push(seed);
            }
        }
    }
    let overall = ratio(hit, total);
    report(
        9,
        "end-to-end",
        overall >= E2E_CELL_ACCURACY_MIN && clean_hit == clean_total,
        t.elapsed(),
        Duration::from_secs(300),
        &format!(
            "{hit}/{total} cells overall ({:.2}%), {clean_hit}/{clean_total} on undistorted fixtures, misses on clean seeds {clean_misses:?}",
            100.0 * overall
        ),
    );
}

fn write_with_sidecar(dir: &Path, name: &str, img: &Raster, truth: &GroundTruth) -> std::path::PathBuf {
    let path = dir.join(name);
    write_png(img, &path).unwrap();
    truth.write_sidecar(&path).unwrap();
    path
}

/// A page of plain sentences: text but none of the table keywords.
fn no_anchor_page() -> (Raster, GroundTruth) {
    let (w, h) = (900, 700);
    let mut img = Raster::filled(w, h, PixelFormat::Rgb8, 255);
    let mut truth = GroundTruth::empty(w, h);
    let metrics = FontMetrics::new(3);
    let lines = ["MEETING NOTES", "PLEASE CALL BACK", "LUNCH AT NOON"];
    for (i, line) in lines.iter().enumerate() {
        let y = 80 + 60 * i as u32;
        draw_text(&mut img, None, metrics, 60, y, line, [0, 0, 0]);
        for (j, (text, bbox)) in metrics.layout(line, 60, y).into_iter().enumerate() {
            truth.words.push(OcrWord {
                text,
                bbox,
                confidence: 95.0,
                block_id: 1,
                line_id: i as u32 + 1,
                word_id: j as u32 + 1,
            });
        }
    }
    (img, truth)
}

#[test]
fn criterion_10_robustness() {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let schema: serde_json::Value = serde_json::from_str(SCHEMA_JSON).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let cases: Vec<(&str, Raster, GroundTruth)> = vec![
        ("blank.png", Raster::filled(800, 600, PixelFormat::Rgb8, 255), GroundTruth::empty(800, 600)),
        ("black.png", Raster::filled(800, 600, PixelFormat::Rgb8, 0), GroundTruth::empty(800, 600)),
        ("tiny.png", Raster::filled(16, 16, PixelFormat::Rgb8, 200), GroundTruth::empty(16, 16)),
        {
            let (img, truth) = no_anchor_page();
            ("no_anchor.png", img, truth)
        },
    ];
    let mut failures = Vec::new();
    for (name, img, truth) in &cases {
        let path = write_with_sidecar(dir.path(), name, img, truth);
        let out = Command::new(env!("CARGO_BIN_EXE_invextract"))
            .args(["run", "--ocr", "mock"])
            .arg(&path)
            .output()
            .unwrap();
        if out.status.code() != Some(0) {
            failures.push(format!("{name}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
            continue;
        }
        let doc: serde_json::Value = match serde_json::from_slice(&out.stdout) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("{name}: output is not JSON: {e}"));
                continue;
            }
        };
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        if !errors.is_empty() {
            failures.push(format!("{name}: schema violations {errors:?}"));
        }
        let diag = &doc["diagnostics"];
        let explained = diag["degraded"] == true
            && diag["degraded_stages"].as_array().is_some_and(|s| !s.is_empty());
        if !explained {
            failures.push(format!("{name}: no degraded stage explains the empty result"));
        }
    }
    report(
        10,
        "robustness",
        failures.is_empty(),
        t.elapsed(),
        Duration::from_secs(30),
        &format!("{} of {} degenerate inputs mishandled {:?}", failures.len(), cases.len(), failures),
    );
}
