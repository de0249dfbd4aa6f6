use std::sync::OnceLock;

use proptest::prelude::*;

use invextract::cleanup::{binarize_document, detect_pen_marks, extract_line_masks, remove_grid_lines};
use invextract::geometry::{estimate_homography, order_corners, warp_perspective, Homography, Quad};
use invextract::layout::{split_sections, AnchorClass, AnchorMatch, LayoutConfig};
use invextract::ocr::{parse_engine_tsv, recognize, serialize_tsv, Frame, MockEngine, OcrConfig, OcrWord};
use invextract::raster::{
    connected_components, dilate, equalize_histogram, erode, open, threshold_otsu, to_grayscale, Kernel,
};
use invextract::synthfix::{generate, FixtureSpec, GroundTruth, HeaderStyle};
use invextract::tables::{detect_lattice, TablesConfig};
use invextract::{BBox, PixelFormat, Point, Raster};

fn binary(w: u32, h: u32) -> impl Strategy<Value = Raster> {
    prop::collection::vec(any::<bool>(), (w * h) as usize).prop_map(move |bits| {
        let data = bits.into_iter().map(|b| if b { 255 } else { 0 }).collect();
        Raster::new(w, h, PixelFormat::Binary, data).unwrap()
    })
}

fn gray(w: u32, h: u32) -> impl Strategy<Value = Raster> {
    prop::collection::vec(any::<u8>(), (w * h) as usize)
        .prop_map(move |data| Raster::new(w, h, PixelFormat::Gray8, data).unwrap())
}

fn subset(a: &Raster, b: &Raster) -> bool {
    a.data().iter().zip(b.data()).all(|(&x, &y)| x == 0 || y != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_is_monotone(a in binary(20, 20), extra in binary(20, 20), kw in 1u32..6, kh in 1u32..6) {
        let b = a.or(&extra).unwrap();
        let k = Kernel::rect(kw, kh).unwrap();
        prop_assert!(subset(&dilate(&a, &k, 1).unwrap(), &dilate(&b, &k, 1).unwrap()));
    }

    #[test]
    fn erosion_is_dual_to_dilation_away_from_the_border(img in binary(24, 24), rx in 0u32..3, ry in 0u32..3) {
        let k = Kernel::rect(2 * rx + 1, 2 * ry + 1).unwrap();
        let eroded = erode(&img, &k, 1).unwrap();
        let dual = dilate(&img.invert(), &k, 1).unwrap().invert();
        // The two border conventions disagree only within the kernel radius.
        for y in ry..24 - ry {
            for x in rx..24 - rx {
                prop_assert_eq!(eroded.get(x, y), dual.get(x, y), "at ({}, {})", x, y);
            }
        }
    }

    #[test]
    fn opening_is_idempotent(img in binary(24, 24), kw in 1u32..6, kh in 1u32..6) {
        let k = Kernel::rect(kw, kh).unwrap();
        let once = open(&img, &k).unwrap();
        prop_assert_eq!(open(&once, &k).unwrap(), once);
    }

    #[test]
    fn otsu_ignores_pixel_positions(img in gray(16, 12), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut data = img.data().to_vec();
        data.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled = Raster::new(16, 12, PixelFormat::Gray8, data).unwrap();
        prop_assert_eq!(threshold_otsu(&img).unwrap().1, threshold_otsu(&shuffled).unwrap().1);
    }

    #[test]
    fn equalization_preserves_order(img in gray(16, 16)) {
        let eq = equalize_histogram(&img).unwrap();
        let mut pairs: Vec<(u8, u8)> = img.data().iter().copied().zip(eq.data().iter().copied()).collect();
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            prop_assert!(w[0].1 <= w[1].1, "{:?}", w);
        }
    }

    #[test]
    fn component_areas_sum_to_foreground(img in binary(30, 20)) {
        let total: u64 = connected_components(&img).unwrap().iter().map(|c| c.area).sum();
        prop_assert_eq!(total as usize, img.count_foreground());
    }

    #[test]
    fn corner_order_ignores_input_order(
        jitter in prop::array::uniform8(-30.0f64..30.0),
        perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let base = [(100.0, 100.0), (600.0, 100.0), (600.0, 500.0), (100.0, 500.0)];
        let pts: Vec<Point> = base
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Point::new(x + jitter[2 * i], y + jitter[2 * i + 1]))
            .collect();
        let a = order_corners([pts[0], pts[1], pts[2], pts[3]]).unwrap();
        let b = order_corners([pts[perm[0]], pts[perm[1]], pts[perm[2]], pts[perm[3]]]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn homography_of_a_quad_onto_itself_is_identity(jitter in prop::array::uniform8(-40.0f64..40.0)) {
        let q = Quad::new(
            Point::new(50.0 + jitter[0], 60.0 + jitter[1]),
            Point::new(900.0 + jitter[2], 40.0 + jitter[3]),
            Point::new(950.0 + jitter[4], 700.0 + jitter[5]),
            Point::new(20.0 + jitter[6], 720.0 + jitter[7]),
        )
        .unwrap();
        let h = estimate_homography(&q, &q).unwrap();
        for (i, row) in h.m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - want).abs() < 1e-9, "m[{}][{}] = {}", i, j, v);
            }
        }
        let target = Quad::rect(800.0, 600.0);
        let h = estimate_homography(&q, &target).unwrap();
        let back = h.inverse().unwrap();
        for (s, d) in q.corners().iter().zip(target.corners()) {
            prop_assert!(h.apply(*s).distance(d) < 1e-6);
            prop_assert!(back.apply(d).distance(*s) < 1e-6);
        }
    }

    #[test]
    fn identity_warp_keeps_pixels(img in gray(20, 15)) {
        let h = Homography::translation(0.0, 0.0);
        prop_assert_eq!(warp_perspective(&img, &h, 20, 15).unwrap(), img);
    }

    #[test]
    fn gray_rgb_has_no_pen_marks(img in gray(40, 30)) {
        prop_assert!(detect_pen_marks(&img.to_rgb()).unwrap().is_empty());
    }

    #[test]
    fn combined_line_mask_is_the_union(img in binary(60, 40)) {
        let m = extract_line_masks(&img).unwrap();
        prop_assert_eq!(m.combined, m.vertical.or(&m.horizontal).unwrap());
    }

    #[test]
    fn tsv_round_trips_words(words in prop::collection::vec(
        ("[A-Za-z0-9.,:/-]{1,10}", 0u32..2000, 0u32..2000, 1u32..200, 1u32..80, 0u32..=100, 1u32..4, 1u32..4, 1u32..30, 1u32..20),
        0..12,
    )) {
        let words: Vec<OcrWord> = words
            .into_iter()
            .map(|(text, x, y, w, h, conf, block, par, line, word)| OcrWord {
                text,
                bbox: BBox::new(x, y, w, h),
                confidence: conf as f32,
                block_id: block,
                line_id: par * 1000 + line,
                word_id: word,
            })
            .collect();
        let parsed = parse_engine_tsv(&serialize_tsv(&words)).unwrap();
        prop_assert_eq!(parsed.malformed_rows, 0);
        prop_assert_eq!(parsed.words, words);
    }

    #[test]
    fn sections_stay_disjoint_and_on_page(
        ys in prop::collection::vec((0u32..1100, 0usize..3), 0..10),
        h in 10u32..30,
    ) {
        let classes = [AnchorClass::Metadata, AnchorClass::TableHeader, AnchorClass::Total];
        let anchors: Vec<AnchorMatch> = ys
            .iter()
            .enumerate()
            .map(|(i, &(y, c))| AnchorMatch {
                keyword: format!("k{i}"),
                class: classes[c],
                word_box: BBox::new(40 + 30 * i as u32, y, 60, h),
                score: 1.0,
                y_center: y as f64 + h as f64 / 2.0,
            })
            .collect();
        if let Ok(s) = split_sections(1000, 1200, &anchors, &LayoutConfig::default()) {
            let mut regions = vec![s.header_region, s.product_region];
            regions.extend(s.footer_region);
            for r in &regions {
                prop_assert!(r.right() <= 1000 && r.bottom() <= 1200, "{:?}", r);
            }
            for (i, a) in regions.iter().enumerate() {
                for b in &regions[i + 1..] {
                    prop_assert!(a.intersection(b).is_none(), "{:?} overlaps {:?}", a, b);
                }
            }
        }
    }
}

fn shared_fixture() -> &'static (Raster, GroundTruth) {
    static FIXTURE: OnceLock<(Raster, GroundTruth)> = OnceLock::new();
    FIXTURE.get_or_init(|| generate(&FixtureSpec::new(71, HeaderStyle::Ruled, 4)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mock_recognition_is_deterministic_and_in_bounds(
        x in 0u32..700, y in 0u32..900, w in 16u32..300, h in 16u32..300,
    ) {
        let (img, truth) = shared_fixture();
        let region = BBox::new(x, y, w, h);
        let crop = img.crop(region).unwrap();
        let engine = MockEngine::new(truth.clone());
        let frame = Frame::identity(img.width(), img.height()).offset(x, y);
        let cfg = OcrConfig::default();
        let a = recognize(&engine, &crop, &frame, &cfg, 800).unwrap();
        let b = recognize(&engine, &crop, &frame, &cfg, 800).unwrap();
        prop_assert_eq!(&a, &b);
        for word in &a {
            prop_assert!(word.bbox.right() <= w && word.bbox.bottom() <= h, "{:?} outside {}x{}", word.bbox, w, h);
        }
    }
}

#[test]
fn grid_removal_is_nearly_idempotent() {
    for seed in 0..4 {
        let (img, _) = generate(&FixtureSpec::new(80 + seed, HeaderStyle::Ruled, 3 + seed as usize)).unwrap();
        let bin = binarize_document(&to_grayscale(&img).unwrap()).unwrap();
        let once = remove_grid_lines(&bin).unwrap();
        let twice = remove_grid_lines(&once).unwrap();
        let extra = once.count_foreground() - twice.count_foreground();
        assert!(
            (extra as f64) < 0.001 * once.count_foreground() as f64,
            "seed {seed}: second pass removed {extra} of {} px",
            once.count_foreground()
        );
    }
}

#[test]
fn lattice_cells_are_sorted_by_position() {
    let cfg = TablesConfig::default();
    for seed in 0..4 {
        let (img, truth) = generate(&FixtureSpec::new(90 + seed, HeaderStyle::Ruled, 2 + seed as usize)).unwrap();
        let bin = binarize_document(&to_grayscale(&img).unwrap()).unwrap();
        let masks = extract_line_masks(&bin).unwrap();
        for region in [truth.header_grid.as_ref().unwrap().bbox, truth.product_grid.as_ref().unwrap().bbox] {
            let grid = detect_lattice(&masks, region.expand(8, img.width(), img.height()), &cfg).unwrap();
            for pair in grid.cells.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                assert!((a.row, a.col) < (b.row, b.col));
                if a.row == b.row {
                    assert!(a.bbox.center().x <= b.bbox.center().x);
                } else {
                    assert!(a.bbox.center().y <= b.bbox.center().y);
                }
            }
        }
    }
}
