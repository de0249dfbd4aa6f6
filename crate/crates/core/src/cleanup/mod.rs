//! Artifact removal and OCR-ready binarization.
//!
//! Everything here is a pure function of its inputs. Masks use 255 for
//! artifact (or ink) pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    adaptive_threshold, canny_edges, convex_hull, dilate, gaussian_blur, label_components, open,
    polygon_area, reconstruct, rgb_to_hsv, threshold_otsu, BBox, Kernel, PixelFormat, Point,
    Raster,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    PenMark,
    Barcode,
    GridLine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactMask {
    pub kind: ArtifactKind,
    pub mask: Raster,
    pub boxes: Vec<BBox>,
}

impl ArtifactMask {
    pub fn empty(kind: ArtifactKind, width: u32, height: u32) -> Self {
        ArtifactMask {
            kind,
            mask: Raster::filled(width, height, PixelFormat::Binary, 0),
            boxes: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn pixel_count(&self) -> usize {
        self.mask.count_foreground()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineMasks {
    pub vertical: Raster,
    pub horizontal: Raster,
    pub combined: Raster,
}

impl LineMasks {
    pub fn crop(&self, b: BBox) -> Result<LineMasks> {
        Ok(LineMasks {
            vertical: self.vertical.crop(b)?,
            horizontal: self.horizontal.crop(b)?,
            combined: self.combined.crop(b)?,
        })
    }
}

/// Tunables for this module. Defaults are the pinned values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanupConfig {
    /// Intensity standard deviation at or above which Otsu is used.
    pub contrast_cutoff: f64,
    pub adaptive_block: u32,
    pub adaptive_c: i32,
    pub pen_hue_min: f64,
    pub pen_hue_max: f64,
    pub pen_min_saturation: f64,
    pub pen_min_value: f64,
    pub pen_max_solidity: f64,
    pub pen_max_stroke_width: f64,
    /// Share of a seed component that must lie on dilated edges.
    pub pen_min_edge_support: f64,
    pub barcode_blur: u32,
    pub barcode_min_fill: f64,
    pub barcode_min_width: u32,
    pub barcode_min_height: u32,
    pub barcode_min_transitions: f64,
    /// Line kernels are `dimension / line_divisor` long.
    pub line_divisor: u32,
    pub line_min_length: u32,
}

impl Default for CleanupConfig {
    fn default() -> Self {
        CleanupConfig {
            contrast_cutoff: 55.0,
            adaptive_block: 15,
            adaptive_c: 10,
            pen_hue_min: 170.0,
            pen_hue_max: 260.0,
            pen_min_saturation: 0.25,
            pen_min_value: 0.20,
            pen_max_solidity: 0.5,
            pen_max_stroke_width: 4.0,
            pen_min_edge_support: 0.5,
            barcode_blur: 5,
            barcode_min_fill: 0.8,
            barcode_min_width: 60,
            barcode_min_height: 30,
            barcode_min_transitions: 0.15,
            line_divisor: 30,
            line_min_length: 11,
        }
    }
}

impl CleanupConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("cleanup: {m}")));
        if self.contrast_cutoff <= 0.0 {
            return bad("contrast_cutoff must be positive");
        }
        if self.adaptive_block < 3 || self.adaptive_block.is_multiple_of(2) {
            return bad("adaptive_block must be odd and >= 3");
        }
        if !(0.0..=360.0).contains(&self.pen_hue_min) || !(self.pen_hue_min..=360.0).contains(&self.pen_hue_max) {
            return bad("pen hue window must satisfy 0 <= min <= max <= 360");
        }
        for (name, v) in [
            ("pen_min_saturation", self.pen_min_saturation),
            ("pen_min_value", self.pen_min_value),
            ("pen_max_solidity", self.pen_max_solidity),
            ("pen_min_edge_support", self.pen_min_edge_support),
            ("barcode_min_fill", self.barcode_min_fill),
            ("barcode_min_transitions", self.barcode_min_transitions),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.pen_max_stroke_width <= 0.0 || self.barcode_blur.is_multiple_of(2) || self.line_divisor == 0 {
            return bad("stroke width, odd blur size and line divisor must be positive");
        }
        if self.line_min_length < 3 {
            return bad("line_min_length must be >= 3");
        }
        Ok(())
    }
}

/// Population standard deviation of the intensities.
pub fn intensity_std(gray: &Raster) -> f64 {
    let n = gray.data().len().max(1) as f64;
    let mean = gray.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = gray.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinarizeMethod {
    Otsu,
    Adaptive,
}

/// Ink-foreground binarization (text = 255) with the default settings.
pub fn binarize_document(gray: &Raster) -> Result<Raster> {
    Ok(binarize_document_with(gray, &CleanupConfig::default())?.0)
}

/// Otsu when the global contrast reaches `contrast_cutoff`, adaptive mean
/// thresholding otherwise; the result is inverted so ink is foreground.
pub fn binarize_document_with(gray: &Raster, cfg: &CleanupConfig) -> Result<(Raster, BinarizeMethod)> {
    gray.expect_format(PixelFormat::Gray8, "binarize_document")?;
    if intensity_std(gray) >= cfg.contrast_cutoff {
        let (bin, _) = threshold_otsu(gray)?;
        Ok((bin.invert(), BinarizeMethod::Otsu))
    } else {
        let bin = adaptive_threshold(gray, cfg.adaptive_block, cfg.adaptive_c)?;
        Ok((bin.invert(), BinarizeMethod::Adaptive))
    }
}

fn mask_from_boxes(kind: ArtifactKind, width: u32, height: u32, boxes: Vec<BBox>) -> ArtifactMask {
    let mut mask = Raster::filled(width, height, PixelFormat::Binary, 0);
    for b in &boxes {
        for y in b.y..b.bottom() {
            for x in b.x..b.right() {
                mask.set(x, y, 255);
            }
        }
    }
    ArtifactMask { kind, mask, boxes }
}

pub fn detect_pen_marks(img: &Raster) -> Result<ArtifactMask> {
    detect_pen_marks_with(img, &CleanupConfig::default())
}

/// Blue/cyan ink strokes.
///
/// Seeds are pixels inside the hue window with enough saturation and value.
/// A seed component is kept when it is thin or irregular (low solidity or
/// low area-to-contour ratio) and lies mostly on the dilated Canny edges of
/// the seed map; filled blue shapes fail both tests. The kept strokes are
/// grown by one pixel to catch blended fringes, never into dark neutral ink.
pub fn detect_pen_marks_with(img: &Raster, cfg: &CleanupConfig) -> Result<ArtifactMask> {
    img.expect_format(PixelFormat::Rgb8, "detect_pen_marks")?;
    let (w, h) = (img.width(), img.height());
    let hsv: Vec<_> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| rgb_to_hsv(img.get_rgb(x, y)))
        .collect();
    let seed_data: Vec<u8> = hsv
        .iter()
        .map(|p| {
            let hit = p.h >= cfg.pen_hue_min
                && p.h <= cfg.pen_hue_max
                && p.s >= cfg.pen_min_saturation
                && p.v >= cfg.pen_min_value;
            if hit { 255 } else { 0 }
        })
        .collect();
    let seed = Raster::new(w, h, PixelFormat::Binary, seed_data)?;
    if seed.count_foreground() == 0 {
        return Ok(ArtifactMask::empty(ArtifactKind::PenMark, w, h));
    }
    let edges = canny_edges(&seed.as_gray(), 100.0, 300.0)?;
    let support = dilate(&edges, &Kernel::rect(3, 3)?, 2)?;
    let labeling = label_components(&seed)?;
    let mut on_edge = vec![0u64; labeling.components.len() + 1];
    for (i, &l) in labeling.labels.iter().enumerate() {
        if l != 0 && support.data()[i] != 0 {
            on_edge[l as usize] += 1;
        }
    }
    let mut keep = vec![false; labeling.components.len() + 1];
    let mut boxes = Vec::new();
    for c in &labeling.components {
        let pts: Vec<Point> = c.boundary.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();
        let hull_area = convex_hull(&pts).map(|hull| polygon_area(&hull)).unwrap_or(0.0);
        // Pixel-center hulls under-count by about half a pixel per side.
        let hull_area = hull_area + c.boundary.len() as f64 / 2.0 + 1.0;
        let solidity = c.area as f64 / hull_area;
        let stroke = c.area as f64 / c.boundary.len().max(1) as f64;
        let thin = solidity < cfg.pen_max_solidity || stroke < cfg.pen_max_stroke_width;
        let supported = on_edge[c.label as usize] as f64 >= cfg.pen_min_edge_support * c.area as f64;
        if thin && supported {
            keep[c.label as usize] = true;
            boxes.push(c.bbox);
        }
    }
    if boxes.is_empty() {
        return Ok(ArtifactMask::empty(ArtifactKind::PenMark, w, h));
    }
    let strokes = Raster::new(
        w,
        h,
        PixelFormat::Binary,
        labeling
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| if keep[l as usize] && l != 0 && support.data()[i] != 0 { 255 } else { 0 })
            .collect(),
    )?;
    let grown = dilate(&strokes, &Kernel::rect(3, 3)?, 1)?;
    let data = grown
        .data()
        .iter()
        .zip(&hsv)
        .map(|(&g, p)| {
            let dark_neutral = p.s < cfg.pen_min_saturation && p.v < 0.6;
            if g != 0 && !dark_neutral { 255 } else { 0 }
        })
        .collect();
    let mask = Raster::new(w, h, PixelFormat::Binary, data)?;
    let boxes = boxes
        .into_iter()
        .map(|b| b.expand(1, w, h))
        .collect();
    Ok(ArtifactMask {
        kind: ArtifactKind::PenMark,
        mask,
        boxes,
    })
}

pub fn detect_barcodes(gray: &Raster) -> Result<ArtifactMask> {
    detect_barcodes_with(gray, &CleanupConfig::default())
}

/// Dense stripe blocks: blur, binarize, merge stripes horizontally with a
/// 9-wide single-row kernel, then keep slabs that are full, wide, tall and
/// show many black/white alternations per row before merging.
pub fn detect_barcodes_with(gray: &Raster, cfg: &CleanupConfig) -> Result<ArtifactMask> {
    gray.expect_format(PixelFormat::Gray8, "detect_barcodes")?;
    let (w, h) = (gray.width(), gray.height());
    let blurred = gaussian_blur(gray, cfg.barcode_blur, 0.0)?;
    let (bin, _) = binarize_document_with(&blurred, cfg)?;
    const MERGE: u32 = 9;
    let slabs = dilate(&bin, &Kernel::rect(MERGE, 1)?, 1)?;
    let labeling = label_components(&slabs)?;
    let mut boxes = Vec::new();
    for c in &labeling.components {
        let b = c.bbox;
        if b.w < cfg.barcode_min_width || b.h < cfg.barcode_min_height {
            continue;
        }
        if (c.area as f64) < cfg.barcode_min_fill * b.area() as f64 {
            continue;
        }
        let mut transitions = 0u64;
        for y in b.y..b.bottom() {
            let row = bin.row(y);
            transitions += (b.x + 1..b.right())
                .filter(|&x| row[x as usize] != row[x as usize - 1])
                .count() as u64;
        }
        let density = transitions as f64 / (b.w as f64 * b.h as f64);
        if density < cfg.barcode_min_transitions {
            continue;
        }
        // Undo the horizontal growth of the merge kernel.
        let shrink = (MERGE / 2).min(b.w / 4);
        boxes.push(BBox::new(b.x + shrink, b.y, b.w - 2 * shrink, b.h));
    }
    Ok(mask_from_boxes(ArtifactKind::Barcode, w, h, boxes))
}

/// Sets masked pixels to white on every channel; other pixels are untouched.
pub fn remove_regions(img: &Raster, mask: &ArtifactMask) -> Result<Raster> {
    if mask.mask.width() != img.width() || mask.mask.height() != img.height() {
        return Err(Error::Parameter(format!(
            "mask {}x{} does not match image {}x{}",
            mask.mask.width(),
            mask.mask.height(),
            img.width(),
            img.height()
        )));
    }
    let c = img.format().channels();
    let mut out = img.clone();
    let m = mask.mask.data();
    for (px, &flag) in out.data_mut().chunks_exact_mut(c).zip(m) {
        if flag != 0 {
            px.fill(255);
        }
    }
    Ok(out)
}

fn line_length(dim: u32, cfg: &CleanupConfig) -> u32 {
    (dim / cfg.line_divisor).max(cfg.line_min_length) | 1
}

pub fn extract_line_masks(binary: &Raster) -> Result<LineMasks> {
    extract_line_masks_with(binary, &CleanupConfig::default())
}

/// Openings with a `1 x (w/30)` and a `(h/30) x 1` line kernel (at least 11
/// long, rounded up to odd).
pub fn extract_line_masks_with(binary: &Raster, cfg: &CleanupConfig) -> Result<LineMasks> {
    binary.expect_format(PixelFormat::Binary, "extract_line_masks")?;
    let horizontal = open(binary, &Kernel::rect(line_length(binary.width(), cfg), 1)?)?;
    let vertical = open(binary, &Kernel::rect(1, line_length(binary.height(), cfg))?)?;
    let combined = horizontal.or(&vertical)?;
    Ok(LineMasks {
        vertical,
        horizontal,
        combined,
    })
}

pub fn remove_grid_lines(binary: &Raster) -> Result<Raster> {
    remove_grid_lines_with_masks(binary, &extract_line_masks(binary)?)
}

/// Subtracts the line mask, then drops residue too thin to hold a 3x3
/// ellipse. The opening is applied by reconstruction so that glyphs which
/// survive it come back with their exact shape.
pub fn remove_grid_lines_with_masks(binary: &Raster, masks: &LineMasks) -> Result<Raster> {
    let rest = binary.and_not(&masks.combined)?;
    let opened = open(&rest, &Kernel::ellipse(3, 3)?)?;
    reconstruct(&opened, &rest)
}

/// The combined line mask as an artifact for reporting.
pub fn grid_artifact(masks: &LineMasks) -> Result<ArtifactMask> {
    let labeling = label_components(&masks.combined)?;
    Ok(ArtifactMask {
        kind: ArtifactKind::GridLine,
        mask: masks.combined.clone(),
        boxes: labeling.components.iter().map(|c| c.bbox).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{fill_rect, to_grayscale};
    use crate::synthfix::{generate, FixtureSpec, HeaderStyle};

    #[test]
    fn binarize_paths() {
        let flat = Raster::filled(40, 40, PixelFormat::Gray8, 200);
        let (b, m) = binarize_document_with(&flat, &CleanupConfig::default()).unwrap();
        assert_eq!(m, BinarizeMethod::Adaptive);
        assert_eq!(b.count_foreground(), 0);
        let half = Raster::from_fn(40, 40, PixelFormat::Gray8, |x, _| if x < 20 { 10 } else { 250 });
        let (b, m) = binarize_document_with(&half, &CleanupConfig::default()).unwrap();
        assert_eq!(m, BinarizeMethod::Otsu);
        assert!(b.is_foreground(0, 0) && !b.is_foreground(39, 0));
    }

    #[test]
    fn gray_document_has_no_pen_marks() {
        let (img, _) = generate(&FixtureSpec::new(2, HeaderStyle::Ruled, 3)).unwrap();
        let gray_rgb = to_grayscale(&img).unwrap().to_rgb();
        assert!(detect_pen_marks(&gray_rgb).unwrap().is_empty());
    }

    #[test]
    fn scribbles_detected_and_logo_ignored() {
        let mut spec = FixtureSpec::new(4, HeaderStyle::FreeText, 2);
        spec.distortion.scribbles = 2;
        let (mut img, truth) = generate(&spec).unwrap();
        fill_rect(&mut img, BBox::new(700, 150, 120, 70), [30, 80, 200]);
        let found = detect_pen_marks(&img).unwrap();
        let hit = found.mask.count_overlap(&truth.scribble_mask) as f64;
        assert!(hit / truth.scribble_mask.count_foreground() as f64 >= 0.95);
        assert_eq!(found.mask.count_overlap(&truth.ink_mask), 0);
        for y in 160..210 {
            assert!(!found.mask.is_foreground(760, y));
        }
    }

    #[test]
    fn barcode_found_and_text_ignored() {
        let mut spec = FixtureSpec::new(6, HeaderStyle::BorderlessAligned, 3);
        spec.distortion.barcode = true;
        let (img, truth) = generate(&spec).unwrap();
        let found = detect_barcodes(&to_grayscale(&img).unwrap()).unwrap();
        assert_eq!(found.boxes.len(), 1, "{:?}", found.boxes);
        assert!(found.boxes[0].iou(&truth.barcode_box.unwrap()) >= 0.8);
        let (plain, _) = generate(&FixtureSpec::new(6, HeaderStyle::FreeText, 3)).unwrap();
        assert!(detect_barcodes(&to_grayscale(&plain).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn remove_regions_is_local() {
        let img = Raster::from_fn_rgb(10, 10, |x, y| [x as u8, y as u8, 3]);
        let mut m = ArtifactMask::empty(ArtifactKind::Barcode, 10, 10);
        assert_eq!(remove_regions(&img, &m).unwrap(), img);
        m.mask.set(2, 3, 255);
        let out = remove_regions(&img, &m).unwrap();
        assert_eq!(out.get_rgb(2, 3), [255, 255, 255]);
        for y in 0..10 {
            for x in 0..10 {
                if (x, y) != (2, 3) {
                    assert_eq!(out.get_rgb(x, y), img.get_rgb(x, y));
                }
            }
        }
        let small = ArtifactMask::empty(ArtifactKind::Barcode, 5, 5);
        assert!(remove_regions(&img, &small).is_err());
    }

    #[test]
    fn grid_removed_text_kept() {
        let (img, truth) = generate(&FixtureSpec::new(8, HeaderStyle::Ruled, 5)).unwrap();
        let bin = binarize_document(&to_grayscale(&img).unwrap()).unwrap();
        let masks = extract_line_masks(&bin).unwrap();
        assert_eq!(masks.combined, masks.horizontal.or(&masks.vertical).unwrap());
        let clean = remove_grid_lines_with_masks(&bin, &masks).unwrap();
        let ink = truth.ink_mask.count_foreground() as f64;
        let grid = truth.grid_mask.count_foreground() as f64;
        assert!(clean.count_overlap(&truth.ink_mask) as f64 / ink >= 0.98);
        assert!(clean.count_overlap(&truth.grid_mask) as f64 / grid <= 0.05);
        let again = remove_grid_lines(&clean).unwrap();
        let lost = clean.count_foreground() - again.count_foreground();
        assert!((lost as f64) < 0.001 * clean.count_foreground() as f64);
    }

    #[test]
    fn blank_page_has_empty_masks() {
        let blank = Raster::filled(100, 80, PixelFormat::Binary, 0);
        let m = extract_line_masks(&blank).unwrap();
        assert_eq!(m.combined.count_foreground(), 0);
        assert!(detect_barcodes(&Raster::filled(100, 80, PixelFormat::Gray8, 255)).unwrap().is_empty());
    }
}
