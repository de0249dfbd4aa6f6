use std::sync::Arc;

use super::{Frame, OcrConfig, OcrEngine, OcrWord};
use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::raster::{BBox, Point, Raster};
use crate::synthfix::GroundTruth;

/// Mock confidence reported for every word.
const MOCK_CONFIDENCE: f32 = 95.0;

/// Words of `truth` whose box center lies in `region` (page coordinates),
/// with boxes translated to region coordinates.
pub fn mock_recognize(truth: &GroundTruth, region: BBox) -> Result<Vec<OcrWord>> {
    if region.right() > truth.page_width || region.bottom() > truth.page_height {
        return Err(Error::Parameter(format!(
            "region {region:?} exceeds the {}x{} fixture page",
            truth.page_width, truth.page_height
        )));
    }
    let mut out: Vec<OcrWord> = truth
        .words
        .iter()
        .filter(|w| region.contains_point(w.bbox.center()))
        .filter_map(|w| {
            let clipped = w.bbox.intersection(&region)?;
            Some(OcrWord {
                bbox: BBox::new(clipped.x - region.x, clipped.y - region.y, clipped.w, clipped.h),
                confidence: MOCK_CONFIDENCE,
                ..w.clone()
            })
        })
        .collect();
    out.sort_by_key(OcrWord::ids);
    Ok(out)
}

/// Engine that answers from a fixture sidecar instead of reading pixels.
///
/// The submitted image is located on the fixture page through its [`Frame`]
/// and the fixture's applied homography, so crops, padding and rectification
/// upstream are all accounted for.
#[derive(Debug, Clone)]
pub struct MockEngine {
    truth: Arc<GroundTruth>,
    page_to_image: Homography,
}

impl MockEngine {
    pub fn new(truth: GroundTruth) -> Self {
        let page_to_image = truth.applied_homography;
        MockEngine {
            truth: Arc::new(truth),
            page_to_image,
        }
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }
}

/// Bounding box (exclusive right/bottom) of a pixel box pushed through `h`,
/// with pixel centers at integer coordinates.
fn map_box(h: &Homography, b: &BBox) -> (f64, f64, f64, f64) {
    let (x0, y0) = (b.x as f64 - 0.5, b.y as f64 - 0.5);
    let (x1, y1) = (b.right() as f64 - 0.5, b.bottom() as f64 - 0.5);
    let pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)].map(|(x, y)| h.apply(Point::new(x, y)));
    let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&Point) -> f64| {
        pts.iter().map(sel).fold(init, f)
    };
    (
        fold(f64::min, f64::INFINITY, |p| p.x) + 0.5,
        fold(f64::min, f64::INFINITY, |p| p.y) + 0.5,
        fold(f64::max, f64::NEG_INFINITY, |p| p.x) + 0.5,
        fold(f64::max, f64::NEG_INFINITY, |p| p.y) + 0.5,
    )
}

impl OcrEngine for MockEngine {
    fn name(&self) -> &str {
        "mock"
    }

    fn needs_pixels(&self) -> bool {
        false
    }

    fn recognize_image(&self, img: &Raster, frame: &Frame, _cfg: &OcrConfig) -> Result<Vec<OcrWord>> {
        if frame.source_width != self.truth.image_width || frame.source_height != self.truth.image_height {
            return Err(Error::Parameter(format!(
                "fixture sidecar is for a {}x{} image, input is {}x{}",
                self.truth.image_width, self.truth.image_height, frame.source_width, frame.source_height
            )));
        }
        // page -> input image -> submitted image
        let to_submitted = frame.to_source.inverse()?.after(&self.page_to_image);
        let (w, h) = (img.width() as f64, img.height() as f64);
        const EPS: f64 = 1e-6;
        let mut out = Vec::new();
        for word in &self.truth.words {
            let c = word.bbox.center();
            let c = to_submitted.apply(Point::new(c.x - 0.5, c.y - 0.5));
            let (cx, cy) = (c.x + 0.5, c.y + 0.5);
            if !(cx >= 0.0 && cy >= 0.0 && cx < w && cy < h) {
                continue;
            }
            let (x0, y0, x1, y1) = map_box(&to_submitted, &word.bbox);
            let x0 = (x0 + EPS).floor().clamp(0.0, w) as u32;
            let y0 = (y0 + EPS).floor().clamp(0.0, h) as u32;
            let x1 = (x1 - EPS).ceil().clamp(0.0, w) as u32;
            let y1 = (y1 - EPS).ceil().clamp(0.0, h) as u32;
            if x1 <= x0 || y1 <= y0 {
                continue;
            }
            out.push(OcrWord {
                bbox: BBox::new(x0, y0, x1 - x0, y1 - y0),
                confidence: MOCK_CONFIDENCE,
                ..word.clone()
            });
        }
        out.sort_by_key(OcrWord::ids);
        Ok(out)
    }
}
