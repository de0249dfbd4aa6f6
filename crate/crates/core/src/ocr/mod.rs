//! OCR engine contract.
//!
//! Engines receive a raster plus a [`Frame`] describing where that raster sits
//! in the original input image. Real engines only look at pixels; the mock
//! engine only looks at the frame.

mod external;
mod mock;
mod tsv;

pub use external::{ExternalEngine, OCR_BIN_ENV};
pub use mock::{mock_recognize, MockEngine};
pub use tsv::{parse_engine_tsv, serialize_tsv, TsvParse, TSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::raster::{BBox, Point, Raster};

/// Smallest image side accepted by [`recognize`].
pub const MIN_OCR_SIDE: u32 = 16;

/// One recognized token. `bbox` is in pixels of the submitted image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrWord {
    pub text: String,
    pub bbox: BBox,
    /// 0 to 100.
    pub confidence: f32,
    pub block_id: u32,
    pub line_id: u32,
    pub word_id: u32,
}

impl OcrWord {
    pub fn ids(&self) -> (u32, u32, u32) {
        (self.block_id, self.line_id, self.word_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentationMode {
    /// Fully automatic page segmentation (`--psm 3`).
    Auto,
    /// A single uniform block of text (`--psm 6`).
    #[default]
    UniformBlock,
    /// A single text line (`--psm 7`).
    SingleLine,
    /// Sparse text in no particular order (`--psm 11`).
    Sparse,
}

impl SegmentationMode {
    pub fn psm(self) -> u8 {
        match self {
            SegmentationMode::Auto => 3,
            SegmentationMode::UniformBlock => 6,
            SegmentationMode::SingleLine => 7,
            SegmentationMode::Sparse => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMode {
    Legacy,
    NeuralOnly,
    Combined,
    /// The engine's default recognizer (`--oem 3`), the neural one in current builds.
    #[default]
    Neural,
}

impl EngineMode {
    pub fn oem(self) -> u8 {
        match self {
            EngineMode::Legacy => 0,
            EngineMode::NeuralOnly => 1,
            EngineMode::Combined => 2,
            EngineMode::Neural => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcrConfig {
    pub segmentation_mode: SegmentationMode,
    pub engine_mode: EngineMode,
    pub language: String,
}

impl Default for OcrConfig {
    fn default() -> Self {
        OcrConfig {
            segmentation_mode: SegmentationMode::UniformBlock,
            engine_mode: EngineMode::Neural,
            language: "eng".into(),
        }
    }
}

impl OcrConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = !self.language.is_empty()
            && self
                .language
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '+');
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid OCR language tag {:?}", self.language)))
        }
    }
}

/// Placement of a submitted raster inside the original input image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    /// Maps submitted-image pixels to input-image pixels.
    pub to_source: Homography,
    pub source_width: u32,
    pub source_height: u32,
}

impl Frame {
    pub fn identity(source_width: u32, source_height: u32) -> Self {
        Frame {
            to_source: Homography::IDENTITY,
            source_width,
            source_height,
        }
    }

    /// Frame of the sub-image whose top-left corner is at `(x, y)` here.
    pub fn offset(&self, x: u32, y: u32) -> Frame {
        Frame {
            to_source: self
                .to_source
                .after(&Homography::translation(x as f64, y as f64)),
            ..*self
        }
    }

    /// Frame of this image after being scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Frame {
        Frame {
            to_source: self.to_source.after(&Homography::scale(1.0 / factor)),
            ..*self
        }
    }

    /// Frame of an image derived from this one by `h` (this image to the new one).
    pub fn through(&self, h: &Homography) -> Result<Frame> {
        Ok(Frame {
            to_source: self.to_source.after(&h.inverse()?),
            ..*self
        })
    }

    pub fn map_to_source(&self, p: Point) -> Point {
        self.to_source.apply(p)
    }
}

pub trait OcrEngine: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the engine reads pixels. Engines that do not are handed the
    /// image at its native size.
    fn needs_pixels(&self) -> bool {
        true
    }

    /// Recognizes `img`; boxes are in `img` pixels.
    fn recognize_image(&self, img: &Raster, frame: &Frame, cfg: &OcrConfig) -> Result<Vec<OcrWord>>;
}

/// Integer upscale factor that brings `width` to at least `min_width`.
pub fn upscale_factor(width: u32, min_width: u32) -> u32 {
    if width >= min_width || width == 0 {
        1
    } else {
        min_width.div_ceil(width)
    }
}

/// Runs `engine` on `img` with the common pre- and post-processing: images
/// narrower than `min_width` are upscaled by an integer factor (boxes scaled
/// back), words without text are dropped, boxes are clipped to the image and
/// the result is sorted by `(block_id, line_id, word_id)`.
pub fn recognize(
    engine: &dyn OcrEngine,
    img: &Raster,
    frame: &Frame,
    cfg: &OcrConfig,
    min_width: u32,
) -> Result<Vec<OcrWord>> {
    if img.width() < MIN_OCR_SIDE || img.height() < MIN_OCR_SIDE {
        return Err(Error::Parameter(format!(
            "OCR input {}x{} is below the {MIN_OCR_SIDE}px minimum side",
            img.width(),
            img.height()
        )));
    }
    let factor = if engine.needs_pixels() {
        upscale_factor(img.width(), min_width)
    } else {
        1
    };
    let mut words = if factor > 1 {
        let up = img.upscale(factor);
        engine
            .recognize_image(&up, &frame.scaled(factor as f64), cfg)?
            .into_iter()
            .map(|mut w| {
                let x0 = w.bbox.x / factor;
                let y0 = w.bbox.y / factor;
                let x1 = w.bbox.right().div_ceil(factor);
                let y1 = w.bbox.bottom().div_ceil(factor);
                w.bbox = BBox::new(x0, y0, x1 - x0, y1 - y0);
                w
            })
            .collect()
    } else {
        engine.recognize_image(img, frame, cfg)?
    };
    words.retain(|w| !w.text.trim().is_empty());
    let mut clipped: Vec<OcrWord> = words
        .into_iter()
        .filter_map(|mut w| {
            w.bbox = w.bbox.clip(img.width(), img.height())?;
            w.confidence = w.confidence.clamp(0.0, 100.0);
            Some(w)
        })
        .collect();
    clipped.sort_by_key(OcrWord::ids);
    Ok(clipped)
}
