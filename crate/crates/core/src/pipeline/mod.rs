//! Stage orchestration, configuration, JSON output, stage dumps and batch runs.
//!
//! Every stage after decoding degrades instead of aborting: a missing
//! document outline skips the warp, a missing table header turns the whole
//! page into row-wise key/value text, a failed product table leaves the item
//! list empty. Each fallback is named in [`Diagnostics::degraded_stages`].

mod dump;
mod output;

pub use dump::{StageDumper, STAGE_NAMES};
pub use output::{
    AnchorRecord, Diagnostics, GeometryRecord, InvoiceExtraction, RemovalRecord, SectionsRecord, Source, StageNote,
    WarpOutcome, SCHEMA_JSON, SCHEMA_VERSION,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::cleanup::{
    binarize_document_with, detect_barcodes_with, detect_pen_marks_with, extract_line_masks_with,
    remove_grid_lines_with_masks, remove_regions, ArtifactMask, CleanupConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{crop_edges, detect_document_quad, pad_border, rectify, Homography, Quad};
use crate::layout::{find_anchors, split_sections, LayoutConfig, Lexicon};
use crate::ocr::{ExternalEngine, Frame, MockEngine, OcrConfig, OcrEngine};
use crate::raster::{equalize_histogram, read_image, to_grayscale, PixelFormat, Raster};
use crate::synthfix::GroundTruth;
use crate::tables::{
    extract_header_table, extract_product_rows, extract_rowwise_kv, CellReader, HeaderInputs, TablesConfig,
};

/// A detected outline this close (in pixels, per corner) to the image
/// corners is treated as already upright and not resampled.
const UPRIGHT_TOLERANCE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub crop_margin: u32,
    pub pad_margin: u32,
    pub min_doc_area: f64,
    pub min_ocr_width: u32,
    pub fuzzy_threshold: f64,
    pub cluster_factor: f64,
    pub adjacency_factor: f64,
    pub remove_barcodes: bool,
    pub keep_stage_dumps: bool,
    pub debug_dir: Option<PathBuf>,
    pub lexicon_path: Option<PathBuf>,
    /// Recognizer binary; the `INVEXTRACT_OCR_BIN` variable takes precedence.
    pub engine_path: Option<PathBuf>,
    /// Adds wall-clock stage timings to the diagnostics (output is then no
    /// longer byte-stable across runs).
    pub record_timings: bool,
    pub ocr: OcrConfig,
    pub cleanup: CleanupConfig,
    pub tables: TablesConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            crop_margin: 10,
            pad_margin: 4,
            min_doc_area: 35000.0,
            min_ocr_width: 800,
            fuzzy_threshold: 0.8,
            cluster_factor: 2.5,
            adjacency_factor: 1.5,
            remove_barcodes: true,
            keep_stage_dumps: false,
            debug_dir: None,
            lexicon_path: None,
            engine_path: None,
            record_timings: false,
            ocr: OcrConfig::default(),
            cleanup: CleanupConfig::default(),
            tables: TablesConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn layout(&self) -> LayoutConfig {
        LayoutConfig {
            fuzzy_threshold: self.fuzzy_threshold,
            cluster_factor: self.cluster_factor,
            adjacency_factor: self.adjacency_factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_doc_area <= 0.0 || self.min_ocr_width == 0 {
            return Err(Error::Config("min_doc_area and min_ocr_width must be positive".into()));
        }
        if self.keep_stage_dumps && self.debug_dir.is_none() {
            return Err(Error::Config("keep_stage_dumps needs debug_dir".into()));
        }
        self.layout().validate()?;
        self.ocr.validate()?;
        self.cleanup.validate()?;
        self.tables.validate()
    }

    /// Recognizer binary for the subprocess engine.
    pub fn external_engine(&self) -> Result<ExternalEngine> {
        ExternalEngine::resolve(self.engine_path.as_deref())
    }
}

/// Engine selection for the CLI and batch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    /// Reads the `<image>.gt.json` sidecar next to each image.
    Mock,
    External,
}

impl EngineChoice {
    pub fn build(self, image: &Path, cfg: &PipelineConfig) -> Result<Box<dyn OcrEngine>> {
        Ok(match self {
            EngineChoice::Mock => Box::new(MockEngine::new(GroundTruth::read_sidecar(image)?)),
            EngineChoice::External => Box::new(cfg.external_engine()?),
        })
    }
}

#[derive(Debug)]
pub struct Pipeline {
    cfg: PipelineConfig,
    lexicon: Lexicon,
}

/// Result of one batch entry.
#[derive(Debug)]
pub struct BatchOutcome {
    pub input: PathBuf,
    pub output: PathBuf,
    pub result: Result<InvoiceExtraction>,
}

struct Timer {
    on: bool,
    at: Instant,
}

impl Timer {
    fn lap(&mut self, diag: &mut Diagnostics, stage: &str) {
        if self.on {
            let now = Instant::now();
            diag.timings_ms
                .insert(stage.into(), (now - self.at).as_secs_f64() * 1000.0);
            self.at = now;
        }
    }
}

/// Recoverable errors become a degraded-stage note; engine errors abort.
fn soft<T>(r: Result<T>, diag: &mut Diagnostics, stage: &str) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ Error::Engine { .. }) => Err(e),
        Err(e @ Error::Io(_)) => Err(e),
        Err(e) => {
            diag.degrade(stage, e.to_string());
            Ok(None)
        }
    }
}

fn record_removal(diag: &mut Diagnostics, mask: &ArtifactMask) {
    if !mask.is_empty() {
        diag.removed.push(RemovalRecord {
            kind: mask.kind,
            pixels: mask.pixel_count(),
            boxes: mask.boxes.clone(),
        });
    }
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let lexicon = match &cfg.lexicon_path {
            Some(p) => Lexicon::load(p)?,
            None => Lexicon::default(),
        };
        Ok(Pipeline { cfg, lexicon })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Reads and processes one image file.
    pub fn run(&self, image_path: &Path, engine: &dyn OcrEngine) -> Result<InvoiceExtraction> {
        let dumper = StageDumper::new(self.dump_dir().as_deref())?;
        let img = read_image(image_path)?;
        self.run_image(&img, &image_path.display().to_string(), engine, &dumper)
    }

    fn dump_dir(&self) -> Option<PathBuf> {
        self.cfg.debug_dir.clone().filter(|_| self.cfg.keep_stage_dumps)
    }

    /// Processes a decoded image; `path` is only recorded in the output.
    pub fn run_image(
        &self,
        input: &Raster,
        path: &str,
        engine: &dyn OcrEngine,
        dumper: &StageDumper,
    ) -> Result<InvoiceExtraction> {
        let cfg = &self.cfg;
        let mut diag = Diagnostics::default();
        let mut timer = Timer {
            on: cfg.record_timings,
            at: Instant::now(),
        };
        let (in_w, in_h) = (input.width(), input.height());
        let color = match input.format() {
            PixelFormat::Rgb8 => input.clone(),
            _ => input.to_rgb(),
        };
        let mut frame = Frame::identity(in_w, in_h);

        // Geometry.
        let cropped = match soft(crop_edges(&color, cfg.crop_margin), &mut diag, "crop")? {
            Some(c) => {
                frame = frame.offset(cfg.crop_margin, cfg.crop_margin);
                c
            }
            None => color,
        };
        dumper.put("01_cropped", &cropped)?;
        let gray = to_grayscale(&cropped)?;
        dumper.put("02_gray", &equalize_histogram(&gray)?)?;
        // Equalizing first would spread a lighting gradient across the whole
        // range and let Otsu split the page itself, so the outline is found on
        // plain luma.
        let quad = soft(detect_document_quad(&gray, cfg.min_doc_area), &mut diag, "document-quad")?;
        dumper.put("03_quad_overlay", &dump::quad_overlay(&cropped, quad.as_ref()))?;
        let upright = Quad::rect(cropped.width() as f64, cropped.height() as f64);
        diag.geometry.quad = quad.map(|q| q.corners());
        let warped = match quad {
            Some(q) if q.max_corner_error(&upright) <= UPRIGHT_TOLERANCE => {
                diag.geometry.warp = WarpOutcome::SkippedUpright;
                cropped
            }
            Some(q) => match soft(rectify(&cropped, &q), &mut diag, "warp")? {
                Some((w, hom)) => {
                    frame = frame.through(&hom)?;
                    diag.geometry.warp = WarpOutcome::Applied;
                    w
                }
                None => cropped,
            },
            None => cropped,
        };
        dumper.put("04_warped", &warped)?;
        let page = pad_border(&warped, cfg.pad_margin, 255);
        if cfg.pad_margin > 0 {
            frame = frame.through(&Homography::translation(cfg.pad_margin as f64, cfg.pad_margin as f64))?;
        }
        let (pw, ph) = (page.width(), page.height());
        timer.lap(&mut diag, "geometry");

        // Artifact removal.
        let pen = soft(detect_pen_marks_with(&page, &cfg.cleanup), &mut diag, "pen-marks")?;
        let page = match &pen {
            Some(m) => {
                record_removal(&mut diag, m);
                remove_regions(&page, m)?
            }
            None => page,
        };
        dumper.put("05_penmask", &dump::mask_or_blank(pen.as_ref(), pw, ph))?;
        let mut page_gray = to_grayscale(&page)?;
        let barcodes = if cfg.remove_barcodes {
            soft(detect_barcodes_with(&page_gray, &cfg.cleanup), &mut diag, "barcodes")?
        } else {
            None
        };
        if let Some(m) = &barcodes {
            record_removal(&mut diag, m);
            page_gray = remove_regions(&page_gray, m)?;
        }
        dumper.put("06_barcodemask", &dump::mask_or_blank(barcodes.as_ref(), pw, ph))?;
        timer.lap(&mut diag, "artifacts");

        // Binarization and rules.
        let (binary, method) = binarize_document_with(&page_gray, &cfg.cleanup)?;
        diag.binarization = Some(method);
        dumper.put("07_binary", &binary)?;
        let masks = extract_line_masks_with(&binary, &cfg.cleanup)?;
        dumper.put("08_vlines", &masks.vertical)?;
        dumper.put("09_hlines", &masks.horizontal)?;
        let clean = remove_grid_lines_with_masks(&binary, &masks)?;
        dumper.put("10_lines_removed", &clean)?;
        let grid_pixels = masks.combined.count_foreground();
        if grid_pixels > 0 {
            diag.removed.push(RemovalRecord {
                kind: crate::cleanup::ArtifactKind::GridLine,
                pixels: grid_pixels,
                boxes: Vec::new(),
            });
        }
        timer.lap(&mut diag, "binarize");

        // Layout.
        let reader = CellReader {
            engine,
            page: &clean,
            frame,
            cfg: &cfg.ocr,
            min_width: cfg.min_ocr_width,
        };
        let words = soft(reader.words(clean.bounds()), &mut diag, "page-ocr")?.unwrap_or_default();
        let anchors = find_anchors(&words, &self.lexicon, &cfg.layout());
        diag.anchors = anchors.iter().map(AnchorRecord::from).collect();
        let sections = soft(split_sections(pw, ph, &anchors, &cfg.layout()), &mut diag, "sections")?;
        dumper.put("11_sections_overlay", &dump::sections_overlay(&clean, sections.as_ref()))?;
        timer.lap(&mut diag, "layout");

        let mut header = IndexMap::new();
        let mut line_items = Vec::new();
        let mut row_boxes = Vec::new();
        let mut add_pairs = |pairs: Vec<(String, String)>, diag: &mut Diagnostics| {
            for (k, v) in pairs {
                if header.contains_key(&k) {
                    diag.notes.push(format!("duplicate header key {k:?} ignored"));
                } else {
                    header.insert(k, v);
                }
            }
        };
        match sections {
            None => {
                let kv = extract_rowwise_kv(&words, &self.lexicon, cfg.fuzzy_threshold);
                diag.notes.push("no table header found; whole page read as key/value lines".into());
                diag.discarded_lines = kv.discarded;
                add_pairs(kv.pairs, &mut diag);
            }
            Some(s) => {
                diag.sections = Some(SectionsRecord {
                    header: s.header_region,
                    product: s.product_region,
                });
                let inputs = HeaderInputs {
                    masks: &masks,
                    clean: &clean,
                    words: &words,
                    lexicon: &self.lexicon,
                    fuzzy_threshold: cfg.fuzzy_threshold,
                };
                if let Some(h) = soft(
                    extract_header_table(s.header_region, &inputs, &reader, &cfg.tables),
                    &mut diag,
                    "header-table",
                )? {
                    diag.header_layer = Some(h.layer);
                    diag.header_fallbacks = h.fallbacks;
                    diag.discarded_lines.extend(h.discarded);
                    if let Some(g) = &h.grid {
                        row_boxes.extend(g.cells.iter().map(|c| c.bbox));
                    }
                    add_pairs(h.pairs, &mut diag);
                }
                timer.lap(&mut diag, "header");
                if let Some(t) = soft(
                    extract_product_rows(
                        &clean,
                        s.product_region,
                        &reader,
                        &self.lexicon,
                        cfg.fuzzy_threshold,
                        &cfg.tables,
                    ),
                    &mut diag,
                    "product-table",
                )? {
                    row_boxes.extend(t.grid.cells.iter().map(|c| c.bbox));
                    diag.totals = t.totals;
                    diag.continuation_rows = t.continuation_rows;
                    line_items = t.items.into_iter().map(|i| i.fields).collect();
                }
                timer.lap(&mut diag, "products");
            }
        }
        dumper.put("12_rowboxes_overlay", &dump::boxes_overlay(&clean, &row_boxes))?;

        Ok(InvoiceExtraction {
            schema: SCHEMA_VERSION,
            source: Source {
                path: path.to_string(),
                width: in_w,
                height: in_h,
            },
            header,
            line_items,
            diagnostics: diag,
        })
    }

    /// Runs every input on the worker pool, one engine per input, writing
    /// `<out_dir>/<stem>.json`. Stage dumps go to `<debug_dir>/<stem>/`.
    pub fn run_batch(
        &self,
        inputs: &[PathBuf],
        out_dir: &Path,
        make_engine: &(dyn Fn(&Path) -> Result<Box<dyn OcrEngine>> + Sync),
    ) -> Result<Vec<BatchOutcome>> {
        std::fs::create_dir_all(out_dir)?;
        Ok(crate::par::map(inputs, |input| {
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into());
            let output = out_dir.join(format!("{stem}.json"));
            let result = (|| {
                let engine = make_engine(input)?;
                let dumper = StageDumper::new(self.dump_dir().map(|d| d.join(&stem)).as_deref())?;
                let img = read_image(input)?;
                let out = self.run_image(&img, &input.display().to_string(), engine.as_ref(), &dumper)?;
                std::fs::write(&output, out.to_json()?)?;
                Ok(out)
            })();
            BatchOutcome {
                input: input.clone(),
                output,
                result,
            }
        }))
    }
}

/// Convenience wrapper: builds a pipeline for `cfg` and runs one image.
pub fn run(image_path: &Path, cfg: &PipelineConfig, engine: &dyn OcrEngine) -> Result<InvoiceExtraction> {
    Pipeline::new(cfg.clone())?.run(image_path, engine)
}

#[cfg(test)]
mod tests;
