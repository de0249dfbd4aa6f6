//! Header key/value extraction (lattice, box fallback, row-wise text) and
//! product-table row reconstruction.

mod lattice;
mod rowwise;

pub use lattice::detect_lattice;
pub use rowwise::{extract_rowwise_kv, RowwiseKv};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::cleanup::LineMasks;
use crate::error::{Error, Result};
use crate::layout::{fuzzy_match, group_lines, AnchorClass, Lexicon};
use crate::ocr::{recognize, Frame, OcrConfig, OcrEngine, OcrWord, MIN_OCR_SIDE};
use crate::raster::{canny_edges, dilate, label_components, BBox, Kernel, PixelFormat, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceLayer {
    Lattice,
    BoxFallback,
    RowWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub text: String,
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableGrid {
    pub cells: Vec<Cell>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub origin: BBox,
    pub source_layer: SourceLayer,
}

impl TableGrid {
    pub fn row(&self, r: usize) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.row == r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineItem {
    pub fields: IndexMap<String, String>,
    pub row_box: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TablesConfig {
    /// Line-mask runs whose centers are this close form one rail.
    pub rail_cluster_px: u32,
    pub min_cell_px: u32,
    pub dedup_iou: f64,
    pub box_min_height: u32,
    pub box_max_height: u32,
    pub box_min_aspect: f64,
    pub box_max_aspect: f64,
    pub speck_area: u64,
    /// Word-merging kernel for product rows, width x height.
    pub merge_kernel: (u32, u32),
    /// Boxes join a row when their y-centers differ by at most this many
    /// median box heights.
    pub row_tolerance: f64,
    /// Boxes in a row closer than this many median box heights form one cell
    /// in the box fallback.
    pub cell_gap: f64,
}

impl Default for TablesConfig {
    fn default() -> Self {
        TablesConfig {
            rail_cluster_px: 3,
            min_cell_px: 8,
            dedup_iou: 0.5,
            box_min_height: 8,
            box_max_height: 120,
            box_min_aspect: 0.3,
            box_max_aspect: 40.0,
            speck_area: 40,
            merge_kernel: (15, 5),
            row_tolerance: 0.6,
            cell_gap: 1.5,
        }
    }
}

impl TablesConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("tables: {m}")));
        if self.rail_cluster_px == 0 || self.min_cell_px == 0 {
            return bad("rail_cluster_px and min_cell_px must be positive");
        }
        if !(0.0..=1.0).contains(&self.dedup_iou) {
            return bad("dedup_iou must lie in [0, 1]");
        }
        if self.box_min_height == 0 || self.box_min_height > self.box_max_height {
            return bad("box height range must be non-empty and positive");
        }
        if !(self.box_min_aspect > 0.0 && self.box_min_aspect < self.box_max_aspect) {
            return bad("box aspect range must be non-empty and positive");
        }
        if self.merge_kernel.0 == 0 || self.merge_kernel.1 == 0 {
            return bad("merge_kernel must be at least 1x1");
        }
        if self.row_tolerance <= 0.0 || self.cell_gap <= 0.0 {
            return bad("row_tolerance and cell_gap must be positive");
        }
        Ok(())
    }
}

/// Reads text out of page regions through an OCR engine.
///
/// `page` is an ink-foreground binary (or a gray/RGB image) in page
/// coordinates; `frame` places the page in the original input.
pub struct CellReader<'a> {
    pub engine: &'a dyn OcrEngine,
    pub page: &'a Raster,
    pub frame: Frame,
    pub cfg: &'a OcrConfig,
    pub min_width: u32,
}

impl CellReader<'_> {
    /// Words inside `b`, boxes in page coordinates. Boxes smaller than the
    /// engine minimum are grown around their center first.
    pub fn words(&self, b: BBox) -> Result<Vec<OcrWord>> {
        let (pw, ph) = (self.page.width(), self.page.height());
        if pw < MIN_OCR_SIDE || ph < MIN_OCR_SIDE {
            return Ok(Vec::new());
        }
        let grow = |lo: u32, len: u32, max: u32| {
            if len >= MIN_OCR_SIDE {
                (lo, len)
            } else {
                let lo = lo.saturating_sub((MIN_OCR_SIDE - len).div_ceil(2)).min(max - MIN_OCR_SIDE);
                (lo, MIN_OCR_SIDE)
            }
        };
        let Some(b) = b.clip(pw, ph) else {
            return Ok(Vec::new());
        };
        let (x, w) = grow(b.x, b.w, pw);
        let (y, h) = grow(b.y, b.h, ph);
        let crop = self.page.crop(BBox::new(x, y, w, h))?;
        let img = match crop.format() {
            PixelFormat::Binary => crop.invert().as_gray(),
            _ => crop,
        };
        let words = recognize(self.engine, &img, &self.frame.offset(x, y), self.cfg, self.min_width)?;
        Ok(words
            .into_iter()
            .map(|mut w| {
                w.bbox = w.bbox.translate(x, y);
                w
            })
            .collect())
    }

    /// Text inside `b` in reading order with mean confidence.
    pub fn text(&self, b: BBox) -> Result<(String, f32)> {
        let words = self.words(b)?;
        Ok(join_words(&words))
    }
}

/// Joins words line by line with single spaces; a line ending in a hyphen is
/// glued to the next one.
pub fn join_words(words: &[OcrWord]) -> (String, f32) {
    if words.is_empty() {
        return (String::new(), 0.0);
    }
    let mut out = String::new();
    for line in group_lines(words) {
        let text = line
            .iter()
            .flat_map(|w| w.text.split_whitespace())
            .collect::<Vec<_>>()
            .join(" ");
        if text.is_empty() {
            continue;
        }
        if out.ends_with('-') && out.len() > 1 {
            out.pop();
        } else if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&text);
    }
    let conf = words.iter().map(|w| w.confidence).sum::<f32>() / words.len() as f32;
    (out, conf)
}

fn strip_colon(s: &str) -> String {
    s.trim().trim_end_matches(':').trim_end().to_string()
}

fn median_u32(v: &mut [u32]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Groups boxes into rows: sorted by y-center, a box joins the current row
/// when its center is within `tol` of the row's first center. Rows are
/// sorted left to right.
fn group_rows(mut boxes: Vec<BBox>, tol: f64) -> Vec<Vec<BBox>> {
    boxes.sort_by(|a, b| a.center().y.total_cmp(&b.center().y).then(a.x.cmp(&b.x)));
    let mut rows: Vec<Vec<BBox>> = Vec::new();
    for b in boxes {
        match rows.last_mut() {
            Some(r) if (b.center().y - r[0].center().y).abs() <= tol => r.push(b),
            _ => rows.push(vec![b]),
        }
    }
    for r in &mut rows {
        r.sort_by_key(|b| b.x);
    }
    rows
}

/// Text blocks of the box fallback: Canny edges of the region, dilated
/// (3x3, twice), filtered by height and aspect, grouped into rows, and
/// neighbours in a row closer than `cell_gap` box heights merged into one
/// cell. Boxes are in page coordinates.
pub fn detect_boxes_fallback(binary: &Raster, region: BBox, cfg: &TablesConfig) -> Result<TableGrid> {
    binary.expect_format(PixelFormat::Binary, "detect_boxes_fallback")?;
    let not_applicable = |m: &str| Err(Error::FallbackNotApplicable(m.into()));
    let Some(region) = region.clip(binary.width(), binary.height()).filter(|r| r.w >= 3 && r.h >= 3) else {
        return not_applicable("empty region");
    };
    let crop = binary.crop(region)?;
    let edges = canny_edges(&crop.as_gray(), 100.0, 300.0)?;
    let blobs = dilate(&edges, &Kernel::rect(3, 3)?, 2)?;
    let boxes: Vec<BBox> = label_components(&blobs)?
        .components
        .iter()
        .map(|c| c.bbox)
        .filter(|b| {
            let aspect = b.w as f64 / b.h as f64;
            (cfg.box_min_height..=cfg.box_max_height).contains(&b.h)
                && aspect >= cfg.box_min_aspect
                && aspect <= cfg.box_max_aspect
        })
        .collect();
    if boxes.len() < 2 {
        return not_applicable("fewer than two text boxes");
    }
    let med_h = median_u32(&mut boxes.iter().map(|b| b.h).collect::<Vec<_>>());
    let rows = group_rows(boxes, cfg.row_tolerance * med_h);
    let merged: Vec<Vec<BBox>> = rows
        .into_iter()
        .map(|row| {
            let mut cells: Vec<BBox> = Vec::new();
            for b in row {
                match cells.last_mut() {
                    Some(prev) if (b.x as f64 - prev.right() as f64) < cfg.cell_gap * med_h => {
                        *prev = prev.union(&b)
                    }
                    _ => cells.push(b),
                }
            }
            cells
        })
        .collect();
    if !merged.iter().any(|r| r.len() >= 2) {
        return not_applicable("no row holds two separate cells");
    }
    let n_cols = merged.iter().map(Vec::len).max().unwrap_or(0);
    let cells = merged
        .iter()
        .enumerate()
        .flat_map(|(r, row)| {
            row.iter().enumerate().map(move |(c, b)| Cell {
                row: r,
                col: c,
                bbox: b.translate(region.x, region.y),
                text: String::new(),
                confidence: 0.0,
            })
        })
        .collect();
    Ok(TableGrid {
        cells,
        n_rows: merged.len(),
        n_cols,
        origin: region,
        source_layer: SourceLayer::BoxFallback,
    })
}

/// Fills cell texts by OCR; rows are read concurrently.
pub fn fill_cells(grid: &mut TableGrid, reader: &CellReader) -> Result<()> {
    let texts = crate::par::map(&grid.cells, |c| reader.text(c.bbox));
    for (cell, t) in grid.cells.iter_mut().zip(texts) {
        let (text, conf) = t?;
        cell.text = text;
        cell.confidence = conf;
    }
    Ok(())
}

/// Key/value pairs from horizontally adjacent cells: `(c0, c1), (c2, c3), ...`
/// per row. Unpaired or keyless cells are returned separately.
pub fn pair_cells(grid: &TableGrid) -> (Vec<(String, String)>, Vec<String>) {
    let mut pairs = Vec::new();
    let mut leftover = Vec::new();
    for r in 0..grid.n_rows {
        let row: Vec<&Cell> = grid.row(r).filter(|c| !c.text.trim().is_empty()).collect();
        let mut it = row.chunks(2);
        for chunk in &mut it {
            match chunk {
                [k, v] => {
                    let key = strip_colon(&k.text);
                    let value = v.text.trim().trim_start_matches(':').trim().to_string();
                    if key.is_empty() {
                        leftover.push(format!("{} {}", k.text, v.text));
                    } else {
                        pairs.push((key, value));
                    }
                }
                [single] => leftover.push(single.text.clone()),
                _ => {}
            }
        }
    }
    (pairs, leftover)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaderExtraction {
    pub pairs: Vec<(String, String)>,
    pub layer: SourceLayer,
    pub grid: Option<TableGrid>,
    /// Text that could not be turned into a pair.
    pub discarded: Vec<String>,
    /// Why earlier layers gave up.
    pub fallbacks: Vec<String>,
}

/// Everything the header layers need.
pub struct HeaderInputs<'a> {
    /// Line masks of the whole page.
    pub masks: &'a LineMasks,
    /// Line-removed ink binary of the whole page.
    pub clean: &'a Raster,
    /// Words of the whole-page OCR pass (page coordinates).
    pub words: &'a [OcrWord],
    pub lexicon: &'a Lexicon,
    pub fuzzy_threshold: f64,
}

/// Lattice, then box fallback, then row-wise text; each layer runs only when
/// the previous one reported its failure condition.
pub fn extract_header_table(
    region: BBox,
    inputs: &HeaderInputs,
    reader: &CellReader,
    cfg: &TablesConfig,
) -> Result<HeaderExtraction> {
    let mut fallbacks = Vec::new();
    match detect_lattice(inputs.masks, region, cfg) {
        Ok(mut grid) => {
            fill_cells(&mut grid, reader)?;
            let (pairs, discarded) = pair_cells(&grid);
            return Ok(HeaderExtraction {
                pairs,
                layer: SourceLayer::Lattice,
                grid: Some(grid),
                discarded,
                fallbacks,
            });
        }
        Err(Error::LatticeNotFound(why)) => fallbacks.push(format!("lattice: {why}")),
        Err(e) => return Err(e),
    }
    match detect_boxes_fallback(inputs.clean, region, cfg) {
        Ok(mut grid) => {
            fill_cells(&mut grid, reader)?;
            let (pairs, discarded) = pair_cells(&grid);
            return Ok(HeaderExtraction {
                pairs,
                layer: SourceLayer::BoxFallback,
                grid: Some(grid),
                discarded,
                fallbacks,
            });
        }
        Err(Error::FallbackNotApplicable(why)) => fallbacks.push(format!("box fallback: {why}")),
        Err(e) => return Err(e),
    }
    let words: Vec<OcrWord> = inputs
        .words
        .iter()
        .filter(|w| region.contains_point(w.bbox.center()))
        .cloned()
        .collect();
    let kv = extract_rowwise_kv(&words, inputs.lexicon, inputs.fuzzy_threshold);
    Ok(HeaderExtraction {
        pairs: kv.pairs,
        layer: SourceLayer::RowWise,
        grid: None,
        discarded: kv.discarded,
        fallbacks,
    })
}

/// Column labels treated as the product-name column for continuation rows.
const PRODUCT_LABELS: [&str; 5] = ["product", "description", "item", "particulars", "goods"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTable {
    pub items: Vec<LineItem>,
    pub grid: TableGrid,
    /// Rows recognized as totals: label text and the row's cell texts.
    pub totals: Vec<IndexMap<String, String>>,
    /// Rows merged into the previous item as wrapped product text.
    pub continuation_rows: usize,
}

/// Rebuilds product rows from a line-removed binary of the product region
/// (`region` is its page box; `reader` reads page coordinates).
///
/// Words are merged into blocks with a wide, short dilation; blocks are
/// filtered by height and ink area, grouped into rows, and read one by one.
/// The top row gives the column labels; every later block goes to the column
/// whose extent (bounded by the midpoints between neighbouring labels)
/// overlaps it most. A row populated only in the product column continues the
/// previous item; rows labelled as totals are set aside.
pub fn extract_product_rows(
    binary: &Raster,
    region: BBox,
    reader: &CellReader,
    lexicon: &Lexicon,
    fuzzy_threshold: f64,
    cfg: &TablesConfig,
) -> Result<ProductTable> {
    binary.expect_format(PixelFormat::Binary, "extract_product_rows")?;
    let region = region
        .clip(binary.width(), binary.height())
        .filter(|r| r.w >= 3 && r.h >= 3)
        .ok_or_else(|| Error::Table("empty product region".into()))?;
    let crop = binary.crop(region)?;
    let (kw, kh) = cfg.merge_kernel;
    let blobs = dilate(&crop, &Kernel::rect(kw, kh)?, 1)?;
    let labeling = label_components(&blobs)?;
    let mut ink = vec![0u64; labeling.components.len() + 1];
    for (i, &l) in labeling.labels.iter().enumerate() {
        if l != 0 && crop.data()[i] != 0 {
            ink[l as usize] += 1;
        }
    }
    let boxes: Vec<BBox> = labeling
        .components
        .iter()
        .filter(|c| {
            (cfg.box_min_height..=cfg.box_max_height).contains(&c.bbox.h) && ink[c.label as usize] >= cfg.speck_area
        })
        .map(|c| c.bbox.translate(region.x, region.y))
        .collect();
    if boxes.is_empty() {
        return Err(Error::Table("no text blocks in the product region".into()));
    }
    let med_h = median_u32(&mut boxes.iter().map(|b| b.h).collect::<Vec<_>>());
    let rows = group_rows(boxes, cfg.row_tolerance * med_h);
    let read: Vec<Result<Vec<(BBox, String, f32)>>> = crate::par::map(&rows, |row| {
        row.iter()
            .map(|b| reader.text(*b).map(|(t, c)| (*b, t, c)))
            .filter(|r| r.as_ref().map_or(true, |(_, t, _)| !t.is_empty()))
            .collect()
    });
    let rows: Vec<Vec<(BBox, String, f32)>> = read
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|r| !r.is_empty())
        .collect();
    let Some((header, body)) = rows.split_first() else {
        return Err(Error::Table("no readable header row".into()));
    };
    let labels: Vec<String> = header.iter().map(|(_, t, _)| strip_colon(t)).collect();
    let n_cols = labels.len();
    let extents: Vec<(f64, f64)> = (0..n_cols)
        .map(|j| {
            let lo = if j == 0 {
                f64::NEG_INFINITY
            } else {
                (header[j - 1].0.right() as f64 + header[j].0.x as f64) / 2.0
            };
            let hi = if j + 1 == n_cols {
                f64::INFINITY
            } else {
                (header[j].0.right() as f64 + header[j + 1].0.x as f64) / 2.0
            };
            (lo, hi)
        })
        .collect();
    let column_of = |b: &BBox| -> usize {
        let (x0, x1) = (b.x as f64, b.right() as f64);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (j, &(lo, hi)) in extents.iter().enumerate() {
            let ov = x1.min(hi) - x0.max(lo);
            if ov > best.1 {
                best = (j, ov);
            }
        }
        best.0
    };
    let is_product = |label: &str| PRODUCT_LABELS.iter().any(|p| fuzzy_match(label, p) >= fuzzy_threshold);
    let is_total = |text: &str| {
        lexicon
            .best_match(text, Some(AnchorClass::Total), fuzzy_threshold)
            .is_some()
    };

    let mut cells: Vec<Cell> = header
        .iter()
        .enumerate()
        .map(|(j, (b, t, c))| Cell {
            row: 0,
            col: j,
            bbox: *b,
            text: t.clone(),
            confidence: *c,
        })
        .collect();
    let mut items: Vec<LineItem> = Vec::new();
    let mut totals = Vec::new();
    let mut continuation_rows = 0;
    for (r, row) in body.iter().enumerate() {
        let mut fields: IndexMap<String, String> = IndexMap::new();
        let mut row_box = row[0].0;
        let mut cols = Vec::new();
        for (b, text, conf) in row {
            let j = column_of(b);
            cols.push(j);
            row_box = row_box.union(b);
            cells.push(Cell {
                row: r + 1,
                col: j,
                bbox: *b,
                text: text.clone(),
                confidence: *conf,
            });
            fields
                .entry(labels[j].clone())
                .and_modify(|v| {
                    v.push(' ');
                    v.push_str(text);
                })
                .or_insert_with(|| text.clone());
        }
        if fields.values().any(|v| is_total(v)) {
            totals.push(fields);
            continue;
        }
        let continuation = !items.is_empty() && cols.iter().all(|&j| is_product(&labels[j]));
        if continuation {
            let prev = items.last_mut().expect("checked non-empty");
            for (k, v) in fields {
                prev.fields
                    .entry(k)
                    .and_modify(|e| {
                        e.push(' ');
                        e.push_str(&v);
                    })
                    .or_insert(v);
            }
            prev.row_box = prev.row_box.union(&row_box);
            continuation_rows += 1;
            continue;
        }
        // keep the header's column order
        let ordered = labels
            .iter()
            .filter_map(|l| fields.get(l).map(|v| (l.clone(), v.clone())))
            .collect();
        items.push(LineItem {
            fields: ordered,
            row_box,
        });
    }
    let n_rows = body.len() + 1;
    Ok(ProductTable {
        items,
        grid: TableGrid {
            cells,
            n_rows,
            n_cols,
            origin: region,
            source_layer: SourceLayer::RowWise,
        },
        totals,
        continuation_rows,
    })
}

#[cfg(test)]
mod tests;
