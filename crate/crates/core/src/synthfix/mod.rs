//! Synthetic invoices with exact ground truth.
//!
//! A page is laid out top to bottom: title, header block (ruled grid, aligned
//! key/value columns or free text), a fully ruled product table, an unruled
//! total row and a footer with a signature zone. Optional distortions (pen
//! scribbles, a stripe barcode, a perspective warp, illumination falloff and
//! noise) are applied after the ground truth is captured.

mod distort;
pub mod font;
mod sidecar;

pub use distort::{hsv_to_rgb, BACKGROUND};
pub use sidecar::sidecar_path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{estimate_homography, Homography, Quad};
use crate::ocr::OcrWord;
use crate::raster::{fill_rect, BBox, PixelFormat, Point, Raster};
use font::{draw_text, FontMetrics};

pub const TEXT_SCALE: u32 = 3;
pub const PAGE_MARGIN: u32 = 40;
const INK: [u8; 3] = [24, 24, 24];
const RAIL: [u8; 3] = [0, 0, 0];
const ROW_PITCH: u32 = 41;
const WRAP_OFFSET: u32 = 27;
const PAD_X: u32 = 12;
const PAD_Y: u32 = 10;
const HEADER_TOP: u32 = 110;
const TABLE_GAP: u32 = 48;
const BARCODE_W: u32 = 240;
const BARCODE_H: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeaderStyle {
    Ruled,
    BorderlessAligned,
    FreeText,
}

impl HeaderStyle {
    pub const ALL: [HeaderStyle; 3] = [
        HeaderStyle::Ruled,
        HeaderStyle::BorderlessAligned,
        HeaderStyle::FreeText,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Column {
    Sr,
    Hsn,
    Product,
    Unit,
    Qty,
    Rate,
    Tax,
    Amount,
}

impl Column {
    pub const ALL: [Column; 8] = [
        Column::Sr,
        Column::Hsn,
        Column::Product,
        Column::Unit,
        Column::Qty,
        Column::Rate,
        Column::Tax,
        Column::Amount,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Column::Sr => "Sr",
            Column::Hsn => "HSN",
            Column::Product => "Product",
            Column::Unit => "Unit",
            Column::Qty => "Qty",
            Column::Rate => "Rate",
            Column::Tax => "Tax",
            Column::Amount => "Amount",
        }
    }

    pub fn default_set() -> Vec<Column> {
        vec![Column::Sr, Column::Hsn, Column::Product, Column::Qty, Column::Amount]
    }

    /// `n` columns (2 to 8) in page order, Product and Amount first to be kept.
    pub fn set_of(n: usize) -> Vec<Column> {
        const PRIORITY: [Column; 8] = [
            Column::Product,
            Column::Amount,
            Column::Qty,
            Column::Sr,
            Column::Hsn,
            Column::Rate,
            Column::Unit,
            Column::Tax,
        ];
        let keep = &PRIORITY[..n.clamp(1, 8)];
        Column::ALL.into_iter().filter(|c| keep.contains(c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Distortion {
    /// Where the page corners land in the output image.
    pub quad: Option<Quad>,
    /// Output size; defaults to the page size.
    pub canvas: Option<(u32, u32)>,
    pub noise_sigma: f64,
    pub scribbles: u32,
    pub barcode: bool,
    pub illumination: bool,
}

impl Default for Distortion {
    fn default() -> Self {
        Distortion::none()
    }
}

impl Distortion {
    pub fn none() -> Self {
        Distortion {
            quad: None,
            canvas: None,
            noise_sigma: 0.0,
            scribbles: 0,
            barcode: false,
            illumination: false,
        }
    }

    /// A page placed on a dark canvas `margin` px larger on every side, with
    /// each corner moved by up to `jitter` px.
    pub fn perspective(seed: u64, page_width: u32, page_height: u32, margin: u32, jitter: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let m = margin as f64;
        let (w, h) = (page_width as f64 - 1.0, page_height as f64 - 1.0);
        let mut corner = |x: f64, y: f64| {
            Point::new(
                x + m + rng.gen_range(-jitter..=jitter),
                y + m + rng.gen_range(-jitter..=jitter),
            )
        };
        let quad = Quad::new(corner(0.0, 0.0), corner(w, 0.0), corner(w, h), corner(0.0, h))
            .expect("corner jitter below half the page size keeps the quad convex");
        Distortion {
            quad: Some(quad),
            canvas: Some((page_width + 2 * margin, page_height + 2 * margin)),
            ..Distortion::none()
        }
    }

    /// Everything at once: perspective, noise, two scribbles, a barcode and
    /// illumination falloff.
    pub fn bundle(seed: u64, page_width: u32, page_height: u32) -> Self {
        Distortion {
            noise_sigma: 4.0,
            scribbles: 2,
            barcode: true,
            illumination: true,
            ..Distortion::perspective(seed, page_width, page_height, 60, 35.0)
        }
    }

    pub fn is_none(&self) -> bool {
        *self == Distortion::none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub seed: u64,
    pub page_width: u32,
    pub page_height: u32,
    pub header_style: HeaderStyle,
    /// Number of header key/value pairs (2 to 6).
    pub header_rows: usize,
    pub n_items: usize,
    pub columns: Vec<Column>,
    /// Chance that a product name wraps onto a second line.
    pub wrap_probability: f64,
    pub distortion: Distortion,
}

impl FixtureSpec {
    pub fn new(seed: u64, header_style: HeaderStyle, n_items: usize) -> Self {
        FixtureSpec {
            seed,
            page_width: 1000,
            page_height: 1200,
            header_style,
            header_rows: 4,
            n_items,
            columns: Column::default_set(),
            wrap_probability: 0.0,
            distortion: Distortion::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Generation(m));
        if self.n_items == 0 {
            return fail("n_items must be at least 1".into());
        }
        if !(2..=6).contains(&self.header_rows) {
            return fail(format!("header_rows {} outside 2..=6", self.header_rows));
        }
        if self.columns.is_empty() {
            return fail("no table columns".into());
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].contains(c) {
                return fail(format!("duplicate column {c:?}"));
            }
        }
        if !(0.0..=1.0).contains(&self.wrap_probability) {
            return fail("wrap_probability outside [0, 1]".into());
        }
        if self.page_width < 600 || self.page_height < 400 {
            return fail(format!("page {}x{} too small", self.page_width, self.page_height));
        }
        let d = &self.distortion;
        if let Some(q) = &d.quad {
            if !q.is_convex() {
                return fail("distortion quad is not convex".into());
            }
        }
        if !(d.noise_sigma >= 0.0 && d.noise_sigma.is_finite()) {
            return fail("noise sigma must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Ruled table layout. Rails are `thickness` px lines starting at the listed
/// positions; cells span between rail centers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridTruth {
    pub bbox: BBox,
    pub thickness: u32,
    pub h_rails: Vec<u32>,
    pub v_rails: Vec<u32>,
}

impl GridTruth {
    pub fn n_rows(&self) -> usize {
        self.h_rails.len().saturating_sub(1)
    }

    pub fn n_cols(&self) -> usize {
        self.v_rails.len().saturating_sub(1)
    }

    pub fn rail_center(&self, pos: u32) -> u32 {
        pos + (self.thickness - 1) / 2
    }

    /// `(row, col, box)` in row-major order.
    pub fn cells(&self) -> Vec<(usize, usize, BBox)> {
        let ys: Vec<u32> = self.h_rails.iter().map(|&p| self.rail_center(p)).collect();
        let xs: Vec<u32> = self.v_rails.iter().map(|&p| self.rail_center(p)).collect();
        let mut out = Vec::new();
        for r in 0..self.n_rows() {
            for c in 0..self.n_cols() {
                out.push((r, c, BBox::new(xs[c], ys[r], xs[c + 1] - xs[c], ys[r + 1] - ys[r])));
            }
        }
        out
    }
}

/// Everything known about a generated image.
///
/// Words, grids, `header_box` and `table_top` are in page coordinates; masks
/// and `barcode_box` are in image coordinates. `applied_homography` maps page
/// to image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_width: u32,
    pub image_height: u32,
    pub page_width: u32,
    pub page_height: u32,
    pub header_style: Option<HeaderStyle>,
    pub words: Vec<OcrWord>,
    #[serde(with = "sidecar::mask_png")]
    pub ink_mask: Raster,
    #[serde(with = "sidecar::mask_png")]
    pub grid_mask: Raster,
    #[serde(with = "sidecar::mask_png")]
    pub scribble_mask: Raster,
    pub barcode_box: Option<BBox>,
    pub header_kv: IndexMap<String, String>,
    pub columns: Vec<String>,
    pub line_items: Vec<IndexMap<String, String>>,
    pub total: Option<String>,
    pub header_grid: Option<GridTruth>,
    pub product_grid: Option<GridTruth>,
    pub header_box: Option<BBox>,
    pub table_top: Option<u32>,
    pub applied_homography: Homography,
    pub page_quad: Quad,
}

impl GroundTruth {
    /// Ground truth for an image with no content (robustness inputs).
    pub fn empty(width: u32, height: u32) -> Self {
        let blank = Raster::filled(width, height, PixelFormat::Binary, 0);
        GroundTruth {
            image_width: width,
            image_height: height,
            page_width: width,
            page_height: height,
            header_style: None,
            words: Vec::new(),
            ink_mask: blank.clone(),
            grid_mask: blank.clone(),
            scribble_mask: blank,
            barcode_box: None,
            header_kv: IndexMap::new(),
            columns: Vec::new(),
            line_items: Vec::new(),
            total: None,
            header_grid: None,
            product_grid: None,
            header_box: None,
            table_top: None,
            applied_homography: Homography::IDENTITY,
            page_quad: Quad::rect(width.max(2) as f64, height.max(2) as f64),
        }
    }

    pub fn is_undistorted(&self) -> bool {
        self.applied_homography == Homography::IDENTITY
    }
}

struct Page {
    img: Raster,
    ink: Raster,
    grid: Raster,
    words: Vec<OcrWord>,
    metrics: FontMetrics,
}

impl Page {
    fn new(w: u32, h: u32) -> Self {
        Page {
            img: Raster::filled(w, h, PixelFormat::Rgb8, 255),
            ink: Raster::filled(w, h, PixelFormat::Binary, 0),
            grid: Raster::filled(w, h, PixelFormat::Binary, 0),
            words: Vec::new(),
            metrics: FontMetrics::new(TEXT_SCALE),
        }
    }

    fn text(&mut self, x: u32, y: u32, text: &str, block: u32, line: u32) -> Result<u32> {
        let laid = self.metrics.layout(text, x, y);
        let right = laid.last().map_or(x, |(_, b)| b.right());
        if right > self.img.width() - PAGE_MARGIN || y + self.metrics.height() > self.img.height() - PAGE_MARGIN {
            return Err(Error::Generation(format!("text {text:?} at ({x}, {y}) does not fit the page")));
        }
        draw_text(&mut self.img, Some(&mut self.ink), self.metrics, x, y, text, INK);
        let mut next = self
            .words
            .iter()
            .filter(|w| w.block_id == block && w.line_id == line)
            .count() as u32;
        for (word, bbox) in laid {
            next += 1;
            self.words.push(OcrWord {
                text: word,
                bbox,
                confidence: 100.0,
                block_id: block,
                line_id: line,
                word_id: next,
            });
        }
        Ok(right)
    }

    fn rail(&mut self, b: BBox) -> Result<()> {
        if b.right() > self.img.width() || b.bottom() > self.img.height() {
            return Err(Error::Generation("table does not fit the page".into()));
        }
        fill_rect(&mut self.img, b, RAIL);
        for y in b.y..b.bottom() {
            for x in b.x..b.right() {
                self.grid.set(x, y, 255);
            }
        }
        Ok(())
    }

    /// Draws a full grid; `rows` and `cols` are the row heights and column
    /// widths (rail to rail).
    fn grid(&mut self, x0: u32, y0: u32, rows: &[u32], cols: &[u32], t: u32) -> Result<GridTruth> {
        let h_rails: Vec<u32> = std::iter::once(y0)
            .chain(rows.iter().scan(y0, |y, h| {
                *y += h;
                Some(*y)
            }))
            .collect();
        let v_rails: Vec<u32> = std::iter::once(x0)
            .chain(cols.iter().scan(x0, |x, w| {
                *x += w;
                Some(*x)
            }))
            .collect();
        let (x1, y1) = (*v_rails.last().unwrap() + t, *h_rails.last().unwrap() + t);
        for &y in &h_rails {
            self.rail(BBox::new(x0, y, x1 - x0, t))?;
        }
        for &x in &v_rails {
            self.rail(BBox::new(x, y0, t, y1 - y0))?;
        }
        Ok(GridTruth {
            bbox: BBox::new(x0, y0, x1 - x0, y1 - y0),
            thickness: t,
            h_rails,
            v_rails,
        })
    }
}

const BUYERS: [&str; 6] = [
    "Acme Traders",
    "Sunrise Foods",
    "Globe Metals",
    "Blue Ocean Co",
    "Northwind Ltd",
    "Kiran Stores",
];
const ADDRESSES: [&str; 4] = [
    "14 Park Street Kolkata",
    "221 MG Road Pune",
    "7 Ring Road Delhi",
    "9 Lake View Chennai",
];
const PRODUCTS: [&str; 10] = [
    "Steel Bolt",
    "Copper Wire",
    "LED Bulb",
    "Paper Ream",
    "USB Cable",
    "Desk Lamp",
    "Glue Stick",
    "Ink Pen",
    "Wall Clock",
    "Hand Towel",
];
const WRAPPED: [(&str, &str); 4] = [
    ("Printer Toner", "Cartridge"),
    ("Office Chair", "with Arms"),
    ("Steel Almirah", "Two Door"),
    ("Water Bottle", "Pack of Six"),
];
const UNITS: [&str; 4] = ["PCS", "KG", "BOX", "SET"];
const TAXES: [&str; 4] = ["5%", "12%", "18%", "28%"];

const HEADER_KEYS: [&str; 6] = ["Invoice No", "Date", "Buyer", "PO No", "Due Date", "GSTIN"];

fn random_date(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{:02}/{:02}/{}",
        rng.gen_range(1..=28),
        rng.gen_range(1..=12),
        rng.gen_range(2019..=2025)
    )
}

fn header_pairs(rng: &mut ChaCha8Rng, n: usize) -> IndexMap<String, String> {
    let mut optional: Vec<usize> = (2..HEADER_KEYS.len()).collect();
    optional.shuffle(rng);
    let mut chosen: Vec<usize> = vec![0, 1];
    chosen.extend(optional.into_iter().take(n - 2));
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|i| {
            let key = HEADER_KEYS[i];
            let value = match key {
                "Invoice No" => format!("INV-{}", rng.gen_range(1000..10000)),
                "Date" | "Due Date" => random_date(rng),
                "Buyer" => BUYERS.choose(rng).unwrap().to_string(),
                "PO No" => format!("PO{}", rng.gen_range(10000..100000)),
                _ => format!("GST{}", rng.gen_range(1_000_000..10_000_000)),
            };
            (key.to_string(), value)
        })
        .collect()
}

fn money(cents: u64) -> String {
    format!("{}.{:02}", cents / 100, cents % 100)
}

struct Item {
    cells: Vec<String>,
    wrap: Option<String>,
    amount_cents: u64,
}

fn items(rng: &mut ChaCha8Rng, spec: &FixtureSpec) -> Vec<Item> {
    (0..spec.n_items)
        .map(|i| {
            let qty: u64 = rng.gen_range(1..=50);
            let rate: u64 = rng.gen_range(5..=2000) * 100 + if rng.gen_bool(0.5) { 50 } else { 0 };
            let (name, wrap) = if rng.gen_bool(spec.wrap_probability) {
                let (a, b) = WRAPPED.choose(rng).unwrap();
                (a.to_string(), Some(b.to_string()))
            } else {
                (PRODUCTS.choose(rng).unwrap().to_string(), None)
            };
            let hsn = rng.gen_range(1000..10000).to_string();
            let unit = UNITS.choose(rng).unwrap().to_string();
            let tax = TAXES.choose(rng).unwrap().to_string();
            let amount = qty * rate;
            let cells = spec
                .columns
                .iter()
                .map(|c| match c {
                    Column::Sr => (i + 1).to_string(),
                    Column::Hsn => hsn.clone(),
                    Column::Product => name.clone(),
                    Column::Unit => unit.clone(),
                    Column::Qty => qty.to_string(),
                    Column::Rate => money(rate),
                    Column::Tax => tax.clone(),
                    Column::Amount => money(amount),
                })
                .collect();
            let wrap = wrap.filter(|_| spec.columns.contains(&Column::Product));
            Item {
                cells,
                wrap,
                amount_cents: amount,
            }
        })
        .collect()
}

struct HeaderOut {
    kv: IndexMap<String, String>,
    grid: Option<GridTruth>,
    bbox: BBox,
}

fn render_header(page: &mut Page, rng: &mut ChaCha8Rng, spec: &FixtureSpec) -> Result<HeaderOut> {
    let kv = header_pairs(rng, spec.header_rows);
    let x0 = PAGE_MARGIN;
    let y0 = HEADER_TOP;
    let block = 2;
    let mut right = x0;
    let (grid, bottom) = match spec.header_style {
        HeaderStyle::Ruled => {
            let t = rng.gen_range(1..=2);
            let rows = vec![ROW_PITCH; kv.len()];
            let grid = page.grid(x0, y0, &rows, &[260, 400], t)?;
            for (r, (k, v)) in kv.iter().enumerate() {
                let y = grid.h_rails[r] + PAD_Y;
                page.text(grid.v_rails[0] + PAD_X, y, k, block, r as u32 + 1)?;
                page.text(grid.v_rails[1] + PAD_X, y, v, block, r as u32 + 1)?;
            }
            right = grid.bbox.right();
            let bottom = grid.bbox.bottom();
            (Some(grid), bottom)
        }
        HeaderStyle::BorderlessAligned => {
            let mut y = y0;
            for (r, (k, v)) in kv.iter().enumerate() {
                page.text(x0, y, &format!("{k}:"), block, r as u32 + 1)?;
                right = right.max(page.text(360, y, v, block, r as u32 + 1)?);
                y += 36;
            }
            (None, y - 36 + page.metrics.height())
        }
        HeaderStyle::FreeText => {
            let mut lines: Vec<String> = Vec::new();
            for (k, v) in &kv {
                if k == "GSTIN" {
                    lines.push(k.clone());
                    lines.push(v.clone());
                } else {
                    lines.push(format!("{k}: {v}"));
                }
                if k == "Date" {
                    lines.push(ADDRESSES.choose(rng).unwrap().to_string());
                }
            }
            let mut y = y0;
            for (i, line) in lines.iter().enumerate() {
                right = right.max(page.text(x0, y, line, block, i as u32 + 1)?);
                y += 32;
            }
            (None, y - 32 + page.metrics.height())
        }
    };
    Ok(HeaderOut {
        kv,
        grid,
        bbox: BBox::new(x0, y0, right - x0, bottom - y0),
    })
}

/// Draws a stripe block with its top-left at `(x, y)`; returns its exact box.
fn render_barcode(page: &mut Page, rng: &mut ChaCha8Rng, x: u32, y: u32) -> BBox {
    let mut cx = 0;
    let mut right = 0;
    loop {
        let bar = rng.gen_range(2..=4);
        if cx + bar > BARCODE_W {
            break;
        }
        fill_rect(&mut page.img, BBox::new(x + cx, y, bar, BARCODE_H), RAIL);
        right = cx + bar;
        cx += bar + rng.gen_range(2..=4);
    }
    BBox::new(x, y, right, BARCODE_H)
}

/// Renders the fixture described by `spec`.
pub fn generate(spec: &FixtureSpec) -> Result<(Raster, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (pw, ph) = (spec.page_width, spec.page_height);
    let mut page = Page::new(pw, ph);
    let lh = page.metrics.height();

    page.text(PAGE_MARGIN, PAGE_MARGIN, "TAX INVOICE", 1, 1)?;
    let header = render_header(&mut page, &mut rng, spec)?;

    // Product table.
    let items = items(&mut rng, spec);
    let labels: Vec<String> = spec.columns.iter().map(|c| c.label().to_string()).collect();
    let widths: Vec<u32> = (0..spec.columns.len())
        .map(|c| {
            let content = std::iter::once(&labels[c])
                .chain(items.iter().map(|it| &it.cells[c]))
                .chain(items.iter().filter_map(|it| it.wrap.as_ref().filter(|_| spec.columns[c] == Column::Product)))
                .map(|s| page.metrics.text_width(s))
                .max()
                .unwrap_or(0);
            content + 2 * PAD_X
        })
        .collect();
    let table_x = PAGE_MARGIN;
    let table_w: u32 = widths.iter().sum();
    if table_x + table_w + 2 > pw - PAGE_MARGIN {
        return Err(Error::Generation(format!(
            "table {table_w}px wide does not fit a {pw}px page"
        )));
    }
    let table_top = header.bbox.bottom() + TABLE_GAP;
    let mut row_heights = vec![ROW_PITCH];
    row_heights.extend(items.iter().map(|it| ROW_PITCH + if it.wrap.is_some() { WRAP_OFFSET } else { 0 }));
    let needed = table_top + row_heights.iter().sum::<u32>() + 2 + 14 + lh + 48 + 40 + 90 + 10 + lh;
    if needed > ph - PAGE_MARGIN {
        return Err(Error::Generation(format!(
            "{} items do not fit a {ph}px page",
            spec.n_items
        )));
    }
    let t = rng.gen_range(1..=2);
    let grid = page.grid(table_x, table_top, &row_heights, &widths, t)?;
    let block = 3;
    let mut line = 0;
    line += 1;
    for (c, label) in labels.iter().enumerate() {
        page.text(grid.v_rails[c] + PAD_X, grid.h_rails[0] + PAD_Y, label, block, line)?;
    }
    let product_col = spec.columns.iter().position(|&c| c == Column::Product);
    let mut line_items = Vec::new();
    for (i, item) in items.iter().enumerate() {
        line += 1;
        let y = grid.h_rails[i + 1] + PAD_Y;
        for (c, text) in item.cells.iter().enumerate() {
            page.text(grid.v_rails[c] + PAD_X, y, text, block, line)?;
        }
        let mut fields: IndexMap<String, String> =
            labels.iter().cloned().zip(item.cells.iter().cloned()).collect();
        if let (Some(wrap), Some(pc)) = (&item.wrap, product_col) {
            line += 1;
            page.text(grid.v_rails[pc] + PAD_X, y + WRAP_OFFSET, wrap, block, line)?;
            let name = fields.get_mut(labels[pc].as_str()).unwrap();
            name.push(' ');
            name.push_str(wrap);
        }
        line_items.push(fields);
    }
    let mut content_bottom = grid.bbox.bottom();
    let amount_col = spec.columns.iter().position(|&c| c == Column::Amount);
    let total = match (product_col, amount_col) {
        (Some(pc), Some(ac)) => {
            line += 1;
            let y = grid.bbox.bottom() + 14;
            let sum = money(items.iter().map(|it| it.amount_cents).sum());
            page.text(grid.v_rails[pc] + PAD_X, y, "Total", block, line)?;
            page.text(grid.v_rails[ac] + PAD_X, y, &sum, block, line)?;
            content_bottom = y + lh;
            Some(sum)
        }
        _ => None,
    };

    // Footer and signature zone.
    let footer_y = content_bottom + 48;
    page.text(PAGE_MARGIN, footer_y, "Thank you for your business!", 4, 1)?;
    let zone = BBox::new(pw - PAGE_MARGIN - 360, footer_y + 40, 360, 90);
    page.text(zone.x, zone.bottom() + 10, "Authorised Signatory", 4, 2)?;

    let mut scribble = Raster::filled(pw, ph, PixelFormat::Binary, 0);
    for _ in 0..spec.distortion.scribbles {
        distort::draw_scribble(&mut page.img, &mut scribble, zone, &mut rng);
    }
    let barcode_page = if spec.distortion.barcode {
        Some(render_barcode(&mut page, &mut rng, pw - 280, 30))
    } else {
        None
    };

    // Distortion.
    let d = &spec.distortion;
    let page_rect = Quad::rect(pw as f64, ph as f64);
    let (cw, ch) = d.canvas.unwrap_or((pw, ph));
    let identity = match &d.quad {
        None => true,
        Some(q) => *q == page_rect && (cw, ch) == (pw, ph),
    };
    let (hom, quad) = if identity {
        (Homography::IDENTITY, page_rect)
    } else {
        let q = d.quad.unwrap();
        (estimate_homography(&page_rect, &q)?, q)
    };
    let (mut img, ink, grid_mask, scribble_mask) = if identity {
        (page.img, page.ink, page.grid, scribble)
    } else {
        let (img, mut masks) = distort::warp_page(&page.img, &[&page.ink, &page.grid, &scribble], &hom, cw, ch)?;
        let s = masks.pop().unwrap();
        let g = masks.pop().unwrap();
        let i = masks.pop().unwrap();
        (img, i, g, s)
    };
    let barcode_box = barcode_page.map(|b| {
        if identity {
            b
        } else {
            let pts = [
                (b.x as f64, b.y as f64),
                (b.right() as f64 - 1.0, b.y as f64),
                (b.right() as f64 - 1.0, b.bottom() as f64 - 1.0),
                (b.x as f64, b.bottom() as f64 - 1.0),
            ]
            .map(|(x, y)| hom.apply(Point::new(x, y)));
            let x0 = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).round().max(0.0) as u32;
            let y0 = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).round().max(0.0) as u32;
            let x1 = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).round() as u32;
            let y1 = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).round() as u32;
            BBox::from_corners(x0, y0, x1.min(cw - 1), y1.min(ch - 1))
        }
    });
    if d.illumination {
        distort::apply_illumination(&mut img, 0.35);
    }
    if d.noise_sigma > 0.0 {
        distort::apply_noise(&mut img, d.noise_sigma, &mut rng)?;
    }

    let truth = GroundTruth {
        image_width: img.width(),
        image_height: img.height(),
        page_width: pw,
        page_height: ph,
        header_style: Some(spec.header_style),
        words: page.words,
        ink_mask: ink,
        grid_mask,
        scribble_mask,
        barcode_box,
        header_kv: header.kv,
        columns: labels,
        line_items,
        total,
        header_grid: header.grid,
        product_grid: Some(grid),
        header_box: Some(header.bbox),
        table_top: Some(table_top),
        applied_homography: hom,
        page_quad: quad,
    };
    Ok((img, truth))
}
