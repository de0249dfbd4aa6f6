//! Binary morphology with rectangular and elliptical structuring elements.
//!
//! Dilation is the Minkowski sum with the kernel (offsets reflected), erosion
//! the Minkowski difference; both anchor the kernel at `(w / 2, h / 2)`. Pixels
//! outside the image read as background unless a `*_with_border` variant says
//! otherwise.

use super::{PixelFormat, Raster};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelShape {
    Rect,
    Ellipse,
}

/// Structuring element, stored as one contiguous horizontal span per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    width: u32,
    height: u32,
    shape: KernelShape,
    /// `(dy, dx_lo, dx_hi)` offsets relative to the anchor, inclusive.
    spans: Vec<(i64, i64, i64)>,
}

impl Kernel {
    pub fn new(width: u32, height: u32, shape: KernelShape) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "kernel dimensions must be >= 1, got {width}x{height}"
            )));
        }
        let (ax, ay) = ((width / 2) as i64, (height / 2) as i64);
        let spans = match shape {
            KernelShape::Rect => (0..height as i64)
                .map(|i| (i - ay, -ax, width as i64 - 1 - ax))
                .collect(),
            KernelShape::Ellipse => {
                // Same rasterization as the common getStructuringElement ellipse.
                let r = ay as f64;
                let c = ax as f64;
                let inv_r2 = if r > 0.0 { 1.0 / (r * r) } else { 0.0 };
                (0..height as i64)
                    .map(|i| {
                        let dy = (i - ay) as f64;
                        let dx = if r > 0.0 {
                            (c * ((r * r - dy * dy).max(0.0) * inv_r2).sqrt()).round() as i64
                        } else {
                            ax
                        };
                        let j1 = (ax - dx).max(0);
                        let j2 = (ax + dx).min(width as i64 - 1);
                        (i - ay, j1 - ax, j2 - ax)
                    })
                    .collect()
            }
        };
        Ok(Kernel {
            width,
            height,
            shape,
            spans,
        })
    }

    pub fn rect(width: u32, height: u32) -> Result<Self> {
        Kernel::new(width, height, KernelShape::Rect)
    }

    pub fn ellipse(width: u32, height: u32) -> Result<Self> {
        Kernel::new(width, height, KernelShape::Ellipse)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    /// Whether offset `(dx, dy)` from the anchor is part of the footprint.
    pub fn contains(&self, dx: i64, dy: i64) -> bool {
        self.spans
            .iter()
            .any(|&(sy, lo, hi)| sy == dy && (lo..=hi).contains(&dx))
    }

    /// Footprint offsets relative to the anchor.
    pub fn offsets(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.spans
            .iter()
            .flat_map(|&(dy, lo, hi)| (lo..=hi).map(move |dx| (dx, dy)))
    }
}

#[derive(Clone, Copy)]
enum Op {
    Dilate,
    Erode,
}

fn check(img: &Raster, iterations: u32, op: &str) -> Result<()> {
    img.expect_format(PixelFormat::Binary, op)?;
    if iterations == 0 {
        return Err(Error::Parameter(format!("{op}: iterations must be >= 1")));
    }
    Ok(())
}

fn apply_once(img: &Raster, k: &Kernel, op: Op, border_fg: bool) -> Raster {
    let (w, h) = (img.width() as i64, img.height() as i64);
    // prefix[y * (w + 1) + x] = foreground count in row y, columns [0, x)
    let stride = (w + 1) as usize;
    let mut prefix = vec![0u32; stride * h as usize];
    for y in 0..h as usize {
        let row = img.row(y as u32);
        let p = &mut prefix[y * stride..(y + 1) * stride];
        for x in 0..w as usize {
            p[x + 1] = p[x] + (row[x] != 0) as u32;
        }
    }
    let count = |y: i64, lo: i64, hi: i64| -> u32 {
        let base = y as usize * stride;
        prefix[base + hi as usize + 1] - prefix[base + lo as usize]
    };

    let mut out = Raster::filled(img.width(), img.height(), PixelFormat::Binary, 0);
    crate::par::for_each_row(out.data_mut(), w as usize, |y, row| {
        let y = y as i64;
        for (x, dst) in row.iter_mut().enumerate() {
            let x = x as i64;
            let hit = match op {
                Op::Dilate => k.spans.iter().any(|&(dy, lo, hi)| {
                    let sy = y - dy;
                    let (a, b) = (x - hi, x - lo);
                    if sy < 0 || sy >= h {
                        return border_fg;
                    }
                    if border_fg && (a < 0 || b >= w) {
                        return true;
                    }
                    let (a, b) = (a.max(0), b.min(w - 1));
                    a <= b && count(sy, a, b) > 0
                }),
                Op::Erode => k.spans.iter().all(|&(dy, lo, hi)| {
                    let sy = y + dy;
                    let (a, b) = (x + lo, x + hi);
                    if sy < 0 || sy >= h {
                        return border_fg;
                    }
                    if !border_fg && (a < 0 || b >= w) {
                        return false;
                    }
                    let (a, b) = (a.max(0), b.min(w - 1));
                    a > b || count(sy, a, b) == (b - a + 1) as u32
                }),
            };
            if hit {
                *dst = 255;
            }
        }
    });
    out
}

pub fn dilate(img: &Raster, k: &Kernel, iterations: u32) -> Result<Raster> {
    dilate_with_border(img, k, iterations, false)
}

pub fn erode(img: &Raster, k: &Kernel, iterations: u32) -> Result<Raster> {
    erode_with_border(img, k, iterations, false)
}

/// Dilation where out-of-image pixels read as foreground when `border_fg`.
pub fn dilate_with_border(
    img: &Raster,
    k: &Kernel,
    iterations: u32,
    border_fg: bool,
) -> Result<Raster> {
    check(img, iterations, "dilate")?;
    let mut cur = apply_once(img, k, Op::Dilate, border_fg);
    for _ in 1..iterations {
        cur = apply_once(&cur, k, Op::Dilate, border_fg);
    }
    Ok(cur)
}

/// Erosion where out-of-image pixels read as foreground when `border_fg`.
pub fn erode_with_border(
    img: &Raster,
    k: &Kernel,
    iterations: u32,
    border_fg: bool,
) -> Result<Raster> {
    check(img, iterations, "erode")?;
    let mut cur = apply_once(img, k, Op::Erode, border_fg);
    for _ in 1..iterations {
        cur = apply_once(&cur, k, Op::Erode, border_fg);
    }
    Ok(cur)
}

/// Erosion followed by dilation.
pub fn open(img: &Raster, k: &Kernel) -> Result<Raster> {
    dilate(&erode(img, k, 1)?, k, 1)
}

/// Dilation followed by erosion.
pub fn close(img: &Raster, k: &Kernel) -> Result<Raster> {
    erode(&dilate(img, k, 1)?, k, 1)
}

/// Morphological reconstruction by dilation: the 8-connected components of
/// `mask` that contain at least one `marker` pixel.
pub fn reconstruct(marker: &Raster, mask: &Raster) -> Result<Raster> {
    marker.expect_format(PixelFormat::Binary, "reconstruct")?;
    let labeling = super::label_components(mask)?;
    if marker.width() != mask.width() || marker.height() != mask.height() {
        return Err(Error::Parameter("reconstruct: dimension mismatch".into()));
    }
    let mut keep = vec![false; labeling.components.len() + 1];
    for (i, &l) in labeling.labels.iter().enumerate() {
        if l != 0 && marker.data()[i] != 0 {
            keep[l as usize] = true;
        }
    }
    let data = labeling
        .labels
        .iter()
        .map(|&l| if keep[l as usize] && l != 0 { 255 } else { 0 })
        .collect();
    Raster::new(mask.width(), mask.height(), PixelFormat::Binary, data)
}
