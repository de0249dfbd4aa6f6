//! Owned pixel grids and the low-level operations every later stage builds on.
//!
//! A [`Raster`] is immutable once built from the point of view of the public
//! operations: each operation takes `&Raster` and returns a fresh one.

mod color;
mod components;
mod draw;
mod edges;
mod filter;
mod hull;
mod io;
mod morphology;
mod threshold;

pub use color::{equalize_histogram, equalization_map, rgb_to_hsv, to_grayscale, Hsv};
pub use components::{connected_components, label_components, Component, Labeling};
pub use draw::{draw_line, draw_rect_outline, fill_rect};
pub use edges::canny_edges;
pub use filter::{gaussian_blur, gaussian_kernel_1d};
pub use hull::{convex_hull, polygon_area};
pub use io::{decode_image, encode_png, read_image, write_png};
pub use morphology::{
    close, dilate, dilate_with_border, erode, erode_with_border, open, reconstruct, Kernel,
    KernelShape,
};
pub use threshold::{adaptive_threshold, otsu_threshold_value, threshold_otsu};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelFormat {
    Rgb8,
    Gray8,
    /// One byte per pixel, restricted to 0 and 255.
    Binary,
}

impl PixelFormat {
    pub const fn channels(self) -> usize {
        match self {
            PixelFormat::Rgb8 => 3,
            PixelFormat::Gray8 | PixelFormat::Binary => 1,
        }
    }
}

/// 2-D point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Axis-aligned pixel box covering columns `x..x + w` and rows `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        BBox { x, y, w, h }
    }

    /// Box spanning the inclusive pixel range `[x0, x1] x [y0, y1]`.
    pub fn from_corners(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    }

    pub const fn right(&self) -> u32 {
        self.x + self.w
    }

    pub const fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub const fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x as f64
            && p.x < self.right() as f64
            && p.y >= self.y as f64
            && p.y < self.bottom() as f64
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection(other).map_or(0, |b| b.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Length of the overlap of the x-intervals.
    pub fn x_overlap(&self, other: &BBox) -> u32 {
        self.right()
            .min(other.right())
            .saturating_sub(self.x.max(other.x))
    }

    /// Length of the overlap of the y-intervals.
    pub fn y_overlap(&self, other: &BBox) -> u32 {
        self.bottom()
            .min(other.bottom())
            .saturating_sub(self.y.max(other.y))
    }

    pub fn translate(&self, dx: u32, dy: u32) -> BBox {
        BBox::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Grows the box by `m` on every side, clipped to a `width x height` image.
    pub fn expand(&self, m: u32, width: u32, height: u32) -> BBox {
        let x0 = self.x.saturating_sub(m);
        let y0 = self.y.saturating_sub(m);
        let x1 = (self.right() + m).min(width);
        let y1 = (self.bottom() + m).min(height);
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn clip(&self, width: u32, height: u32) -> Option<BBox> {
        self.intersection(&BBox::new(0, 0, width, height))
    }
}

/// Owned row-major image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    format: PixelFormat,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, format: PixelFormat, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * format.channels();
        if data.len() != expected {
            return Err(Error::Parameter(format!(
                "buffer length {} does not match {width}x{height} {format:?} ({expected})",
                data.len()
            )));
        }
        if format == PixelFormat::Binary && data.iter().any(|&v| v != 0 && v != 255) {
            return Err(Error::Format("binary raster holds values other than 0/255".into()));
        }
        Ok(Raster {
            width,
            height,
            format,
            data,
        })
    }

    /// Raster with every channel byte set to `value`.
    ///
    /// Panics on zero dimensions or a non-0/255 binary fill.
    pub fn filled(width: u32, height: u32, format: PixelFormat, value: u8) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        assert!(
            format != PixelFormat::Binary || value == 0 || value == 255,
            "binary fill must be 0 or 255"
        );
        Raster {
            width,
            height,
            format,
            data: vec![value; width as usize * height as usize * format.channels()],
        }
    }

    /// Single-channel raster from a per-pixel function.
    pub fn from_fn(
        width: u32,
        height: u32,
        format: PixelFormat,
        f: impl Fn(u32, u32) -> u8 + Send + Sync,
    ) -> Self {
        assert_ne!(format, PixelFormat::Rgb8, "use from_fn_rgb for RGB rasters");
        let mut r = Raster::filled(width, height, format, 0);
        crate::par::for_each_row(&mut r.data, width as usize, |y, row| {
            for (x, v) in row.iter_mut().enumerate() {
                let p = f(x as u32, y as u32);
                *v = if format == PixelFormat::Binary && p != 0 { 255 } else { p };
            }
        });
        r
    }

    pub fn from_fn_rgb(
        width: u32,
        height: u32,
        f: impl Fn(u32, u32) -> [u8; 3] + Send + Sync,
    ) -> Self {
        let mut r = Raster::filled(width, height, PixelFormat::Rgb8, 0);
        crate::par::for_each_row(&mut r.data, width as usize * 3, |y, row| {
            for (x, px) in row.chunks_exact_mut(3).enumerate() {
                px.copy_from_slice(&f(x as u32, y as u32));
            }
        });
        r
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn format(&self) -> PixelFormat {
        self.format
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn bounds(&self) -> BBox {
        BBox::new(0, 0, self.width, self.height)
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.format.channels()
    }

    /// Single-channel value (first channel for RGB).
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn get_rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.index(x, y);
        match self.format {
            PixelFormat::Rgb8 => [self.data[i], self.data[i + 1], self.data[i + 2]],
            _ => [self.data[i]; 3],
        }
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let i = self.index(x, y);
        let c = self.format.channels();
        let v = if self.format == PixelFormat::Binary && value != 0 {
            255
        } else {
            value
        };
        self.data[i..i + c].fill(v);
    }

    #[inline]
    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.index(x, y);
        match self.format {
            PixelFormat::Rgb8 => self.data[i..i + 3].copy_from_slice(&rgb),
            PixelFormat::Gray8 => self.data[i] = color::luma(rgb),
            PixelFormat::Binary => self.data[i] = if color::luma(rgb) >= 128 { 255 } else { 0 },
        }
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let stride = self.width as usize * self.format.channels();
        &self.data[y as usize * stride..(y as usize + 1) * stride]
    }

    pub fn is_foreground(&self, x: u32, y: u32) -> bool {
        self.get(x, y) != 0
    }

    pub(crate) fn expect_format(&self, format: PixelFormat, op: &str) -> Result<()> {
        if self.format == format {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "{op} expects {format:?} input, got {:?}",
                self.format
            )))
        }
    }

    /// Copy of the pixels inside `b`, which must lie within the image.
    pub fn crop(&self, b: BBox) -> Result<Raster> {
        if b.w == 0 || b.h == 0 || !self.bounds().contains(&b) {
            return Err(Error::Parameter(format!(
                "crop box {b:?} outside {}x{} image",
                self.width, self.height
            )));
        }
        let c = self.format.channels();
        let mut data = Vec::with_capacity(b.area() as usize * c);
        for y in b.y..b.bottom() {
            let start = self.index(b.x, y);
            data.extend_from_slice(&self.data[start..start + b.w as usize * c]);
        }
        Ok(Raster {
            width: b.w,
            height: b.h,
            format: self.format,
            data,
        })
    }

    /// Copies `src` into `self` with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, src: &Raster, x: u32, y: u32) -> Result<()> {
        if src.format != self.format
            || x + src.width > self.width
            || y + src.height > self.height
        {
            return Err(Error::Parameter("paste source does not fit target".into()));
        }
        let c = self.format.channels();
        for row in 0..src.height {
            let dst = self.index(x, y + row);
            let s = src.index(0, row);
            self.data[dst..dst + src.width as usize * c]
                .copy_from_slice(&src.data[s..s + src.width as usize * c]);
        }
        Ok(())
    }

    /// Reinterprets a single-channel image as binary (`value > 0` is foreground).
    pub fn to_binary(&self) -> Raster {
        let data = match self.format {
            PixelFormat::Rgb8 => self
                .data
                .chunks_exact(3)
                .map(|p| if p.iter().any(|&v| v > 0) { 255 } else { 0 })
                .collect(),
            _ => self.data.iter().map(|&v| if v > 0 { 255 } else { 0 }).collect(),
        };
        Raster {
            width: self.width,
            height: self.height,
            format: PixelFormat::Binary,
            data,
        }
    }

    /// Binary or gray raster relabeled as gray without touching bytes.
    pub fn as_gray(&self) -> Raster {
        let mut r = self.clone();
        if r.format == PixelFormat::Binary {
            r.format = PixelFormat::Gray8;
        }
        r
    }

    pub fn to_rgb(&self) -> Raster {
        match self.format {
            PixelFormat::Rgb8 => self.clone(),
            _ => Raster {
                width: self.width,
                height: self.height,
                format: PixelFormat::Rgb8,
                data: self.data.iter().flat_map(|&v| [v, v, v]).collect(),
            },
        }
    }

    /// Per-byte complement (`255 - v`).
    pub fn invert(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            format: self.format,
            data: self.data.iter().map(|&v| 255 - v).collect(),
        }
    }

    fn zip_binary(&self, other: &Raster, op: &str, f: impl Fn(bool, bool) -> bool) -> Result<Raster> {
        self.expect_format(PixelFormat::Binary, op)?;
        other.expect_format(PixelFormat::Binary, op)?;
        if self.width != other.width || self.height != other.height {
            return Err(Error::Parameter(format!("{op}: dimension mismatch")));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| if f(a != 0, b != 0) { 255 } else { 0 })
            .collect();
        Ok(Raster {
            width: self.width,
            height: self.height,
            format: PixelFormat::Binary,
            data,
        })
    }

    pub fn or(&self, other: &Raster) -> Result<Raster> {
        self.zip_binary(other, "or", |a, b| a || b)
    }

    pub fn and(&self, other: &Raster) -> Result<Raster> {
        self.zip_binary(other, "and", |a, b| a && b)
    }

    pub fn and_not(&self, other: &Raster) -> Result<Raster> {
        self.zip_binary(other, "and_not", |a, b| a && !b)
    }

    /// Number of non-zero pixels (first channel).
    pub fn count_foreground(&self) -> usize {
        let c = self.format.channels();
        self.data.iter().step_by(c).filter(|&&v| v != 0).count()
    }

    /// Number of pixels that are foreground in both rasters.
    pub fn count_overlap(&self, other: &Raster) -> usize {
        self.data
            .iter()
            .step_by(self.format.channels())
            .zip(other.data.iter().step_by(other.format.channels()))
            .filter(|(&a, &b)| a != 0 && b != 0)
            .count()
    }

    /// Nearest-neighbour upscale by an integer factor.
    pub fn upscale(&self, factor: u32) -> Raster {
        if factor <= 1 {
            return self.clone();
        }
        let c = self.format.channels();
        let (w, h) = (self.width * factor, self.height * factor);
        let mut out = Raster {
            width: w,
            height: h,
            format: self.format,
            data: vec![0; w as usize * h as usize * c],
        };
        crate::par::for_each_row(&mut out.data, w as usize * c, |y, row| {
            let sy = y as u32 / factor;
            let src = self.row(sy);
            for x in 0..w as usize {
                let sx = x / factor as usize;
                row[x * c..x * c + c].copy_from_slice(&src[sx * c..sx * c + c]);
            }
        });
        out
    }
}
