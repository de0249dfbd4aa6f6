use super::{PixelFormat, Raster};
use crate::error::Result;

/// BT.601 luma with round-half-up: `(299 R + 587 G + 114 B + 500) / 1000`.
#[inline]
pub(crate) fn luma([r, g, b]: [u8; 3]) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

pub fn to_grayscale(img: &Raster) -> Result<Raster> {
    img.expect_format(PixelFormat::Rgb8, "to_grayscale")?;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| luma([p[0], p[1], p[2]]))
        .collect();
    Raster::new(img.width(), img.height(), PixelFormat::Gray8, data)
}

/// Lookup table produced by histogram equalization.
///
/// Each level maps to the output level whose quantile bin contains its
/// cumulative share: `max(0, ceil(256 * cdf(v) / N) - 1)`. Levels that do not
/// occur keep the value of the nearest lower occupied level, so the table is
/// monotone non-decreasing.
pub fn equalization_map(img: &Raster) -> Result<[u8; 256]> {
    img.expect_format(PixelFormat::Gray8, "equalize_histogram")?;
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let n = img.pixel_count() as u64;
    let mut lut = [0u8; 256];
    let mut cdf = 0u64;
    for (v, &count) in hist.iter().enumerate() {
        cdf += count;
        let level = (256 * cdf).div_ceil(n);
        lut[v] = level.saturating_sub(1).min(255) as u8;
    }
    Ok(lut)
}

pub fn equalize_histogram(img: &Raster) -> Result<Raster> {
    let lut = equalization_map(img)?;
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    Raster::new(img.width(), img.height(), PixelFormat::Gray8, data)
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> Hsv {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Hsv {
        h: h.rem_euclid(360.0),
        s,
        v: max,
    }
}
