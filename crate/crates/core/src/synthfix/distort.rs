use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::raster::{BBox, PixelFormat, Point, Raster};

/// Canvas color around a warped page.
pub const BACKGROUND: [u8; 3] = [38, 40, 44];

/// Converts HSV (`h` in degrees, `s`, `v` in `[0, 1]`) to RGB.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|u| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

fn cubic(p: [Point; 4], t: f64) -> Point {
    let u = 1.0 - t;
    let (a, b, c, d) = (u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t);
    Point::new(
        a * p[0].x + b * p[1].x + c * p[2].x + d * p[3].x,
        a * p[0].y + b * p[1].y + c * p[2].y + d * p[3].y,
    )
}

/// Draws one pen scribble (two chained cubic strokes, 3 px wide) inside
/// `zone` and marks its pixels in `mask`.
pub fn draw_scribble<R: Rng>(img: &mut Raster, mask: &mut Raster, zone: BBox, rng: &mut R) {
    let hue = rng.gen_range(205.0..=235.0);
    let sat = rng.gen_range(0.5..=0.9);
    let val = rng.gen_range(0.55..=0.85);
    let color = hsv_to_rgb(hue, sat, val);
    let (x0, x1) = (zone.x as f64 + 2.0, zone.right() as f64 - 3.0);
    let (y0, y1) = (zone.y as f64 + 2.0, zone.bottom() as f64 - 3.0);
    let pick = |rng: &mut R| Point::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
    let start = pick(rng);
    let mid = pick(rng);
    let curves = [
        [start, pick(rng), pick(rng), mid],
        [mid, pick(rng), pick(rng), pick(rng)],
    ];
    for curve in curves {
        let steps = 600;
        for i in 0..=steps {
            let p = cubic(curve, i as f64 / steps as f64);
            let (cx, cy) = (p.x.round() as i64, p.y.round() as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (x, y) = (cx + dx, cy + dy);
                    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                        img.set_rgb(x as u32, y as u32, color);
                        mask.set(x as u32, y as u32, 255);
                    }
                }
            }
        }
    }
}

/// Renders `page` (and its binary masks) through `h` (page to canvas) onto a
/// `width x height` canvas. The image is sampled bilinearly, masks by nearest
/// neighbour; canvas pixels outside the page get [`BACKGROUND`].
pub fn warp_page(
    page: &Raster,
    masks: &[&Raster],
    h: &Homography,
    width: u32,
    height: u32,
) -> Result<(Raster, Vec<Raster>)> {
    let inv = h.inverse()?;
    let (pw, ph) = (page.width() as f64, page.height() as f64);
    let mut img = Raster::filled(width, height, PixelFormat::Rgb8, 0);
    let mut out_masks: Vec<Raster> = masks
        .iter()
        .map(|_| Raster::filled(width, height, PixelFormat::Binary, 0))
        .collect();
    for y in 0..height {
        for x in 0..width {
            let p = inv.apply(Point::new(x as f64, y as f64));
            if !(p.x >= -0.5 && p.y >= -0.5 && p.x < pw - 0.5 && p.y < ph - 0.5) {
                img.set_rgb(x, y, BACKGROUND);
                continue;
            }
            let sx = p.x.clamp(0.0, pw - 1.0);
            let sy = p.y.clamp(0.0, ph - 1.0);
            let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
            let (x1, y1) = ((x0 + 1).min(page.width() - 1), (y0 + 1).min(page.height() - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let (a, b) = (page.get_rgb(x0, y0), page.get_rgb(x1, y0));
            let (c, d) = (page.get_rgb(x0, y1), page.get_rgb(x1, y1));
            let mut rgb = [0u8; 3];
            for k in 0..3 {
                let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
                let bot = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
                rgb[k] = (top * (1.0 - fy) + bot * fy).round() as u8;
            }
            img.set_rgb(x, y, rgb);
            let (nx, ny) = (
                (p.x.round().max(0.0) as u32).min(page.width() - 1),
                (p.y.round().max(0.0) as u32).min(page.height() - 1),
            );
            for (src, dst) in masks.iter().zip(out_masks.iter_mut()) {
                if src.get(nx, ny) != 0 {
                    dst.set(x, y, 255);
                }
            }
        }
    }
    Ok((img, out_masks))
}

/// Left-to-right multiplicative shading, from 1.0 down to `1 - depth`.
pub fn apply_illumination(img: &mut Raster, depth: f64) {
    let w = img.width().max(2) as f64 - 1.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let f = 1.0 - depth * x as f64 / w;
            let rgb = img.get_rgb(x, y).map(|v| (v as f64 * f).round() as u8);
            img.set_rgb(x, y, rgb);
        }
    }
}

/// Adds zero-mean Gaussian noise, one sample per pixel shared by all channels.
pub fn apply_noise<R: Rng>(img: &mut Raster, sigma: f64, rng: &mut R) -> Result<()> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Generation(format!("noise sigma: {e}")))?;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let n = normal.sample(rng);
            let rgb = img
                .get_rgb(x, y)
                .map(|v| (v as f64 + n).round().clamp(0.0, 255.0) as u8);
            img.set_rgb(x, y, rgb);
        }
    }
    Ok(())
}
