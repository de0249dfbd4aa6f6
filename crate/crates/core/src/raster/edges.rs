use std::collections::VecDeque;

use super::{PixelFormat, Raster};
use crate::error::{Error, Result};

/// Sobel gradients (border-replicated) as `(gx, gy)` per pixel.
pub(crate) fn sobel(img: &Raster) -> (Vec<f32>, Vec<f32>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let px = |x: i64, y: i64| -> f32 {
        img.get(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32) as f32
    };
    let n = (w * h) as usize;
    let mut gx = vec![0f32; n];
    let mut gy = vec![0f32; n];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            gx[i] = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            gy[i] = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Canny edge detector: Sobel gradients, non-maximum suppression along the
/// quantized gradient direction, then double thresholding with 8-connected
/// hysteresis. Magnitudes are L2 on the raw Sobel responses.
pub fn canny_edges(img: &Raster, low: f64, high: f64) -> Result<Raster> {
    img.expect_format(PixelFormat::Gray8, "canny_edges")?;
    if !(low > 0.0 && low < high) {
        return Err(Error::Parameter(format!(
            "canny thresholds must satisfy 0 < low < high, got {low} / {high}"
        )));
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (gx, gy) = sobel(img);
    let mag: Vec<f32> = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect();
    let at = |x: i64, y: i64| -> f32 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            mag[(y * w + x) as usize]
        }
    };

    // 0 = none, 1 = weak, 2 = strong
    let mut class = vec![0u8; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = mag[i];
            if (m as f64) < low || m == 0.0 {
                continue;
            }
            let angle = (gy[i] as f64).atan2(gx[i] as f64).to_degrees().rem_euclid(180.0);
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let before = at(x - dx, y - dy);
            let after = at(x + dx, y + dy);
            // Plateaus keep the first pixel along the gradient direction.
            if m > before && m >= after {
                class[i] = if (m as f64) >= high { 2 } else { 1 };
            }
        }
    }

    let mut out = Raster::filled(img.width(), img.height(), PixelFormat::Binary, 0);
    let mut queue: VecDeque<(i64, i64)> = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if class[(y * w + x) as usize] == 2 {
                queue.push_back((x, y));
                out.set(x as u32, y as u32, 255);
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if class[j] == 1 && !out.is_foreground(nx as u32, ny as u32) {
                    out.set(nx as u32, ny as u32, 255);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    Ok(out)
}
