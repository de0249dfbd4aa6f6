use super::{PixelFormat, Raster};
use crate::error::{Error, Result};

/// Otsu's threshold: the level maximizing between-class variance, where the
/// lower class is `v <= t`. Ties resolve to the smallest level. A single-valued
/// histogram yields that value.
pub fn otsu_threshold_value(img: &Raster) -> Result<u8> {
    img.expect_format(PixelFormat::Gray8, "threshold_otsu")?;
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    Ok(otsu_from_histogram(&hist))
}

pub(crate) fn otsu_from_histogram(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum();
    let mut best: Option<(u8, f64)> = None;
    let (mut w0, mut s0) = (0u64, 0f64);
    for t in 0..256usize {
        w0 += hist[t];
        s0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = s0 / w0 as f64;
        let m1 = (sum - s0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        match best {
            Some((_, b)) if between <= b * (1.0 + 1e-12) => {}
            _ => best = Some((t as u8, between)),
        }
    }
    match best {
        Some((t, _)) => t,
        // Single occupied level: no split exists.
        None => hist.iter().position(|&c| c > 0).unwrap_or(0) as u8,
    }
}

/// Global Otsu binarization; pixels strictly above the threshold become 255.
pub fn threshold_otsu(img: &Raster) -> Result<(Raster, u8)> {
    let t = otsu_threshold_value(img)?;
    let data = img
        .data()
        .iter()
        .map(|&v| if v > t { 255 } else { 0 })
        .collect();
    Ok((
        Raster::new(img.width(), img.height(), PixelFormat::Binary, data)?,
        t,
    ))
}

/// Local mean thresholding: a pixel is 255 iff `value > mean(block x block) - c`,
/// with the neighbourhood border-replicated. The comparison is exact
/// (`value * n > sum - c * n`), no rounding of the mean.
pub fn adaptive_threshold(img: &Raster, block: u32, c: i32) -> Result<Raster> {
    img.expect_format(PixelFormat::Gray8, "adaptive_threshold")?;
    if block < 3 || block.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "adaptive block size must be odd and >= 3, got {block}"
        )));
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r = block as i64 / 2;
    // Integral image of the replicate-padded source: (w + 2r) x (h + 2r).
    let pw = w + 2 * r;
    let ph = h + 2 * r;
    let stride = (pw + 1) as usize;
    let mut integral = vec![0i64; stride * (ph + 1) as usize];
    for py in 0..ph {
        let sy = (py - r).clamp(0, h - 1) as u32;
        let src = img.row(sy);
        let mut acc = 0i64;
        for px in 0..pw {
            let sx = (px - r).clamp(0, w - 1) as usize;
            acc += src[sx] as i64;
            let i = (py + 1) as usize * stride + (px + 1) as usize;
            integral[i] = integral[i - stride] + acc;
        }
    }
    let n = (block as i64) * (block as i64);
    let mut out = Raster::filled(img.width(), img.height(), PixelFormat::Binary, 0);
    crate::par::for_each_row(out.data_mut(), w as usize, |y, row| {
        let src = img.row(y as u32);
        let y0 = y;
        let y1 = y + block as usize;
        for (x, dst) in row.iter_mut().enumerate() {
            let x1 = x + block as usize;
            let sum = integral[y1 * stride + x1] - integral[y0 * stride + x1]
                - integral[y1 * stride + x]
                + integral[y0 * stride + x];
            if src[x] as i64 * n > sum - c as i64 * n {
                *dst = 255;
            }
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: u8) -> Raster {
        Raster::filled(9, 7, PixelFormat::Gray8, v)
    }

    #[test]
    fn otsu_constant_image() {
        let (bin, t) = threshold_otsu(&constant(77)).unwrap();
        assert_eq!(t, 77);
        assert_eq!(bin.count_foreground(), 0);
    }

    #[test]
    fn otsu_bimodal_halves() {
        let img = Raster::from_fn(10, 4, PixelFormat::Gray8, |x, _| if x < 5 { 10 } else { 240 });
        let (bin, t) = threshold_otsu(&img).unwrap();
        assert!((10..240).contains(&t));
        // Ties across the flat plateau resolve to the smallest level.
        assert_eq!(t, 10);
        for y in 0..4 {
            for x in 0..10 {
                assert_eq!(bin.get(x, y) == 255, x >= 5);
            }
        }
    }

    #[test]
    fn adaptive_constant_image() {
        let pos = adaptive_threshold(&constant(120), 15, 10).unwrap();
        assert_eq!(pos.count_foreground(), pos.pixel_count());
        let neg = adaptive_threshold(&constant(120), 15, -10).unwrap();
        assert_eq!(neg.count_foreground(), 0);
    }

    #[test]
    fn adaptive_rejects_bad_blocks() {
        assert!(adaptive_threshold(&constant(1), 4, 0).is_err());
        assert!(adaptive_threshold(&constant(1), 1, 0).is_err());
        assert!(adaptive_threshold(&Raster::filled(3, 3, PixelFormat::Binary, 0), 3, 0).is_err());
    }
}
