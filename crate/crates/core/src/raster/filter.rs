use super::{PixelFormat, Raster};
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian weights. `sigma <= 0` selects
/// `0.3 * ((ksize - 1) * 0.5 - 1) + 0.8`.
pub fn gaussian_kernel_1d(ksize: u32, sigma: f64) -> Result<Vec<f64>> {
    if ksize == 0 || ksize.is_multiple_of(2) {
        return Err(Error::Parameter(format!(
            "gaussian kernel size must be odd, got {ksize}"
        )));
    }
    let sigma = if sigma > 0.0 {
        sigma
    } else {
        0.3 * ((ksize as f64 - 1.0) * 0.5 - 1.0) + 0.8
    };
    let r = (ksize / 2) as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Separable Gaussian blur with border replication and round-half-up output.
pub fn gaussian_blur(img: &Raster, ksize: u32, sigma: f64) -> Result<Raster> {
    img.expect_format(PixelFormat::Gray8, "gaussian_blur")?;
    let k = gaussian_kernel_1d(ksize, sigma)?;
    let r = (ksize / 2) as i64;
    let (w, h) = (img.width() as usize, img.height() as usize);

    let mut horiz = vec![0f64; w * h];
    crate::par::for_each_row(&mut horiz, w, |y, row| {
        let src = img.row(y as u32);
        for (x, dst) in row.iter_mut().enumerate() {
            *dst = k
                .iter()
                .enumerate()
                .map(|(i, wgt)| {
                    let sx = (x as i64 + i as i64 - r).clamp(0, w as i64 - 1) as usize;
                    wgt * src[sx] as f64
                })
                .sum();
        }
    });

    let mut out = Raster::filled(img.width(), img.height(), PixelFormat::Gray8, 0);
    crate::par::for_each_row(out.data_mut(), w, |y, row| {
        for (x, dst) in row.iter_mut().enumerate() {
            let v: f64 = k
                .iter()
                .enumerate()
                .map(|(i, wgt)| {
                    let sy = (y as i64 + i as i64 - r).clamp(0, h as i64 - 1) as usize;
                    wgt * horiz[sy * w + x]
                })
                .sum();
            *dst = round_half_up(v);
        }
    });
    Ok(out)
}

#[inline]
pub(crate) fn round_half_up(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}
