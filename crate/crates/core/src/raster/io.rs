use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use super::{PixelFormat, Raster};
use crate::error::{Error, Result};

/// Decodes PNG or JPEG bytes. Single-channel sources stay Gray8, everything
/// else becomes RGB8 (alpha is dropped, 16-bit is narrowed).
pub fn decode_image(bytes: &[u8]) -> Result<Raster> {
    let img = image::load_from_memory(bytes)?;
    from_dynamic(img)
}

pub fn read_image(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    decode_image(&bytes).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn from_dynamic(img: DynamicImage) -> Result<Raster> {
    match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            Raster::new(w, h, PixelFormat::Gray8, g.into_raw())
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            Raster::new(w, h, PixelFormat::Rgb8, rgb.into_raw())
        }
    }
}

/// PNG bytes; binary rasters are written as 8-bit grayscale.
pub fn encode_png(img: &Raster) -> Result<Vec<u8>> {
    let dynamic = match img.format() {
        PixelFormat::Rgb8 => DynamicImage::ImageRgb8(
            RgbImage::from_raw(img.width(), img.height(), img.data().to_vec())
                .expect("buffer length checked at construction"),
        ),
        PixelFormat::Gray8 | PixelFormat::Binary => DynamicImage::ImageLuma8(
            GrayImage::from_raw(img.width(), img.height(), img.data().to_vec())
                .expect("buffer length checked at construction"),
        ),
    };
    let mut out = Cursor::new(Vec::new());
    dynamic.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn write_png(img: &Raster, path: &Path) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
