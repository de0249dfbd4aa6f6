use std::path::{Path, PathBuf};

use crate::cleanup::ArtifactMask;
use crate::error::Result;
use crate::geometry::Quad;
use crate::layout::PageSections;
use crate::raster::{draw_line, draw_rect_outline, write_png, BBox, PixelFormat, Raster};

/// File stems of the stage images, in pipeline order.
pub const STAGE_NAMES: [&str; 12] = [
    "01_cropped",
    "02_gray",
    "03_quad_overlay",
    "04_warped",
    "05_penmask",
    "06_barcodemask",
    "07_binary",
    "08_vlines",
    "09_hlines",
    "10_lines_removed",
    "11_sections_overlay",
    "12_rowboxes_overlay",
];

const QUAD_RGB: [u8; 3] = [255, 0, 0];
const HEADER_RGB: [u8; 3] = [0, 160, 255];
const PRODUCT_RGB: [u8; 3] = [0, 200, 0];
const FOOTER_RGB: [u8; 3] = [255, 160, 0];
const ROW_RGB: [u8; 3] = [255, 0, 255];

/// Writes stage images into a directory, or does nothing when disabled.
#[derive(Debug, Default)]
pub struct StageDumper {
    dir: Option<PathBuf>,
}

impl StageDumper {
    pub fn disabled() -> Self {
        StageDumper { dir: None }
    }

    /// Creates the directory and checks it is writable before any work starts.
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Ok(Self::disabled());
        };
        std::fs::create_dir_all(dir)?;
        tempfile::Builder::new().prefix(".probe").tempfile_in(dir)?;
        Ok(StageDumper {
            dir: Some(dir.to_path_buf()),
        })
    }

    pub fn is_enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn put(&self, stem: &str, img: &Raster) -> Result<()> {
        match &self.dir {
            Some(dir) => write_png(img, &dir.join(format!("{stem}.png"))),
            None => Ok(()),
        }
    }
}

pub(crate) fn quad_overlay(base: &Raster, quad: Option<&Quad>) -> Raster {
    let mut out = base.to_rgb();
    if let Some(q) = quad {
        let c = q.corners();
        for i in 0..4 {
            draw_line(&mut out, c[i], c[(i + 1) % 4], QUAD_RGB);
        }
    }
    out
}

pub(crate) fn mask_or_blank(mask: Option<&ArtifactMask>, w: u32, h: u32) -> Raster {
    mask.map(|m| m.mask.clone())
        .unwrap_or_else(|| Raster::filled(w, h, PixelFormat::Binary, 0))
}

pub(crate) fn sections_overlay(base: &Raster, sections: Option<&PageSections>) -> Raster {
    let mut out = base.to_rgb();
    if let Some(s) = sections {
        draw_rect_outline(&mut out, s.header_region, HEADER_RGB);
        draw_rect_outline(&mut out, s.product_region, PRODUCT_RGB);
        if let Some(f) = s.footer_region {
            draw_rect_outline(&mut out, f, FOOTER_RGB);
        }
    }
    out
}

pub(crate) fn boxes_overlay(base: &Raster, boxes: &[BBox]) -> Raster {
    let mut out = base.to_rgb();
    for b in boxes {
        draw_rect_outline(&mut out, *b, ROW_RGB);
    }
    out
}
