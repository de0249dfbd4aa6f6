use std::path::{Path, PathBuf};
use std::process::Command;

use super::{parse_engine_tsv, Frame, OcrConfig, OcrEngine, OcrWord};
use crate::error::{Error, Result};
use crate::raster::{encode_png, Raster};

/// Environment variable naming the engine binary; it wins over configuration.
pub const OCR_BIN_ENV: &str = "INVEXTRACT_OCR_BIN";

/// Drives an external recognizer that prints word-level TSV on stdout.
#[derive(Debug, Clone)]
pub struct ExternalEngine {
    binary: PathBuf,
}

impl ExternalEngine {
    pub fn new(binary: impl Into<PathBuf>) -> Self {
        ExternalEngine {
            binary: binary.into(),
        }
    }

    /// Picks the binary from `INVEXTRACT_OCR_BIN`, then `configured`.
    pub fn resolve(configured: Option<&Path>) -> Result<Self> {
        if let Some(v) = std::env::var_os(OCR_BIN_ENV).filter(|v| !v.is_empty()) {
            return Ok(ExternalEngine::new(v));
        }
        configured
            .map(ExternalEngine::new)
            .ok_or_else(|| Error::engine(format!("no OCR engine configured (set ocr.engine_path or {OCR_BIN_ENV})"), ""))
    }

    pub fn binary(&self) -> &Path {
        &self.binary
    }

    /// Command line handed to the engine for `image`.
    pub fn args(image: &Path, cfg: &OcrConfig) -> Vec<String> {
        vec![
            image.display().to_string(),
            "stdout".into(),
            "--psm".into(),
            cfg.segmentation_mode.psm().to_string(),
            "--oem".into(),
            cfg.engine_mode.oem().to_string(),
            "-l".into(),
            cfg.language.clone(),
            "tsv".into(),
        ]
    }
}

impl OcrEngine for ExternalEngine {
    fn name(&self) -> &str {
        "external"
    }

    fn recognize_image(&self, img: &Raster, _frame: &Frame, cfg: &OcrConfig) -> Result<Vec<OcrWord>> {
        cfg.validate()?;
        let file = tempfile::Builder::new()
            .prefix("invextract-ocr-")
            .suffix(".png")
            .tempfile()?;
        std::fs::write(file.path(), encode_png(img)?)?;
        let output = Command::new(&self.binary)
            .args(Self::args(file.path(), cfg))
            .output()
            .map_err(|e| {
                Error::engine(format!("cannot start OCR engine {}: {e}", self.binary.display()), "")
            })?;
        let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::engine(
                format!("OCR engine exited with {}", output.status),
                format!("{stdout}{stderr}"),
            ));
        }
        if std::str::from_utf8(&output.stdout).is_err() {
            return Err(Error::engine("OCR engine output is not UTF-8", stdout));
        }
        Ok(parse_engine_tsv(&stdout)?.words)
    }
}
