//! `<image>.gt.json` sidecar encoding. Masks travel as base64 PNG strings.

use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;

use super::GroundTruth;
use crate::error::{Error, Result};
use crate::raster::{decode_image, encode_png, Raster};

pub(super) mod mask_png {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mask: &Raster, s: S) -> std::result::Result<S::Ok, S::Error> {
        let png = encode_png(mask).map_err(serde::ser::Error::custom)?;
        s.serialize_str(&STANDARD.encode(png))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Raster, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = STANDARD.decode(text.as_bytes()).map_err(de::Error::custom)?;
        let img = decode_image(&bytes).map_err(de::Error::custom)?;
        Ok(img.to_binary())
    }
}

/// Sidecar location for an image: the extension is replaced by `gt.json`.
pub fn sidecar_path(image: &Path) -> PathBuf {
    image.with_extension("gt.json")
}

impl GroundTruth {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_sidecar(&self, image: &Path) -> Result<PathBuf> {
        let path = sidecar_path(image);
        std::fs::write(&path, self.to_json()?)?;
        Ok(path)
    }

    pub fn read_sidecar(image: &Path) -> Result<Self> {
        let path = sidecar_path(image);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Input {
            path: path.clone(),
            message: format!("cannot read ground-truth sidecar: {e}"),
        })?;
        GroundTruth::from_json(&text).map_err(|e| Error::Input {
            path,
            message: format!("invalid ground-truth sidecar: {e}"),
        })
    }
}
