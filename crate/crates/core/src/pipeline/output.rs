use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::cleanup::{ArtifactKind, BinarizeMethod};
use crate::layout::{AnchorClass, AnchorMatch};
use crate::raster::{BBox, Point};
use crate::tables::SourceLayer;

pub const SCHEMA_VERSION: u32 = 1;

/// The published JSON schema for [`InvoiceExtraction`].
pub const SCHEMA_JSON: &str = include_str!("../../schema/invoice-extraction.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub path: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageNote {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpOutcome {
    Applied,
    SkippedUpright,
    SkippedNoQuad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub warp: WarpOutcome,
    pub quad: Option<[Point; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalRecord {
    pub kind: ArtifactKind,
    pub pixels: usize,
    pub boxes: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub keyword: String,
    pub class: AnchorClass,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
}

impl From<&AnchorMatch> for AnchorRecord {
    fn from(a: &AnchorMatch) -> Self {
        AnchorRecord {
            keyword: a.keyword.clone(),
            class: a.class,
            bbox: a.word_box,
            score: a.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionsRecord {
    pub header: BBox,
    pub product: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// True when any stage fell back or failed.
    pub degraded: bool,
    pub degraded_stages: Vec<StageNote>,
    pub geometry: GeometryRecord,
    pub binarization: Option<BinarizeMethod>,
    /// Artifacts removed from the page, in stage order.
    pub removed: Vec<RemovalRecord>,
    pub anchors: Vec<AnchorRecord>,
    pub sections: Option<SectionsRecord>,
    pub header_layer: Option<SourceLayer>,
    pub header_fallbacks: Vec<String>,
    pub discarded_lines: Vec<String>,
    pub totals: Vec<IndexMap<String, String>>,
    pub continuation_rows: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub timings_ms: IndexMap<String, f64>,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            degraded: false,
            degraded_stages: Vec::new(),
            geometry: GeometryRecord {
                warp: WarpOutcome::SkippedNoQuad,
                quad: None,
            },
            binarization: None,
            removed: Vec::new(),
            anchors: Vec::new(),
            sections: None,
            header_layer: None,
            header_fallbacks: Vec::new(),
            discarded_lines: Vec::new(),
            totals: Vec::new(),
            continuation_rows: 0,
            notes: Vec::new(),
            timings_ms: IndexMap::new(),
        }
    }
}

impl Diagnostics {
    pub(crate) fn degrade(&mut self, stage: &str, reason: impl Into<String>) {
        self.degraded = true;
        self.degraded_stages.push(StageNote {
            stage: stage.into(),
            reason: reason.into(),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvoiceExtraction {
    pub schema: u32,
    pub source: Source,
    pub header: IndexMap<String, String>,
    pub line_items: Vec<IndexMap<String, String>>,
    pub diagnostics: Diagnostics,
}

impl InvoiceExtraction {
    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
