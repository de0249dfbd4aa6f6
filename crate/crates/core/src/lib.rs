//! Invoice image to structured JSON.
//!
//! The crate is organized as a chain of stages that each own one concern:
//!
//! * [`raster`]: owned pixel grids and the low-level operations every stage uses
//!   (thresholding, blur, morphology, edges, components, hull, equalization).
//! * [`geometry`]: document boundary detection and perspective rectification.
//! * [`cleanup`]: pen-mark, barcode and grid-line removal plus OCR-ready binarization.
//! * [`ocr`]: the recognition engine contract, a subprocess adapter and a mock engine.
//! * [`layout`]: keyword anchors and header/product section splitting.
//! * [`tables`]: the three-layer header extraction and product row reconstruction.
//! * [`pipeline`]: configuration, orchestration, JSON output and stage dumps.
//! * [`synthfix`]: synthetic invoices with exact ground truth for hermetic tests.
//!
//! Pixel-parallel loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise; see [`par`].

pub mod cleanup;
pub mod error;
pub mod geometry;
pub mod layout;
pub mod ocr;
pub mod par;
pub mod pipeline;
pub mod raster;
pub mod synthfix;
pub mod tables;

pub use error::{Error, Result};
pub use raster::{BBox, PixelFormat, Point, Raster};
