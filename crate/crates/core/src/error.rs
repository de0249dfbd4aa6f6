use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no document found: {0}")]
    NoDocument(String),

    #[error("OCR engine error: {message}")]
    Engine { message: String, raw: String },

    #[error("segmentation error: {0}")]
    Segmentation(String),

    #[error("lattice not found: {0}")]
    LatticeNotFound(String),

    #[error("box fallback not applicable: {0}")]
    FallbackNotApplicable(String),

    #[error("table error: {0}")]
    Table(String),

    #[error("fixture generation error: {0}")]
    Generation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error for {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn engine(message: impl Into<String>, raw: impl Into<String>) -> Self {
        Error::Engine {
            message: message.into(),
            raw: raw.into(),
        }
    }
}
