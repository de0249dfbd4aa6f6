use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::strip_colon;
use crate::layout::{group_lines, AnchorClass, Lexicon};
use crate::ocr::OcrWord;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RowwiseKv {
    pub pairs: Vec<(String, String)>,
    /// Lines that yielded no pair.
    pub discarded: Vec<String>,
}

fn value_patterns() -> &'static [Regex; 3] {
    static PATTERNS: OnceLock<[Regex; 3]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"^\d{1,2}[-/]\d{1,2}[-/]\d{2,4}$").unwrap(),
            Regex::new(r"^[\d,]+\.\d{2}$").unwrap(),
            Regex::new(r"^[A-Z]{2,}\d+$").unwrap(),
        ]
    })
}

fn looks_like_value(text: &str) -> bool {
    value_patterns().iter().any(|re| re.is_match(text))
}

/// Key/value pairs from free text lines.
///
/// A line with a colon splits at its first colon. A line with no colon that
/// matches a metadata keyword becomes a pending key; a later line whose whole
/// text looks like a date, amount or identifier becomes its value. Keys are
/// never empty; everything unused lands in `discarded`.
pub fn extract_rowwise_kv(words: &[OcrWord], lexicon: &Lexicon, threshold: f64) -> RowwiseKv {
    let mut out = RowwiseKv::default();
    let mut pending: Option<String> = None;
    for line in group_lines(words) {
        let text = line
            .iter()
            .flat_map(|w| w.text.split_whitespace())
            .collect::<Vec<_>>()
            .join(" ");
        if text.is_empty() {
            continue;
        }
        if let Some((k, v)) = text.split_once(':') {
            let key = k.trim().to_string();
            let value = v.trim().to_string();
            if key.is_empty() {
                out.discarded.push(text);
            } else if value.is_empty() {
                if let Some(old) = pending.replace(key) {
                    out.discarded.push(old);
                }
            } else {
                out.pairs.push((key, value));
            }
            continue;
        }
        if looks_like_value(&text) {
            match pending.take() {
                Some(key) => out.pairs.push((key, text)),
                None => out.discarded.push(text),
            }
            continue;
        }
        if lexicon.best_match(&text, Some(AnchorClass::Metadata), threshold).is_some() {
            if let Some(old) = pending.replace(strip_colon(&text)) {
                out.discarded.push(old);
            }
            continue;
        }
        out.discarded.push(text);
    }
    out.discarded.extend(pending);
    out
}
