use super::OcrWord;
use crate::error::{Error, Result};
use crate::raster::BBox;

pub const TSV_HEADER: &str =
    "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext";

const WORD_LEVEL: u32 = 5;
const COLUMNS: [&str; 12] = [
    "level", "page", "block", "par", "line", "word", "left", "top", "width", "height", "conf",
    "text",
];

/// Paragraph and line numbers fold into one line id: `par * LINE_STRIDE + line`.
const LINE_STRIDE: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TsvParse {
    pub words: Vec<OcrWord>,
    /// Rows that could not be decoded (wrong column count, bad numbers, empty box).
    pub malformed_rows: usize,
}

fn header_matches(line: &str) -> bool {
    let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
    fields.len() == COLUMNS.len()
        && fields
            .iter()
            .zip(COLUMNS)
            .all(|(f, want)| f.trim().trim_end_matches("_num") == want)
}

/// Decodes the engine's 12-column TSV. Word rows (`level == 5`) with a
/// non-negative confidence become words; structural rows are skipped.
pub fn parse_engine_tsv(raw: &str) -> Result<TsvParse> {
    let mut lines = raw.lines();
    let header = lines.next().unwrap_or_default();
    if !header_matches(header) {
        return Err(Error::engine("engine output is missing the TSV header row", raw));
    }
    let mut out = TsvParse::default();
    for line in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        // The text column may be dropped entirely on empty structural rows.
        if fields.len() != 12 && fields.len() != 11 {
            out.malformed_rows += 1;
            continue;
        }
        let ints: Option<Vec<i64>> = fields[..10].iter().map(|f| f.trim().parse().ok()).collect();
        let conf: Option<f32> = fields[10].trim().parse().ok();
        let (Some(ints), Some(conf)) = (ints, conf) else {
            out.malformed_rows += 1;
            continue;
        };
        if ints[0] != WORD_LEVEL as i64 || conf < 0.0 {
            continue;
        }
        let text = fields.get(11).copied().unwrap_or("");
        let (left, top, width, height) = (ints[6], ints[7], ints[8], ints[9]);
        if left < 0 || top < 0 || width <= 0 || height <= 0 || ints[2..6].iter().any(|&v| v < 0) {
            out.malformed_rows += 1;
            continue;
        }
        out.words.push(OcrWord {
            text: text.to_string(),
            bbox: BBox::new(left as u32, top as u32, width as u32, height as u32),
            confidence: conf.min(100.0),
            block_id: ints[2] as u32,
            line_id: ints[3] as u32 * LINE_STRIDE + ints[4] as u32,
            word_id: ints[5] as u32,
        });
    }
    Ok(out)
}

/// Encodes words in the same TSV layout `parse_engine_tsv` reads.
pub fn serialize_tsv(words: &[OcrWord]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for w in words {
        out.push_str(&format!(
            "5\t1\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            w.block_id,
            w.line_id / LINE_STRIDE,
            w.line_id % LINE_STRIDE,
            w.word_id,
            w.bbox.x,
            w.bbox.y,
            w.bbox.w,
            w.bbox.h,
            w.confidence,
            w.text
        ));
    }
    out
}
