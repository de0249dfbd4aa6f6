//! Keyword anchors and header / product-table section splitting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocr::OcrWord;
use crate::raster::BBox;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorClass {
    Metadata,
    TableHeader,
    Total,
}

impl AnchorClass {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "metadata" => Some(AnchorClass::Metadata),
            "table-header" => Some(AnchorClass::TableHeader),
            "total" => Some(AnchorClass::Total),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub class: AnchorClass,
    pub keyword: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub entries: Vec<LexiconEntry>,
}

const DEFAULT_LEXICON: &str = "\
metadata\tInvoice No
metadata\tInvoice Date
metadata\tDate
metadata\tDue Date
metadata\tBuyer
metadata\tSeller
metadata\tGSTIN
metadata\tPO No
metadata\tBill To
metadata\tShip To
table-header\tHSN
table-header\tDescription
table-header\tProduct
table-header\tQty
table-header\tQuantity
table-header\tRate
table-header\tAmount
total\tTotal
total\tGrand Total
";

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::parse(DEFAULT_LEXICON).expect("built-in lexicon parses")
    }
}

impl Lexicon {
    /// Parses `class<TAB>keyword` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (class, keyword) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("lexicon line {}: expected class<TAB>keyword", n + 1)))?;
            let class = AnchorClass::parse(class)
                .ok_or_else(|| Error::Config(format!("lexicon line {}: unknown class {class:?}", n + 1)))?;
            if normalize(keyword).is_empty() {
                return Err(Error::Config(format!("lexicon line {}: empty keyword", n + 1)));
            }
            entries.push(LexiconEntry {
                class,
                keyword: keyword.trim().to_string(),
            });
        }
        if entries.is_empty() {
            return Err(Error::Config("lexicon has no entries".into()));
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Lexicon::parse(&text)
    }

    /// Best-scoring entry of `class` for `text`, if it reaches `threshold`.
    pub fn best_match(&self, text: &str, class: Option<AnchorClass>, threshold: f64) -> Option<(&LexiconEntry, f64)> {
        self.entries
            .iter()
            .filter(|e| class.is_none_or(|c| e.class == c))
            .map(|e| (e, fuzzy_match(text, &e.keyword)))
            .filter(|(_, s)| *s >= threshold)
            .fold(None, |best: Option<(&LexiconEntry, f64)>, (e, s)| match best {
                Some((_, b)) if b >= s => best,
                _ => Some((e, s)),
            })
    }
}

/// Lowercase, punctuation removed, whitespace collapsed.
pub fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)` on normalized strings; 0 when
/// either side normalizes to nothing.
pub fn fuzzy_match(candidate: &str, keyword: &str) -> f64 {
    let (a, b) = (normalize(candidate), normalize(keyword));
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    strsim::normalized_levenshtein(&a, &b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorMatch {
    pub keyword: String,
    pub class: AnchorClass,
    pub word_box: BBox,
    pub score: f64,
    pub y_center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub fuzzy_threshold: f64,
    /// Anchor clusters join when closer than this many word heights.
    pub cluster_factor: f64,
    /// Words are adjacent when their gap is at most this many character widths.
    pub adjacency_factor: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            fuzzy_threshold: DEFAULT_MATCH_THRESHOLD,
            cluster_factor: 2.5,
            adjacency_factor: 1.5,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fuzzy_threshold > 0.0 && self.fuzzy_threshold <= 1.0) {
            return Err(Error::Config("fuzzy_threshold must lie in (0, 1]".into()));
        }
        if self.cluster_factor <= 0.0 || self.adjacency_factor <= 0.0 {
            return Err(Error::Config("layout factors must be positive".into()));
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Groups words into text lines: same `(block_id, line_id)` or vertical
/// overlap of at least half the shorter box. Lines come top to bottom, words
/// left to right.
pub fn group_lines(words: &[OcrWord]) -> Vec<Vec<OcrWord>> {
    let n = words.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&words[i], &words[j]);
            let same_ids = a.block_id == b.block_id && a.line_id == b.line_id;
            let overlap = a.bbox.y_overlap(&b.bbox) as f64 >= 0.5 * a.bbox.h.min(b.bbox.h) as f64;
            if same_ids || overlap {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<OcrWord>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(words[i].clone()),
            None => groups.push((r, vec![words[i].clone()])),
        }
    }
    let mut lines: Vec<Vec<OcrWord>> = groups.into_iter().map(|(_, g)| g).collect();
    for line in &mut lines {
        line.sort_by(|a, b| a.bbox.x.cmp(&b.bbox.x).then(a.ids().cmp(&b.ids())));
    }
    let top = |l: &Vec<OcrWord>| l.iter().map(|w| w.bbox.center().y).fold(f64::INFINITY, f64::min);
    lines.sort_by(|a, b| top(a).total_cmp(&top(b)).then(a[0].bbox.x.cmp(&b[0].bbox.x)));
    lines
}

/// Median per-character width over all words.
fn median_char_width(words: &[OcrWord]) -> f64 {
    median(
        words
            .iter()
            .filter(|w| !w.text.is_empty())
            .map(|w| w.bbox.w as f64 / w.text.chars().count() as f64)
            .collect(),
    )
    .unwrap_or(0.0)
}

/// Matches lexicon keywords against single words and against runs of
/// horizontally adjacent words on the same line (as many words as the
/// keyword has). Each keyword matches at most once per line: best score,
/// then leftmost.
pub fn find_anchors(words: &[OcrWord], lexicon: &Lexicon, cfg: &LayoutConfig) -> Vec<AnchorMatch> {
    let max_gap = cfg.adjacency_factor * median_char_width(words);
    let mut out = Vec::new();
    for line in group_lines(words) {
        for entry in &lexicon.entries {
            let k = normalize(&entry.keyword).split(' ').count();
            let mut best: Option<AnchorMatch> = None;
            for start in 0..line.len() {
                if start + k > line.len() {
                    break;
                }
                let run = &line[start..start + k];
                let adjacent = run.windows(2).all(|p| {
                    let gap = p[1].bbox.x as f64 - p[0].bbox.right() as f64;
                    gap <= max_gap
                });
                if !adjacent {
                    continue;
                }
                let text = run.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" ");
                let score = fuzzy_match(&text, &entry.keyword);
                if score < cfg.fuzzy_threshold {
                    continue;
                }
                let bbox = run.iter().skip(1).fold(run[0].bbox, |acc, w| acc.union(&w.bbox));
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(AnchorMatch {
                        keyword: entry.keyword.clone(),
                        class: entry.class,
                        word_box: bbox,
                        score,
                        y_center: bbox.center().y,
                    });
                }
            }
            out.extend(best);
        }
    }
    out.sort_by(|a, b| a.y_center.total_cmp(&b.y_center).then(a.word_box.x.cmp(&b.word_box.x)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSections {
    pub header_region: BBox,
    pub product_region: BBox,
    pub footer_region: Option<BBox>,
}

/// Splits a `width x height` page at the table-header anchors.
///
/// Anchor y-centers are clustered by single linkage (gap below
/// `cluster_factor` word heights). The table header is the cluster holding
/// the most table-header anchors (ties: topmost); the boundary sits one word
/// height above its highest table-header anchor. The product region runs to
/// the bottom of the lowest total anchor below the boundary (plus half a word
/// height), or to the page bottom.
pub fn split_sections(width: u32, height: u32, anchors: &[AnchorMatch], cfg: &LayoutConfig) -> Result<PageSections> {
    if !anchors.iter().any(|a| a.class == AnchorClass::TableHeader) {
        return Err(Error::Segmentation("no table-header anchor found".into()));
    }
    let word_h = median(anchors.iter().map(|a| a.word_box.h as f64).collect()).unwrap_or(1.0).max(1.0);
    let mut sorted: Vec<&AnchorMatch> = anchors.iter().collect();
    sorted.sort_by(|a, b| a.y_center.total_cmp(&b.y_center));
    let mut clusters: Vec<Vec<&AnchorMatch>> = Vec::new();
    for a in sorted {
        match clusters.last_mut() {
            Some(c) if a.y_center - c.last().unwrap().y_center < cfg.cluster_factor * word_h => c.push(a),
            _ => clusters.push(vec![a]),
        }
    }
    let count = |c: &Vec<&AnchorMatch>| c.iter().filter(|a| a.class == AnchorClass::TableHeader).count();
    let table = clusters
        .iter()
        .filter(|c| count(c) > 0)
        .fold(None::<&Vec<&AnchorMatch>>, |best, c| match best {
            Some(b) if count(b) >= count(c) => Some(b),
            _ => Some(c),
        })
        .expect("a table-header anchor exists");
    let top = table
        .iter()
        .filter(|a| a.class == AnchorClass::TableHeader)
        .map(|a| a.y_center)
        .fold(f64::INFINITY, f64::min);
    let boundary = ((top - word_h).floor().max(0.0) as u32).min(height);
    let total_bottom = anchors
        .iter()
        .filter(|a| a.class == AnchorClass::Total && a.y_center > top)
        .map(|a| a.word_box.bottom() + (word_h / 2.0).ceil() as u32)
        .max()
        .map(|b| b.min(height).max(boundary));
    let product_bottom = total_bottom.unwrap_or(height);
    let footer_region = (product_bottom < height).then(|| BBox::new(0, product_bottom, width, height - product_bottom));
    Ok(PageSections {
        header_region: BBox::new(0, 0, width, boundary),
        product_region: BBox::new(0, boundary, width, product_bottom - boundary),
        footer_region,
    })
}
