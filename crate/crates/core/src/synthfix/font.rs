//! Embedded 5x7 bitmap glyphs.
//!
//! Lowercase letters reuse the uppercase shapes; unknown characters render as
//! a filled cell.

use crate::raster::{BBox, Raster};

pub const GLYPH_W: u32 = 5;
pub const GLYPH_H: u32 = 7;

/// Rendering geometry for one scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FontMetrics {
    pub scale: u32,
}

impl FontMetrics {
    pub const fn new(scale: u32) -> Self {
        FontMetrics { scale }
    }

    pub const fn glyph_width(&self) -> u32 {
        GLYPH_W * self.scale
    }

    pub const fn height(&self) -> u32 {
        GLYPH_H * self.scale
    }

    /// Gap between adjacent glyphs.
    pub const fn spacing(&self) -> u32 {
        self.scale
    }

    pub const fn advance(&self) -> u32 {
        self.glyph_width() + self.spacing()
    }

    /// Horizontal advance of a space.
    pub const fn space_advance(&self) -> u32 {
        self.advance() / 2
    }

    /// Width of a single word (no spaces).
    pub fn word_width(&self, word: &str) -> u32 {
        let n = word.chars().count() as u32;
        if n == 0 {
            0
        } else {
            n * self.advance() - self.spacing()
        }
    }

    /// Layout boxes of each space-separated word of `text` drawn at `(x, y)`.
    pub fn layout(&self, text: &str, x: u32, y: u32) -> Vec<(String, BBox)> {
        let mut out = Vec::new();
        let mut cx = x;
        for (i, word) in text.split(' ').enumerate() {
            if i > 0 {
                cx += self.spacing() + self.space_advance();
            }
            if word.is_empty() {
                continue;
            }
            let w = self.word_width(word);
            out.push((word.to_string(), BBox::new(cx, y, w, self.height())));
            cx += w;
        }
        out
    }

    pub fn text_width(&self, text: &str) -> u32 {
        self.layout(text, 0, 0)
            .last()
            .map_or(0, |(_, b)| b.right())
    }
}

fn glyph_rows(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        'A' => [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'B' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110],
        'C' => [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110],
        'D' => [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100],
        'E' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111],
        'F' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000],
        'G' => [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111],
        'H' => [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'I' => [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        'J' => [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100],
        'K' => [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001],
        'L' => [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111],
        'M' => [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001],
        'N' => [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001],
        'O' => [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110],
        'P' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000],
        'Q' => [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101],
        'R' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001],
        'S' => [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110],
        'T' => [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100],
        'U' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110],
        'V' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100],
        'W' => [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010],
        'X' => [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001],
        'Y' => [0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100],
        'Z' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111],
        '0' => [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
        '1' => [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        '2' => [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
        '3' => [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
        '4' => [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
        '5' => [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
        '6' => [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
        '7' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
        '8' => [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
        '9' => [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
        '.' => [0, 0, 0, 0, 0, 0b01100, 0b01100],
        ',' => [0, 0, 0, 0, 0b01100, 0b00100, 0b01000],
        ':' => [0, 0b01100, 0b01100, 0, 0b01100, 0b01100, 0],
        '/' => [0, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0],
        '-' => [0, 0, 0, 0b11111, 0, 0, 0],
        '#' => [0b01010, 0b01010, 0b11111, 0b01010, 0b11111, 0b01010, 0b01010],
        '(' => [0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010],
        ')' => [0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000],
        '&' => [0b01100, 0b10010, 0b10100, 0b01000, 0b10101, 0b10010, 0b01101],
        '%' => [0b11000, 0b11001, 0b00010, 0b00100, 0b01000, 0b10011, 0b00011],
        '!' => [0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0, 0b00100],
        '\'' => [0b01100, 0b00100, 0b01000, 0, 0, 0, 0],
        '+' => [0, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0],
        '_' => [0, 0, 0, 0, 0, 0, 0b11111],
        '@' => [0b01110, 0b10001, 0b00001, 0b01101, 0b10101, 0b10101, 0b01110],
        '?' => [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0, 0b00100],
        ' ' => [0; 7],
        _ => [0b11111; 7],
    }
}

/// Draws `text` with its top-left at `(x, y)`, marking painted pixels in `ink`
/// when given. Pixels falling outside the image are skipped.
pub fn draw_text(
    img: &mut Raster,
    mut ink: Option<&mut Raster>,
    metrics: FontMetrics,
    x: u32,
    y: u32,
    text: &str,
    rgb: [u8; 3],
) {
    let s = metrics.scale;
    for (word, b) in metrics.layout(text, x, y) {
        for (i, c) in word.chars().enumerate() {
            let gx = b.x + i as u32 * metrics.advance();
            for (row, bits) in glyph_rows(c).iter().enumerate() {
                for col in 0..GLYPH_W {
                    if bits & (1 << (GLYPH_W - 1 - col)) == 0 {
                        continue;
                    }
                    for dy in 0..s {
                        for dx in 0..s {
                            let px = gx + col * s + dx;
                            let py = b.y + row as u32 * s + dy;
                            if px < img.width() && py < img.height() {
                                img.set_rgb(px, py, rgb);
                                if let Some(mask) = ink.as_deref_mut() {
                                    mask.set(px, py, 255);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::PixelFormat;

    #[test]
    fn layout_spaces_words() {
        let m = FontMetrics::new(3);
        let words = m.layout("Invoice No", 10, 20);
        assert_eq!(words.len(), 2);
        assert_eq!(words[0].1, BBox::new(10, 20, 7 * 18 - 3, 21));
        // gap between words: spacing + space advance
        assert_eq!(words[1].1.x - words[0].1.right(), 3 + 9);
    }

    #[test]
    fn ink_stays_inside_word_boxes() {
        let m = FontMetrics::new(3);
        let mut img = Raster::filled(300, 40, PixelFormat::Rgb8, 255);
        let mut ink = Raster::filled(300, 40, PixelFormat::Binary, 0);
        draw_text(&mut img, Some(&mut ink), m, 5, 5, "AB 12:3", [0, 0, 0]);
        let boxes: Vec<BBox> = m.layout("AB 12:3", 5, 5).into_iter().map(|(_, b)| b).collect();
        for y in 0..40 {
            for x in 0..300 {
                if ink.is_foreground(x, y) {
                    assert!(boxes.iter().any(|b| b.contains_point(crate::raster::Point::new(
                        x as f64 + 0.5,
                        y as f64 + 0.5
                    ))));
                    assert_eq!(img.get_rgb(x, y), [0, 0, 0]);
                }
            }
        }
        assert!(ink.count_foreground() > 100);
    }
}
