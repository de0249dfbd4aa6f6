use super::{BBox, Point, Raster};

/// Sets every pixel of `b` (clipped to the image) to `rgb`.
pub fn fill_rect(img: &mut Raster, b: BBox, rgb: [u8; 3]) {
    let Some(b) = b.clip(img.width(), img.height()) else {
        return;
    };
    for y in b.y..b.bottom() {
        for x in b.x..b.right() {
            img.set_rgb(x, y, rgb);
        }
    }
}

/// One-pixel outline of `b`.
pub fn draw_rect_outline(img: &mut Raster, b: BBox, rgb: [u8; 3]) {
    if b.w == 0 || b.h == 0 {
        return;
    }
    let (x0, y0) = (b.x as f64, b.y as f64);
    let (x1, y1) = ((b.right() - 1) as f64, (b.bottom() - 1) as f64);
    draw_line(img, Point::new(x0, y0), Point::new(x1, y0), rgb);
    draw_line(img, Point::new(x1, y0), Point::new(x1, y1), rgb);
    draw_line(img, Point::new(x1, y1), Point::new(x0, y1), rgb);
    draw_line(img, Point::new(x0, y1), Point::new(x0, y0), rgb);
}

/// Bresenham segment between rounded endpoints, clipped to the image.
pub fn draw_line(img: &mut Raster, a: Point, b: Point, rgb: [u8; 3]) {
    let (mut x0, mut y0) = (a.x.round() as i64, a.y.round() as i64);
    let (x1, y1) = (b.x.round() as i64, b.y.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (w, h) = (img.width() as i64, img.height() as i64);
    loop {
        if x0 >= 0 && y0 >= 0 && x0 < w && y0 < h {
            img.set_rgb(x0 as u32, y0 as u32, rgb);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}
