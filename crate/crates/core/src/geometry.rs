//! Document boundary detection and perspective rectification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    self, connected_components, convex_hull, dilate, polygon_area, threshold_otsu, Kernel,
    PixelFormat, Point, Raster,
};

/// Four document corners in source-image pixel coordinates.
///
/// Vertices run top-left, top-right, bottom-right, bottom-left, which is a
/// positive shoelace area in image coordinates (y pointing down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub tl: Point,
    pub tr: Point,
    pub br: Point,
    pub bl: Point,
}

impl Quad {
    /// Builds a quad, checking that it is strictly convex with positive area.
    pub fn new(tl: Point, tr: Point, br: Point, bl: Point) -> Result<Self> {
        let q = Quad { tl, tr, br, bl };
        if !q.is_convex() {
            return Err(Error::DegenerateGeometry(format!(
                "quad is not strictly convex in tl/tr/br/bl order: {q:?}"
            )));
        }
        Ok(q)
    }

    /// Axis-aligned rectangle with corners at pixel centers `0` and `w - 1`.
    pub fn rect(width: f64, height: f64) -> Self {
        Quad {
            tl: Point::new(0.0, 0.0),
            tr: Point::new(width - 1.0, 0.0),
            br: Point::new(width - 1.0, height - 1.0),
            bl: Point::new(0.0, height - 1.0),
        }
    }

    pub fn corners(&self) -> [Point; 4] {
        [self.tl, self.tr, self.br, self.bl]
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.corners())
    }

    pub fn is_convex(&self) -> bool {
        let c = self.corners();
        (0..4).all(|i| {
            let (a, b, d) = (c[i], c[(i + 1) % 4], c[(i + 2) % 4]);
            (b.x - a.x) * (d.y - b.y) - (b.y - a.y) * (d.x - b.x) > 0.0
        })
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Quad {
        let t = |p: Point| Point::new(p.x + dx, p.y + dy);
        Quad {
            tl: t(self.tl),
            tr: t(self.tr),
            br: t(self.br),
            bl: t(self.bl),
        }
    }

    /// Largest corner-to-corner distance against another quad.
    pub fn max_corner_error(&self, other: &Quad) -> f64 {
        self.corners()
            .iter()
            .zip(other.corners())
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// Rectified output size: the longer of each pair of opposite edges,
    /// rounded up, plus one because corners sit on pixel centers.
    pub fn rectified_size(&self) -> (u32, u32) {
        let w = self.tl.distance(self.tr).max(self.bl.distance(self.br));
        let h = self.tl.distance(self.bl).max(self.tr.distance(self.br));
        (w.ceil() as u32 + 1, h.ceil() as u32 + 1)
    }
}

/// Projective map, normalized so `m[2][2] == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        if m[2][2].abs() < 1e-15 {
            return Err(Error::DegenerateGeometry("homography has m22 = 0".into()));
        }
        let s = m[2][2];
        let mut n = m;
        n.iter_mut().flatten().for_each(|v| *v /= s);
        let h = Homography { m: n };
        if h.det().abs() < 1e-12 {
            return Err(Error::DegenerateGeometry("homography is singular".into()));
        }
        Ok(h)
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography {
            m: [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]],
        }
    }

    pub fn scale(s: f64) -> Self {
        Homography {
            m: [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    pub fn apply_quad(&self, q: &Quad) -> Quad {
        Quad {
            tl: self.apply(q.tl),
            tr: self.apply(q.tr),
            br: self.apply(q.br),
            bl: self.apply(q.bl),
        }
    }

    pub fn inverse(&self) -> Result<Homography> {
        let m = &self.m;
        let det = self.det();
        if det.abs() < 1e-15 {
            return Err(Error::DegenerateGeometry("homography is singular".into()));
        }
        let inv = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Homography::from_matrix(inv.map(|row| row.map(|v| v / det)))
    }

    /// `self` applied after `first`: `x -> self(first(x))`.
    pub fn after(&self, first: &Homography) -> Homography {
        let (a, b) = (&self.m, &first.m);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        let s = m[2][2];
        Homography {
            m: m.map(|row| row.map(|v| v / s)),
        }
    }
}

/// Removes a fixed `margin` strip from all four sides.
pub fn crop_edges(img: &Raster, margin: u32) -> Result<Raster> {
    if img.width() <= 2 * margin || img.height() <= 2 * margin {
        return Err(Error::Parameter(format!(
            "{}x{} image is too small to crop a {margin}px margin",
            img.width(),
            img.height()
        )));
    }
    img.crop(raster::BBox::new(
        margin,
        margin,
        img.width() - 2 * margin,
        img.height() - 2 * margin,
    ))
}

/// Adds a uniform `margin` border of `value` on every channel.
pub fn pad_border(img: &Raster, margin: u32, value: u8) -> Raster {
    if margin == 0 {
        return img.clone();
    }
    let value = if img.format() == PixelFormat::Binary && value != 0 {
        255
    } else {
        value
    };
    let mut out = Raster::filled(
        img.width() + 2 * margin,
        img.height() + 2 * margin,
        img.format(),
        value,
    );
    out.paste(img, margin, margin)
        .expect("padded canvas always fits the source");
    out
}

/// Orders four corners as tl/tr/br/bl.
///
/// `tl = argmin(x + y)`, `br = argmax(x + y)`, `tr = argmin(y - x)`,
/// `bl = argmax(y - x)`, ties broken by smaller y then smaller x. When those
/// picks collide or do not form a convex quad (e.g. a square rotated by 45
/// degrees), the points are ordered by angle around their centroid starting
/// from the `tl` pick.
pub fn order_corners(pts: [Point; 4]) -> Result<Quad> {
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i].distance(pts[j]) < 1e-9 {
                return Err(Error::DegenerateGeometry(format!(
                    "duplicate corner {:?}",
                    pts[i]
                )));
            }
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                let (a, b, c) = (pts[i], pts[j], pts[k]);
                let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
                let scale = a.distance(b).max(a.distance(c)).max(1.0);
                if cross.abs() < 1e-9 * scale * scale {
                    return Err(Error::DegenerateGeometry("three corners are collinear".into()));
                }
            }
        }
    }

    let tie = |a: &Point, b: &Point| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x));
    let pick = |key: &dyn Fn(&Point) -> f64, max: bool| -> Point {
        *pts.iter()
            .min_by(|a, b| {
                let (ka, kb) = if max { (-key(a), -key(b)) } else { (key(a), key(b)) };
                ka.total_cmp(&kb).then_with(|| tie(a, b))
            })
            .expect("four points")
    };
    let tl = pick(&|p| p.x + p.y, false);
    let br = pick(&|p| p.x + p.y, true);
    let tr = pick(&|p| p.y - p.x, false);
    let bl = pick(&|p| p.y - p.x, true);
    if let Ok(q) = Quad::new(tl, tr, br, bl) {
        return Ok(q);
    }

    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mut sorted = pts;
    sorted.sort_by(|a, b| {
        (a.y - cy)
            .atan2(a.x - cx)
            .total_cmp(&(b.y - cy).atan2(b.x - cx))
    });
    let start = sorted.iter().position(|p| *p == tl).unwrap_or(0);
    sorted.rotate_left(start);
    Quad::new(sorted[0], sorted[1], sorted[2], sorted[3])
}

/// Solves the 8-unknown system mapping the four `src` corners onto `dst`.
pub fn estimate_homography(src: &Quad, dst: &Quad) -> Result<Homography> {
    let mut a = [[0f64; 9]; 8];
    for (i, (s, d)) in src.corners().iter().zip(dst.corners()).enumerate() {
        a[2 * i] = [s.x, s.y, 1.0, 0.0, 0.0, 0.0, -d.x * s.x, -d.x * s.y, d.x];
        a[2 * i + 1] = [0.0, 0.0, 0.0, s.x, s.y, 1.0, -d.y * s.x, -d.y * s.y, d.y];
    }
    let h = solve_8x8(a)?;
    Homography::from_matrix([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])
}

/// Gaussian elimination with partial pivoting on an augmented 8x9 matrix.
fn solve_8x8(mut a: [[f64; 9]; 8]) -> Result<[f64; 8]> {
    let scale = a
        .iter()
        .flat_map(|r| r[..8].iter())
        .fold(0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-12 * scale {
            return Err(Error::DegenerateGeometry(
                "singular point correspondence".into(),
            ));
        }
        a.swap(col, pivot);
        for row in 0..8 {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..9 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut x = [0f64; 8];
    for (i, v) in x.iter_mut().enumerate() {
        *v = a[i][8] / a[i][i];
    }
    Ok(x)
}

/// Inverse-maps every output pixel through `h` (source to output) and samples
/// the source bilinearly. Samples falling outside the source are white.
pub fn warp_perspective(img: &Raster, h: &Homography, out_w: u32, out_h: u32) -> Result<Raster> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Parameter("warp output must be non-empty".into()));
    }
    let inv = h.inverse()?;
    let c = img.format().channels();
    let (sw, sh) = (img.width() as f64, img.height() as f64);
    let binary = img.format() == PixelFormat::Binary;
    let mut out = Raster::filled(out_w, out_h, img.format(), 255);
    crate::par::for_each_row(out.data_mut(), out_w as usize * c, |y, row| {
        for x in 0..out_w as usize {
            let s = inv.apply(Point::new(x as f64, y as f64));
            // Snap tiny floating-point noise so exact maps stay exact.
            let sx = snap(s.x);
            let sy = snap(s.y);
            if !(sx >= 0.0 && sy >= 0.0 && sx <= sw - 1.0 && sy <= sh - 1.0) {
                continue;
            }
            let x0 = sx.floor() as u32;
            let y0 = sy.floor() as u32;
            let x1 = (x0 + 1).min(img.width() - 1);
            let y1 = (y0 + 1).min(img.height() - 1);
            let fx = sx - x0 as f64;
            let fy = sy - y0 as f64;
            let p00 = img.get_rgb(x0, y0);
            let p10 = img.get_rgb(x1, y0);
            let p01 = img.get_rgb(x0, y1);
            let p11 = img.get_rgb(x1, y1);
            for ch in 0..c {
                let v = (1.0 - fy) * ((1.0 - fx) * p00[ch] as f64 + fx * p10[ch] as f64)
                    + fy * ((1.0 - fx) * p01[ch] as f64 + fx * p11[ch] as f64);
                let mut v = raster_round(v);
                if binary {
                    v = if v >= 128 { 255 } else { 0 };
                }
                row[x * c + ch] = v;
            }
        }
    });
    Ok(out)
}

#[inline]
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

#[inline]
fn raster_round(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Area filter reference: the document-size constant is calibrated for a
/// roughly 3 MP capture and scales with the input area.
pub const REFERENCE_AREA: f64 = 3.0e6;

/// Scaled minimum component area for an image of `width x height`.
pub fn scaled_min_area(min_area: f64, width: u32, height: u32) -> f64 {
    min_area * (width as f64 * height as f64) / REFERENCE_AREA
}

/// Finds the document outline: Otsu binarization, one 3x3 dilation, the
/// largest component that clears the (resolution-scaled) area filter, its
/// convex hull, and the four extreme hull vertices.
pub fn detect_document_quad(img: &Raster, min_area: f64) -> Result<Quad> {
    img.expect_format(PixelFormat::Gray8, "detect_document_quad")?;
    let (bin, _) = threshold_otsu(img)?;
    let bin = dilate(&bin, &Kernel::rect(3, 3)?, 1)?;
    let threshold = scaled_min_area(min_area, img.width(), img.height());
    let best = connected_components(&bin)?
        .into_iter()
        .filter(|c| c.area as f64 >= threshold)
        .max_by_key(|c| c.area)
        .ok_or_else(|| {
            Error::NoDocument(format!(
                "no component reaches the {threshold:.0} px area filter"
            ))
        })?;
    let points: Vec<Point> = best
        .boundary
        .iter()
        .map(|&(x, y)| Point::new(x as f64, y as f64))
        .collect();
    let hull = convex_hull(&points)?;
    if hull.len() < 4 {
        return Err(Error::DegenerateGeometry(format!(
            "document hull has only {} vertices",
            hull.len()
        )));
    }
    let extreme = |key: &dyn Fn(&Point) -> f64, max: bool| -> Point {
        *hull
            .iter()
            .min_by(|a, b| {
                let (ka, kb) = if max { (-key(a), -key(b)) } else { (key(a), key(b)) };
                ka.total_cmp(&kb)
                    .then(a.y.total_cmp(&b.y))
                    .then(a.x.total_cmp(&b.x))
            })
            .expect("non-empty hull")
    };
    let corners = [
        extreme(&|p| p.x + p.y, false),
        extreme(&|p| p.y - p.x, false),
        extreme(&|p| p.x + p.y, true),
        extreme(&|p| p.y - p.x, true),
    ];
    let quad = order_corners(corners)?;
    Ok(refine_corners(&quad, &points).unwrap_or(quad))
}

/// Sub-pixel corners: fits a line to the contour points along the middle of
/// each side, moves it inward by the 3x3 dilation's reach along its normal
/// (`|nx| + |ny|`), and intersects neighbouring sides. `None` when a side has
/// too few points or the result is not a valid quad.
fn refine_corners(quad: &Quad, contour: &[Point]) -> Option<Quad> {
    const BAND_PX: f64 = 3.0;
    const TRIM: f64 = 0.1;
    let c = quad.corners();
    let centroid = Point::new(
        c.iter().map(|p| p.x).sum::<f64>() / 4.0,
        c.iter().map(|p| p.y).sum::<f64>() / 4.0,
    );
    // Each side as (n, d) with n the outward unit normal and n.p = d.
    let mut sides = [(Point::new(0.0, 0.0), 0.0); 4];
    for (i, side) in sides.iter_mut().enumerate() {
        let (a, b) = (c[i], c[(i + 1) % 4]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = dx.hypot(dy);
        if len < 1.0 {
            return None;
        }
        let (ux, uy) = (dx / len, dy / len);
        let near: Vec<Point> = contour
            .iter()
            .copied()
            .filter(|p| {
                let (px, py) = (p.x - a.x, p.y - a.y);
                let t = (px * ux + py * uy) / len;
                (TRIM..=1.0 - TRIM).contains(&t) && (px * uy - py * ux).abs() <= BAND_PX
            })
            .collect();
        if near.len() < 8 {
            return None;
        }
        let n = near.len() as f64;
        let mx = near.iter().map(|p| p.x).sum::<f64>() / n;
        let my = near.iter().map(|p| p.y).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in &near {
            let (x, y) = (p.x - mx, p.y - my);
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        // Total least squares: the normal is the minor eigenvector.
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let mut normal = Point::new(-theta.sin(), theta.cos());
        if normal.x * (mx - centroid.x) + normal.y * (my - centroid.y) < 0.0 {
            normal = Point::new(-normal.x, -normal.y);
        }
        let reach = normal.x.abs() + normal.y.abs();
        *side = (normal, normal.x * mx + normal.y * my - reach);
    }
    let meet = |(n1, d1): (Point, f64), (n2, d2): (Point, f64)| -> Option<Point> {
        let det = n1.x * n2.y - n1.y * n2.x;
        (det.abs() > 1e-6).then(|| Point::new((d1 * n2.y - d2 * n1.y) / det, (n1.x * d2 - n2.x * d1) / det))
    };
    let refined = [
        meet(sides[3], sides[0])?,
        meet(sides[0], sides[1])?,
        meet(sides[1], sides[2])?,
        meet(sides[2], sides[3])?,
    ];
    // Guard against a wild fit: refinement is a small correction.
    if refined.iter().zip(c.iter()).any(|(r, o)| r.distance(*o) > 2.0 * BAND_PX) {
        return None;
    }
    Quad::new(refined[0], refined[1], refined[2], refined[3]).ok()
}

/// Maps the detected quad onto an upright rectangle of its rectified size.
pub fn rectify(img: &Raster, quad: &Quad) -> Result<(Raster, Homography)> {
    let (w, h) = quad.rectified_size();
    let hom = estimate_homography(quad, &Quad::rect(w as f64, h as f64))?;
    Ok((warp_perspective(img, &hom, w, h)?, hom))
}
