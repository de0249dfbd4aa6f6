use super::{BBox, PixelFormat, Raster};
use crate::error::Result;

/// 8-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// 1-based id; matches the values in [`Labeling::labels`].
    pub label: u32,
    pub area: u64,
    pub bbox: BBox,
    /// External contour, traced clockwise (in image coordinates) from the
    /// topmost-leftmost pixel. Points may repeat where the contour doubles back.
    pub boundary: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct Labeling {
    /// Row-major label per pixel, 0 for background.
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Clockwise neighbour ring starting west.
const RING: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn ring_index(dx: i64, dy: i64) -> usize {
    RING.iter().position(|&d| d == (dx, dy)).expect("unit offset")
}

fn trace_boundary(labels: &[u32], w: i64, h: i64, label: u32, start: (i64, i64), area: u64) -> Vec<(u32, u32)> {
    let fg = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && labels[(y * w + x) as usize] == label;
    let mut boundary = vec![(start.0 as u32, start.1 as u32)];
    let mut p = start;
    let start_back = (start.0 - 1, start.1);
    let mut back = start_back;
    let cap = 4 * area as usize + 16;
    for _ in 0..cap {
        let bdir = ring_index(back.0 - p.0, back.1 - p.1);
        let mut next = None;
        for k in 1..=8 {
            let d = (bdir + k) % 8;
            let q = (p.0 + RING[d].0, p.1 + RING[d].1);
            if fg(q.0, q.1) {
                let pd = (bdir + k - 1) % 8;
                let prev = (p.0 + RING[pd].0, p.1 + RING[pd].1);
                next = Some((q, prev));
                break;
            }
        }
        let Some((q, prev)) = next else { break };
        p = q;
        back = prev;
        if p == start && back == start_back {
            break;
        }
        boundary.push((p.0 as u32, p.1 as u32));
    }
    if boundary.len() > 1 && boundary.last() == boundary.first() {
        boundary.pop();
    }
    boundary
}

/// Labels 8-connected foreground and describes each component.
///
/// Components are ordered by `(bbox.y, bbox.x)`, then by their first pixel in
/// raster order; labels follow that order starting at 1.
pub fn label_components(img: &Raster) -> Result<Labeling> {
    img.expect_format(PixelFormat::Binary, "connected_components")?;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let data = img.data();
    let mut provisional = vec![0u32; (w * h) as usize];
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if data[i] == 0 {
                continue;
            }
            let mut current = 0u32;
            for (dx, dy) in [(-1, 0), (-1, -1), (0, -1), (1, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w {
                    continue;
                }
                let l = provisional[(ny * w + nx) as usize];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else if current != l {
                    union(&mut parent, current, l);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            provisional[i] = current;
        }
    }

    // Resolve roots and gather statistics in first-pixel order.
    struct Acc {
        area: u64,
        x0: u32,
        y0: u32,
        x1: u32,
        y1: u32,
        first: usize,
    }
    let mut root_slot = vec![u32::MAX; parent.len()];
    let mut accs: Vec<Acc> = Vec::new();
    for i in 0..provisional.len() {
        let l = provisional[i];
        if l == 0 {
            continue;
        }
        let r = find(&mut parent, l);
        let (x, y) = ((i as i64 % w) as u32, (i as i64 / w) as u32);
        let slot = &mut root_slot[r as usize];
        if *slot == u32::MAX {
            *slot = accs.len() as u32;
            accs.push(Acc {
                area: 0,
                x0: x,
                y0: y,
                x1: x,
                y1: y,
                first: i,
            });
        }
        let a = &mut accs[*slot as usize];
        a.area += 1;
        a.x0 = a.x0.min(x);
        a.x1 = a.x1.max(x);
        a.y1 = a.y1.max(y);
        provisional[i] = *slot + 1;
    }

    let mut order: Vec<usize> = (0..accs.len()).collect();
    order.sort_by_key(|&k| (accs[k].y0, accs[k].x0, accs[k].first));
    let mut relabel = vec![0u32; accs.len() + 1];
    for (new, &old) in order.iter().enumerate() {
        relabel[old + 1] = new as u32 + 1;
    }
    let labels: Vec<u32> = provisional.iter().map(|&l| relabel[l as usize]).collect();

    let components = order
        .iter()
        .enumerate()
        .map(|(new, &old)| {
            let a = &accs[old];
            let label = new as u32 + 1;
            let start = ((a.first as i64) % w, (a.first as i64) / w);
            Component {
                label,
                area: a.area,
                bbox: BBox::from_corners(a.x0, a.y0, a.x1, a.y1),
                boundary: trace_boundary(&labels, w, h, label, start, a.area),
            }
        })
        .collect();
    Ok(Labeling { labels, components })
}

pub fn connected_components(img: &Raster) -> Result<Vec<Component>> {
    Ok(label_components(img)?.components)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(rows: &[&str]) -> Raster {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        Raster::from_fn(w, h, PixelFormat::Binary, |x, y| {
            (rows[y as usize].as_bytes()[x as usize] == b'#') as u8
        })
    }

    #[test]
    fn empty_image_has_no_components() {
        let img = Raster::filled(5, 5, PixelFormat::Binary, 0);
        assert!(connected_components(&img).unwrap().is_empty());
    }

    #[test]
    fn two_blocks() {
        let mut img = Raster::filled(20, 12, PixelFormat::Binary, 0);
        for y in 1..6 {
            for x in 1..6 {
                img.set(x, y, 255);
                img.set(x + 10, y + 5, 255);
            }
        }
        let comps = connected_components(&img).unwrap();
        assert_eq!(comps.len(), 2);
        for c in &comps {
            assert_eq!(c.area, 25);
            assert_eq!((c.bbox.w, c.bbox.h), (5, 5));
            // Perimeter of a 5x5 block visits 16 pixels.
            assert_eq!(c.boundary.len(), 16);
        }
        assert_eq!(comps[0].bbox.y, 1);
    }

    #[test]
    fn diagonal_pixels_join() {
        let img = binary(&["#..", ".#.", "..#"]);
        let comps = connected_components(&img).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].area, 3);
    }

    #[test]
    fn u_shape_merges_provisional_labels() {
        let img = binary(&["#...#", "#...#", "#####"]);
        let lab = label_components(&img).unwrap();
        assert_eq!(lab.components.len(), 1);
        assert_eq!(lab.components[0].area, 9);
        assert!(lab.labels.iter().all(|&l| l <= 1));
    }

    #[test]
    fn single_pixel_boundary() {
        let img = binary(&["...", ".#.", "..."]);
        let comps = connected_components(&img).unwrap();
        assert_eq!(comps[0].boundary, vec![(1, 1)]);
    }

    #[test]
    fn boundary_skips_holes() {
        let img = binary(&["#####", "#...#", "#####"]);
        let c = &connected_components(&img).unwrap()[0];
        assert_eq!(c.area, 12);
        assert_eq!(c.boundary.len(), 12);
    }
}
