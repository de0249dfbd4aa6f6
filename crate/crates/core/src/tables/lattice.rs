use super::{Cell, SourceLayer, TableGrid, TablesConfig};
use crate::cleanup::LineMasks;
use crate::error::{Error, Result};
use crate::raster::{label_components, BBox, Raster};

/// A ruling line: `pos` across it, `lo..=hi` along it.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rail {
    pos: u32,
    lo: u32,
    hi: u32,
}

/// Segments of one orientation, clustered into rails. `horizontal` picks
/// which axis is "across".
fn rails(mask: &Raster, horizontal: bool, cluster: u32) -> Result<Vec<Rail>> {
    let segs: Vec<(u32, u32, u32, u32)> = label_components(mask)?
        .components
        .iter()
        .map(|c| {
            let b = c.bbox;
            if horizontal {
                (b.y, b.bottom() - 1, b.x, b.right() - 1)
            } else {
                (b.x, b.right() - 1, b.y, b.bottom() - 1)
            }
        })
        .collect();
    // (across_min, across_max, along_min, along_max)
    let mut groups: Vec<(u32, u32, u32, u32)> = Vec::new();
    let mut sorted = segs;
    sorted.sort_by_key(|s| (s.0 + s.1, s.2));
    for s in sorted {
        let center = (s.0 + s.1) / 2;
        let hit = groups.iter_mut().find(|g| {
            let gc = (g.0 + g.1) / 2;
            gc.abs_diff(center) <= cluster && s.2 <= g.3 + 4 * cluster && g.2 <= s.3 + 4 * cluster
        });
        match hit {
            Some(g) => {
                g.0 = g.0.min(s.0);
                g.1 = g.1.max(s.1);
                g.2 = g.2.min(s.2);
                g.3 = g.3.max(s.3);
            }
            None => groups.push(s),
        }
    }
    let mut out: Vec<Rail> = groups
        .into_iter()
        .map(|g| Rail {
            pos: (g.0 + g.1) / 2,
            lo: g.2,
            hi: g.3,
        })
        .collect();
    out.sort_by_key(|r| (r.pos, r.lo));
    Ok(out)
}

/// Drops positions closer than `min_gap` to the previously kept one.
fn thin(mut pos: Vec<u32>, min_gap: u32) -> Vec<u32> {
    pos.sort_unstable();
    pos.dedup();
    let mut out: Vec<u32> = Vec::new();
    for p in pos {
        if out.last().is_none_or(|&l| p - l >= min_gap) {
            out.push(p);
        }
    }
    out
}

struct Candidate {
    ys: Vec<u32>,
    xs: Vec<u32>,
}

impl Candidate {
    fn bbox(&self) -> BBox {
        BBox::from_corners(self.xs[0], self.ys[0], *self.xs.last().unwrap(), *self.ys.last().unwrap())
    }
}

/// Finds a ruled grid inside `region` of full-page line masks.
///
/// Horizontal and vertical mask runs are clustered into rails. Rails of one
/// table share their extent, so horizontal rails are grouped by extent and
/// each group is paired with the vertical rails spanning it; this separates a
/// table from an enclosing border even when the two touch. Grids with fewer
/// than two rows or columns are rejected and overlapping grids are
/// deduplicated by IoU, larger area first. Cell boxes run between rail
/// centers, in page coordinates.
pub fn detect_lattice(masks: &LineMasks, region: BBox, cfg: &TablesConfig) -> Result<TableGrid> {
    let not_found = |m: &str| Err(Error::LatticeNotFound(m.into()));
    let (w, h) = (masks.combined.width(), masks.combined.height());
    let Some(region) = region.clip(w, h).filter(|r| r.w >= 3 && r.h >= 3) else {
        return not_found("empty region");
    };
    let local = masks.crop(region)?;
    let h_rails = rails(&local.horizontal, true, cfg.rail_cluster_px)?;
    let v_rails = rails(&local.vertical, false, cfg.rail_cluster_px)?;
    if h_rails.len() < 3 || v_rails.len() < 3 {
        return not_found("fewer than three rails in each direction");
    }

    let span = |a: u32, b: u32| a.abs_diff(b);
    let mut groups: Vec<Vec<Rail>> = Vec::new();
    for r in &h_rails {
        let tol = 6u32.max((r.hi - r.lo) / 33);
        match groups
            .iter_mut()
            .find(|g| span(g[0].lo, r.lo) <= tol && span(g[0].hi, r.hi) <= tol)
        {
            Some(g) => g.push(*r),
            None => groups.push(vec![*r]),
        }
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    for g in groups.iter().filter(|g| g.len() >= 2) {
        let (lo, hi) = (g.iter().map(|r| r.lo).min().unwrap(), g.iter().map(|r| r.hi).max().unwrap());
        let tol = 6u32.max((hi - lo) / 33);
        let (top, bottom) = (g[0].pos, g.last().unwrap().pos);
        let xs: Vec<u32> = v_rails
            .iter()
            .filter(|v| {
                v.pos + tol >= lo && v.pos <= hi + tol && span(v.lo, top) <= tol && span(v.hi, bottom) <= tol
            })
            .map(|v| v.pos)
            .collect();
        let xs = thin(xs, cfg.min_cell_px);
        let ys = thin(g.iter().map(|r| r.pos).collect(), cfg.min_cell_px);
        if xs.len() >= 3 && ys.len() >= 3 {
            candidates.push(Candidate { ys, xs });
        }
    }
    if candidates.is_empty() {
        return not_found("no rail set forms at least two rows and two columns");
    }
    candidates.sort_by_key(|c| std::cmp::Reverse(c.bbox().area()));
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| k.bbox().iou(&c.bbox()) <= cfg.dedup_iou) {
            kept.push(c);
        }
    }
    let best = &kept[0];
    let (n_rows, n_cols) = (best.ys.len() - 1, best.xs.len() - 1);
    let mut cells = Vec::with_capacity(n_rows * n_cols);
    for r in 0..n_rows {
        for c in 0..n_cols {
            let b = BBox::new(best.xs[c], best.ys[r], best.xs[c + 1] - best.xs[c], best.ys[r + 1] - best.ys[r]);
            cells.push(Cell {
                row: r,
                col: c,
                bbox: b.translate(region.x, region.y),
                text: String::new(),
                confidence: 0.0,
            });
        }
    }
    Ok(TableGrid {
        cells,
        n_rows,
        n_cols,
        origin: best.bbox().translate(region.x, region.y),
        source_layer: SourceLayer::Lattice,
    })
}
