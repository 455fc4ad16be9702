use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::geom::{edge_side, point_triangle_distance};
use super::surface::{for_each_triangle, Tri};
use super::DegreeField;
use crate::error::{Error, Result};
use crate::field::{Aabb, Grid, VectorMap};
use crate::linalg::det3;

const RETRY_FACTOR: usize = 4;

fn xy(v: [f64; 3]) -> [f64; 2] {
    [v[0], v[1]]
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Index range of cell centres `lo + (k + 1/2) h` inside `[a, b]`.
pub(crate) fn center_range(lo: f64, h: f64, n: usize, a: f64, b: f64) -> core::ops::Range<usize> {
    let first = ((a - lo) / h - 0.5).ceil().max(0.0);
    let last = ((b - lo) / h - 0.5).floor();
    if last < 0.0 || first > last {
        return 0..0;
    }
    (first as usize)..((last as usize + 1).min(n))
}

/// Upward ray hits `(z, sign)` of a triangle on the target columns it covers.
pub(crate) fn column_hits(t: &Tri, grid: &Grid<2>, mut visit: impl FnMut(usize, f64, i32)) {
    let (p0, p1, p2) = (xy(t.v[0]), xy(t.v[1]), xy(t.v[2]));
    let area = orient(p0, p1, p2);
    if area == 0.0 {
        return;
    }
    let sign = if area > 0.0 { 1 } else { -1 };
    let h = grid.spacing();
    let cells = grid.cells();
    let lo = grid.bbox.lo;
    let xr = center_range(lo[0], h[0], cells[0], p0[0].min(p1[0]).min(p2[0]), p0[0].max(p1[0]).max(p2[0]));
    let yr = center_range(lo[1], h[1], cells[1], p0[1].min(p1[1]).min(p2[1]), p0[1].max(p1[1]).max(p2[1]));
    for i in xr {
        let px = lo[0] + (i as f64 + 0.5) * h[0];
        for j in yr.clone() {
            let p = [px, lo[1] + (j as f64 + 0.5) * h[1]];
            let e0 = edge_side(p0, p1, p);
            if e0 != edge_side(p1, p2, p) || e0 != edge_side(p2, p0, p) {
                continue;
            }
            let l0 = orient(p1, p2, p) / area;
            let l1 = orient(p2, p0, p) / area;
            let l2 = 1.0 - l0 - l1;
            let z = l0 * t.v[0][2] + l1 * t.v[1][2] + l2 * t.v[2][2];
            visit(i * cells[1] + j, z, sign);
        }
    }
}

pub(crate) fn xy_grid(g: &Grid<3>) -> Result<Grid<2>> {
    let b = g.bbox;
    let c = g.cells();
    Grid::free(Aabb { lo: [b.lo[0], b.lo[1]], hi: [b.hi[0], b.hi[1]] }, [c[0], c[1]])
}

/// Cells whose centre lies within `2 dev` of the triangle.
fn near_cells(t: &Tri, grid: &Grid<3>, mut visit: impl FnMut(usize)) {
    let scale = t.v.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let delta = 2.0 * t.dev + 1e-12 * scale;
    let h = grid.spacing();
    let cells = grid.cells();
    let mut ranges: [core::ops::Range<usize>; 3] = [0..0, 0..0, 0..0];
    for a in 0..3 {
        let mn = t.v.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min) - delta;
        let mx = t.v.iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max) + delta;
        ranges[a] = center_range(grid.bbox.lo[a], h[a], cells[a], mn, mx);
    }
    for i in ranges[0].clone() {
        for j in ranges[1].clone() {
            for k in ranges[2].clone() {
                let c = grid.cell_center([i, j, k]);
                if point_triangle_distance(c, t.v[0], t.v[1], t.v[2]) < delta {
                    visit(grid.cell_index([i, j, k]));
                }
            }
        }
    }
}

fn accumulate(hits: &mut [(f64, i32)], grid: &Grid<3>, column: usize, mut set: impl FnMut(usize, i32)) {
    hits.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    let cells = grid.cells();
    let h = grid.spacing()[2];
    let (i, j) = (column / cells[1], column % cells[1]);
    let mut acc = 0;
    let mut next = 0;
    for k in (0..cells[2]).rev() {
        let zc = grid.bbox.lo[2] + (k as f64 + 0.5) * h;
        while next < hits.len() && hits[next].0 > zc {
            acc += hits[next].1;
            next += 1;
        }
        set(grid.cell_index([i, j, k]), acc);
    }
}

/// Degree of `f` on `region` at every cell centre of `target`, from a
/// boundary lattice of `lattice` cells per side (default: target spacing).
pub fn degree_field3(
    f: &VectorMap<3, 3>,
    region: &Aabb<3>,
    target: &Grid<3>,
    lattice: Option<usize>,
) -> Result<DegreeField<3>> {
    let h = target.spacing();
    let hmin = h.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let n = lattice.unwrap_or_else(|| {
        let w = (0..3).map(|i| region.width(i)).fold(0.0f64, f64::max);
        ((w / hmin).ceil() as usize).max(2)
    });
    let mut tris = Vec::new();
    for_each_triangle(f, region, n, &mut |t| tris.push(t));
    for t in &tris {
        for v in &t.v {
            if !target.bbox.contains(*v) {
                return Err(Error::Domain(format!("target grid does not cover boundary image point {v:?}")));
            }
        }
    }
    let cells = target.cells();
    let columns = cells[0] * cells[1];
    let cols = xy_grid(target)?;
    let mut hits: Vec<Vec<(f64, i32)>> = vec![Vec::new(); columns];
    let mut pl = 0.0;
    for t in &tris {
        pl += det3([t.v[0], t.v[1], t.v[2]]) / 6.0;
        column_hits(t, &cols, |c, z, s| hits[c].push((z, s)));
    }
    let mut values = vec![0i32; target.cell_count()];
    for (c, col) in hits.iter_mut().enumerate() {
        accumulate(col, target, c, |cell, v| values[cell] = v);
    }
    let mut near = vec![false; target.cell_count()];
    for t in &tris {
        near_cells(t, target, |c| near[c] = true);
    }
    drop(tris);
    let mut unknown = vec![false; target.cell_count()];
    if near.iter().any(|&b| b) {
        let mut retry_column = vec![false; columns];
        for (c, &b) in near.iter().enumerate() {
            if b {
                retry_column[c / cells[2]] = true;
            }
        }
        let mut fine_hits: Vec<Vec<(f64, i32)>> = vec![Vec::new(); columns];
        let mut still_near = vec![false; target.cell_count()];
        for_each_triangle(f, region, RETRY_FACTOR * n, &mut |t| {
            column_hits(&t, &cols, |c, z, s| {
                if retry_column[c] {
                    fine_hits[c].push((z, s));
                }
            });
            near_cells(&t, target, |c| {
                if near[c] {
                    still_near[c] = true;
                }
            });
        });
        for c in 0..columns {
            if retry_column[c] {
                accumulate(&mut fine_hits[c], target, c, |cell, v| {
                    if near[cell] {
                        if still_near[cell] {
                            unknown[cell] = true;
                            values[cell] = 0;
                        } else {
                            values[cell] = v;
                        }
                    }
                });
            }
        }
    }
    DegreeField::finish(*target, values, unknown, pl, n)
}
