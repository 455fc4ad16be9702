use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::geom::point_segment_distance;
use super::surface::{boundary_segments, Seg};
use super::DegreeField;
use crate::error::{Error, Result};
use crate::field::{Aabb, Grid, VectorMap};

/// Crossings `(x, sign)` of the horizontal line through every row centre.
fn row_hits(segs: &[Seg], grid: &Grid<2>, rows: Option<&[bool]>) -> Vec<Vec<(f64, i32)>> {
    let cells = grid.cells();
    let h = grid.spacing()[1];
    let mut hits = vec![Vec::new(); cells[1]];
    for s in segs {
        if s.a[1] == s.b[1] {
            continue;
        }
        let (lo, hi, sign) = if s.a[1] < s.b[1] { (s.a, s.b, 1) } else { (s.b, s.a, -1) };
        let first = ((lo[1] - grid.bbox.lo[1]) / h - 0.5).floor().max(0.0) as usize;
        let last = (((hi[1] - grid.bbox.lo[1]) / h - 0.5).ceil().max(0.0) as usize).min(cells[1].saturating_sub(1));
        for j in first..=last {
            if rows.is_some_and(|r| !r[j]) {
                continue;
            }
            let py = grid.bbox.lo[1] + (j as f64 + 0.5) * h;
            // half-open in y so shared vertices are counted once
            if (lo[1] > py) == (hi[1] > py) {
                continue;
            }
            let x = lo[0] + (py - lo[1]) * (hi[0] - lo[0]) / (hi[1] - lo[1]);
            hits[j].push((x, sign));
        }
    }
    hits
}

fn accumulate(hits: &mut [(f64, i32)], grid: &Grid<2>, row: usize, mut set: impl FnMut(usize, i32)) {
    hits.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    let cells = grid.cells();
    let h = grid.spacing()[0];
    let mut acc = 0;
    let mut next = 0;
    for i in (0..cells[0]).rev() {
        let xc = grid.bbox.lo[0] + (i as f64 + 0.5) * h;
        while next < hits.len() && hits[next].0 > xc {
            acc += hits[next].1;
            next += 1;
        }
        set(grid.cell_index([i, row]), acc);
    }
}

fn mark_near(segs: &[Seg], grid: &Grid<2>, mut visit: impl FnMut(usize)) {
    let h = grid.spacing();
    let cells = grid.cells();
    for s in segs {
        let scale = 1.0f64.max(s.a[0].abs()).max(s.a[1].abs()).max(s.b[0].abs()).max(s.b[1].abs());
        let delta = 2.0 * s.dev + 1e-12 * scale;
        let mut r = [(0usize, 0usize); 2];
        for a in 0..2 {
            let mn = s.a[a].min(s.b[a]) - delta;
            let mx = s.a[a].max(s.b[a]) + delta;
            let first = ((mn - grid.bbox.lo[a]) / h[a] - 0.5).ceil().max(0.0) as usize;
            let last = ((mx - grid.bbox.lo[a]) / h[a] - 0.5).floor();
            if last < 0.0 {
                r[a] = (1, 0);
            } else {
                r[a] = (first, (last as usize).min(cells[a] - 1));
            }
        }
        for i in r[0].0..=r[0].1.max(r[0].0.saturating_sub(1)) {
            if i > r[0].1 {
                break;
            }
            for j in r[1].0..=r[1].1 {
                if r[1].0 > r[1].1 {
                    break;
                }
                if point_segment_distance(grid.cell_center([i, j]), s.a, s.b) < delta {
                    visit(grid.cell_index([i, j]));
                }
            }
        }
    }
}

/// Degree of `g` on `rect` at every cell centre of `target`.
pub fn degree_field2(
    g: &VectorMap<2, 2>,
    rect: &Aabb<2>,
    target: &Grid<2>,
    lattice: Option<usize>,
) -> Result<DegreeField<2>> {
    let h = target.spacing();
    let n = lattice.unwrap_or_else(|| {
        let w = rect.width(0).max(rect.width(1));
        ((w / h[0].min(h[1])).ceil() as usize).max(2)
    });
    let segs = boundary_segments(g, rect, n);
    for s in &segs {
        if !target.bbox.contains(s.a) {
            return Err(Error::Domain(format!("target grid does not cover boundary image point {:?}", s.a)));
        }
    }
    let pl: f64 = segs.iter().map(|s| 0.5 * (s.a[0] * s.b[1] - s.b[0] * s.a[1])).sum();
    let mut values = vec![0i32; target.cell_count()];
    let mut hits = row_hits(&segs, target, None);
    for (j, row) in hits.iter_mut().enumerate() {
        accumulate(row, target, j, |c, v| values[c] = v);
    }
    let mut near = vec![false; target.cell_count()];
    mark_near(&segs, target, |c| near[c] = true);
    let mut unknown = vec![false; target.cell_count()];
    if near.iter().any(|&b| b) {
        let cells = target.cells();
        let mut rows = vec![false; cells[1]];
        for (c, &b) in near.iter().enumerate() {
            if b {
                rows[c % cells[1]] = true;
            }
        }
        let fine = boundary_segments(g, rect, 4 * n);
        let mut still = vec![false; target.cell_count()];
        mark_near(&fine, target, |c| {
            if near[c] {
                still[c] = true;
            }
        });
        let mut fh = row_hits(&fine, target, Some(&rows));
        for (j, row) in fh.iter_mut().enumerate() {
            if !rows[j] {
                continue;
            }
            accumulate(row, target, j, |c, v| {
                if near[c] {
                    if still[c] {
                        unknown[c] = true;
                        values[c] = 0;
                    } else {
                        values[c] = v;
                    }
                }
            });
        }
    }
    DegreeField::finish(*target, values, unknown, pl, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::target_grid;
    use crate::gallery;

    #[test]
    fn planar_fields() {
        let unit = Aabb::<2>::unit();
        let t = target_grid(&unit, 1.0 / 64.0, [0.0; 2]).unwrap();
        let d = degree_field2(&gallery::map2("identity_2d").unwrap(), &unit, &t, None).unwrap();
        assert!((d.integral - 1.0).abs() < 0.01);
        let sq = Aabb { lo: [-1.0; 2], hi: [1.0; 2] };
        let img = Aabb { lo: [-2.0; 2], hi: [2.0; 2] };
        let t = target_grid(&img, 1.0 / 128.0, [0.0; 2]).unwrap();
        let d = degree_field2(&gallery::z_square(), &sq, &t, None).unwrap();
        assert!((d.integral - 32.0 / 3.0).abs() < 0.02 * 32.0 / 3.0, "{} {}", d.integral, d.unknown_volume);
        let l = gallery::map2("linear_2d:2,1,0,-1").unwrap();
        let t = target_grid(&Aabb { lo: [-1.0, -2.0], hi: [4.0, 2.0] }, 1.0 / 128.0, [0.0; 2]).unwrap();
        let d = degree_field2(&l, &unit, &t, None).unwrap();
        assert!((d.integral + 2.0).abs() < 0.02, "{}", d.integral);
        let c = gallery::cantor_row();
        let t = target_grid(&Aabb { lo: [0.0; 2], hi: [2.0, 1.0] }, 1.0 / 81.0, [0.0; 2]).unwrap();
        let d = degree_field2(&c, &unit, &t, None).unwrap();
        assert!((d.integral - 2.0).abs() < 0.02, "{} {}", d.integral, d.unknown_volume);
    }
}
