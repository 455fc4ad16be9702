use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::field3::column_hits;
use super::surface::for_each_triangle;
use crate::error::{Error, Result};
use crate::field::{Aabb, Grid, VectorMap};

/// Degree of the piecewise-linear boundary image along vertical lines
/// through the cell centres of a planar grid, resolved exactly in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeColumns {
    pub xy: Grid<2>,
    /// Per column, boundary crossings `(z, sign)` sorted by decreasing `z`.
    pub hits: Vec<Vec<(f64, i32)>>,
    pub lattice: usize,
}

impl DegreeColumns {
    /// Maximal `z` intervals of nonzero degree in column `c` as `(lo, hi, deg)`.
    pub fn intervals(&self, c: usize) -> Vec<(f64, f64, i32)> {
        let h = &self.hits[c];
        let mut out = Vec::new();
        let mut deg = 0;
        for k in 0..h.len() {
            deg += h[k].1;
            if deg != 0 && k + 1 < h.len() {
                out.push((h[k + 1].0, h[k].0, deg));
            }
        }
        out
    }

    /// Column centre `(x, y)` and index.
    pub fn center(&self, c: usize) -> [f64; 2] {
        self.xy.cell_center(Grid::<2>::unflat(self.xy.cells(), c))
    }

    pub fn integral(&self) -> f64 {
        let a = self.xy.cell_volume();
        (0..self.hits.len())
            .map(|c| self.intervals(c).iter().map(|&(lo, hi, d)| d as f64 * (hi - lo)).sum::<f64>() * a)
            .sum()
    }

    pub fn l1_integral(&self) -> f64 {
        let a = self.xy.cell_volume();
        (0..self.hits.len())
            .map(|c| self.intervals(c).iter().map(|&(lo, hi, d)| d.abs() as f64 * (hi - lo)).sum::<f64>() * a)
            .sum()
    }
}

/// Crossings of the boundary images of every box in `figure` (each on a
/// lattice of `lattice` cells per side) with the vertical lines through the
/// cell centres of `xy`. Shared faces of adjacent boxes cancel.
pub fn degree_columns(f: &VectorMap<3, 3>, figure: &[Aabb<3>], xy: &Grid<2>, lattice: usize) -> Result<DegreeColumns> {
    if lattice == 0 {
        return Err(Error::Resolution("empty boundary lattice".into()));
    }
    let mut hits = vec![Vec::new(); xy.cell_count()];
    let mut outside = None;
    for cube in figure {
        for_each_triangle(f, cube, lattice, &mut |t| {
            for v in &t.v {
                if !xy.bbox.contains([v[0], v[1]]) {
                    outside = Some(*v);
                }
            }
            column_hits(&t, xy, |c, z, s| hits[c].push((z, s)));
        });
        if let Some(v) = outside {
            return Err(Error::Domain(format!("column grid does not cover boundary image point {v:?}")));
        }
    }
    for col in hits.iter_mut() {
        col.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    }
    Ok(DegreeColumns { xy: *xy, hits, lattice })
}
