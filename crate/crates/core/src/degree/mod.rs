//! Topological degree.
//!
//! Point degrees come from the winding number of the boundary image (2D) and
//! from the solid-angle sum over a triangulated boundary image (3D). Degree
//! fields over target grids sweep a watertight piecewise-linear image of the
//! boundary exactly, row by row in 2D and column by column in 3D; target
//! cells too close to that surface for its interpolation error are retried on
//! a finer surface and otherwise left unknown.

mod boundary;
mod columns;
mod field2;
mod field3;
mod geom;
mod surface;
mod point;

pub use boundary::{degree_weighted_integral, degree_weighted_stieltjes};
pub use field2::degree_field2;
pub use columns::{degree_columns, DegreeColumns};
pub use field3::degree_field3;
pub use geom::{point_segment_distance, point_triangle_distance, solid_angle};
pub use point::{degree2, degree3, DegreeResult};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Aabb, Grid};

/// Integer degree per target cell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DegreeField<const D: usize> {
    pub grid: Grid<D>,
    pub values: Vec<i32>,
    /// Cells whose degree could not be certified; their value is 0.
    pub unknown: Vec<bool>,
    pub integral: f64,
    pub l1_integral: f64,
    pub unknown_volume: f64,
    /// Signed volume enclosed by the piecewise-linear boundary image, i.e.
    /// the exact integral of its degree.
    pub pl_integral: f64,
    /// Lattice cells per region side used for the boundary image.
    pub lattice: usize,
}

impl<const D: usize> DegreeField<D> {
    fn finish(grid: Grid<D>, values: Vec<i32>, unknown: Vec<bool>, pl_integral: f64, lattice: usize) -> Result<Self> {
        let vol = grid.cell_volume();
        let mut integral = 0.0;
        let mut l1 = 0.0;
        let mut unknown_volume = 0.0;
        let mut image_cells = 0usize;
        let mut unknown_cells = 0usize;
        for (v, &u) in values.iter().zip(&unknown) {
            if u {
                unknown_volume += vol;
                unknown_cells += 1;
                image_cells += 1;
            } else if *v != 0 {
                integral += *v as f64 * vol;
                l1 += v.abs() as f64 * vol;
                image_cells += 1;
            }
        }
        if image_cells > 0 {
            let frac = unknown_cells as f64 / image_cells as f64;
            if frac > 0.05 {
                return Err(Error::Coverage { unknown_fraction: 100.0 * frac });
            }
        }
        Ok(DegreeField { grid, values, unknown, integral, l1_integral: l1, unknown_volume, pl_integral, lattice })
    }

    pub fn value(&self, idx: [usize; D]) -> i32 {
        self.values[self.grid.cell_index(idx)]
    }

    /// `∫ w(y) deg(y) dy` by the midpoint rule on known cells.
    pub fn integrate(&self, w: impl Fn([f64; D]) -> f64) -> f64 {
        let vol = self.grid.cell_volume();
        let cells = self.grid.cells();
        let mut s = 0.0;
        for (c, &v) in self.values.iter().enumerate() {
            if v != 0 && !self.unknown[c] {
                s += v as f64 * w(self.grid.cell_center(Grid::<D>::unflat(cells, c))) * vol;
            }
        }
        s
    }
}

/// Target grid of spacing `h` on the lattice `offset + hZ^D`, covering
/// `bounds` with one spare cell on each side.
pub fn target_grid<const D: usize>(bounds: &Aabb<D>, h: f64, offset: [f64; D]) -> Result<Grid<D>> {
    if !(h > 0.0) {
        return Err(Error::Domain("target spacing must be positive".into()));
    }
    let mut lo = [0.0; D];
    let mut hi = [0.0; D];
    let mut cells = [0usize; D];
    for i in 0..D {
        let a = num_traits::Float::floor((bounds.lo[i] - offset[i]) / h) - 1.0;
        let b = num_traits::Float::ceil((bounds.hi[i] - offset[i]) / h) + 1.0;
        lo[i] = offset[i] + a * h;
        hi[i] = offset[i] + b * h;
        cells[i] = (b - a) as usize;
    }
    Grid::free(Aabb { lo, hi }, cells)
}
