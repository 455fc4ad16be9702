use alloc::format;

use crate::error::{Error, Result};

/// Axis-aligned box `lo < hi` in `R^D`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Aabb<const D: usize> {
    #[cfg_attr(feature = "serde", serde(serialize_with = "as_seq"))]
    pub lo: [f64; D],
    #[cfg_attr(feature = "serde", serde(serialize_with = "as_seq"))]
    pub hi: [f64; D],
}

#[cfg(feature = "serde")]
fn as_seq<S: serde::Serializer, T: serde::Serialize, const D: usize>(v: &[T; D], s: S) -> core::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub type Box3 = Aabb<3>;
pub type Rect = Aabb<2>;

impl<const D: usize> Aabb<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self> {
        for i in 0..D {
            if !(lo[i] < hi[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::Domain(format!("box axis {i}: lo {} !< hi {}", lo[i], hi[i])));
            }
        }
        Ok(Aabb { lo, hi })
    }

    pub fn unit() -> Self {
        Aabb { lo: [0.0; D], hi: [1.0; D] }
    }

    /// Cube of half-side `r` centred at `center`.
    pub fn centered(center: [f64; D], r: f64) -> Self {
        let mut lo = center;
        let mut hi = center;
        for i in 0..D {
            lo[i] -= r;
            hi[i] += r;
        }
        Aabb { lo, hi }
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..D).map(|i| self.width(i)).product()
    }

    pub fn center(&self) -> [f64; D] {
        let mut c = self.lo;
        for i in 0..D {
            c[i] = 0.5 * (self.lo[i] + self.hi[i]);
        }
        c
    }

    pub fn contains(&self, x: [f64; D]) -> bool {
        (0..D).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn contains_box(&self, other: &Aabb<D>) -> bool {
        (0..D).all(|i| other.lo[i] >= self.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Box shrunk by `d` on every side; `None` when it would be empty.
    pub fn shrink(&self, d: f64) -> Option<Self> {
        let mut out = *self;
        for i in 0..D {
            out.lo[i] += d;
            out.hi[i] -= d;
            if !(out.lo[i] < out.hi[i]) {
                return None;
            }
        }
        Some(out)
    }

    pub fn expand(&self, d: f64) -> Self {
        let mut out = *self;
        for i in 0..D {
            out.lo[i] -= d;
            out.hi[i] += d;
        }
        out
    }

    pub fn intersect(&self, other: &Aabb<D>) -> Option<Self> {
        let mut out = *self;
        for i in 0..D {
            out.lo[i] = self.lo[i].max(other.lo[i]);
            out.hi[i] = self.hi[i].min(other.hi[i]);
            if !(out.lo[i] < out.hi[i]) {
                return None;
            }
        }
        Some(out)
    }
}

/// Uniform node grid over a box. Cells sit between consecutive nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Grid<const D: usize> {
    pub bbox: Aabb<D>,
    /// Node counts per axis.
    #[cfg_attr(feature = "serde", serde(serialize_with = "as_seq"))]
    pub nodes: [usize; D],
}

pub type Grid3 = Grid<3>;

fn is_power_of(mut n: usize, base: usize) -> bool {
    if n == 0 {
        return false;
    }
    while n % base == 0 {
        n /= base;
    }
    n == 1
}

impl<const D: usize> Grid<D> {
    /// Working grid: at least 9 nodes per axis and a cell count that is a
    /// power of two or of three (dyadic or triadic refinement).
    pub fn new(bbox: Aabb<D>, nodes: [usize; D]) -> Result<Self> {
        for (i, &n) in nodes.iter().enumerate() {
            if n < 9 || !(is_power_of(n - 1, 2) || is_power_of(n - 1, 3)) {
                return Err(Error::Domain(format!(
                    "axis {i}: {n} nodes; need >= 9 nodes and 2^k or 3^k cells"
                )));
            }
        }
        Ok(Grid { bbox, nodes })
    }

    /// Grid with `cells` cells per axis (power of two or three).
    pub fn with_cells(bbox: Aabb<D>, cells: usize) -> Result<Self> {
        Self::new(bbox, [cells + 1; D])
    }

    /// Unconstrained grid used for image-space target grids and shrunk grids.
    pub fn free(bbox: Aabb<D>, cells: [usize; D]) -> Result<Self> {
        let mut nodes = [0; D];
        for i in 0..D {
            if cells[i] == 0 {
                return Err(Error::Domain(format!("axis {i} has no cells")));
            }
            nodes[i] = cells[i] + 1;
        }
        Ok(Grid { bbox, nodes })
    }

    pub fn cells(&self) -> [usize; D] {
        let mut c = self.nodes;
        for v in c.iter_mut() {
            *v -= 1;
        }
        c
    }

    pub fn spacing(&self) -> [f64; D] {
        let mut h = [0.0; D];
        for i in 0..D {
            h[i] = self.bbox.width(i) / (self.nodes[i] - 1) as f64;
        }
        h
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing().iter().fold(0.0f64, |a, &b| a.max(b))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.cells().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn node(&self, idx: [usize; D]) -> [f64; D] {
        let h = self.spacing();
        let mut x = self.bbox.lo;
        for i in 0..D {
            x[i] += h[i] * idx[i] as f64;
        }
        x
    }

    pub fn cell_center(&self, idx: [usize; D]) -> [f64; D] {
        let h = self.spacing();
        let mut x = self.bbox.lo;
        for i in 0..D {
            x[i] += h[i] * (idx[i] as f64 + 0.5);
        }
        x
    }

    pub fn cell_box(&self, idx: [usize; D]) -> Aabb<D> {
        let lo = self.node(idx);
        let mut up = idx;
        for v in up.iter_mut() {
            *v += 1;
        }
        Aabb { lo, hi: self.node(up) }
    }

    /// Row-major flat index (last axis fastest) over `extent`.
    pub fn flat(extent: [usize; D], idx: [usize; D]) -> usize {
        let mut f = 0;
        for i in 0..D {
            f = f * extent[i] + idx[i];
        }
        f
    }

    pub fn unflat(extent: [usize; D], mut f: usize) -> [usize; D] {
        let mut idx = [0; D];
        for i in (0..D).rev() {
            idx[i] = f % extent[i];
            f /= extent[i];
        }
        idx
    }

    pub fn node_index(&self, idx: [usize; D]) -> usize {
        Self::flat(self.nodes, idx)
    }

    pub fn cell_index(&self, idx: [usize; D]) -> usize {
        Self::flat(self.cells(), idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let b = Box3::unit();
        assert!(Grid3::new(b, [9, 9, 9]).is_ok());
        assert!(Grid3::new(b, [244, 9, 9]).is_ok());
        assert!(Grid3::new(b, [8, 9, 9]).is_err());
        assert!(Grid3::new(b, [12, 9, 9]).is_err());
        assert!(Box3::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn flat_roundtrip() {
        let ext = [3, 4, 5];
        for f in 0..60 {
            assert_eq!(Grid3::flat(ext, Grid3::unflat(ext, f)), f);
        }
    }
}
