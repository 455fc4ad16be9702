//! Signed measures as cell masses on uniform grids.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{Aabb, Grid, SupportTag};

/// Signed measure given by the masses of the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GridMeasure<const D: usize> {
    pub grid: Grid<D>,
    pub masses: Vec<f64>,
}

impl<const D: usize> GridMeasure<D> {
    pub fn new(grid: Grid<D>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.cell_count() {
            return Err(Error::Domain(format!("{} masses for {} cells", masses.len(), grid.cell_count())));
        }
        if masses.iter().any(|m| !m.is_finite()) {
            return Err(Error::Domain("non-finite mass".into()));
        }
        Ok(GridMeasure { grid, masses })
    }

    pub fn zero(grid: Grid<D>) -> Self {
        GridMeasure { grid, masses: vec![0.0; grid.cell_count()] }
    }

    /// Lebesgue measure restricted to the grid box.
    pub fn lebesgue(grid: Grid<D>) -> Self {
        GridMeasure { grid, masses: vec![grid.cell_volume(); grid.cell_count()] }
    }

    /// Measure with density `rho` sampled at cell centres.
    pub fn from_density(grid: Grid<D>, rho: impl Fn([f64; D]) -> f64) -> Self {
        let vol = grid.cell_volume();
        let cells = grid.cells();
        let masses = (0..grid.cell_count()).map(|c| rho(grid.cell_center(Grid::<D>::unflat(cells, c))) * vol).collect();
        GridMeasure { grid, masses }
    }

    pub fn mass(&self, idx: [usize; D]) -> f64 {
        self.masses[self.grid.cell_index(idx)]
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.masses.iter().map(|m| m.abs()).sum()
    }

    /// Cell index range `[start, end)` per axis covered by `cube`.
    pub fn aligned_range(&self, cube: &Aabb<D>) -> Result<([usize; D], [usize; D])> {
        let h = self.grid.spacing();
        let cells = self.grid.cells();
        let mut start = [0; D];
        let mut end = [0; D];
        for i in 0..D {
            let a = (cube.lo[i] - self.grid.bbox.lo[i]) / h[i];
            let b = (cube.hi[i] - self.grid.bbox.lo[i]) / h[i];
            let (ra, rb) = (a.round(), b.round());
            if (a - ra).abs() > 1e-9 || (b - rb).abs() > 1e-9 || ra < 0.0 || rb > cells[i] as f64 || ra >= rb {
                return Err(Error::Alignment(format!("axis {}: [{}, {}] vs spacing {}", i + 1, cube.lo[i], cube.hi[i], h[i])));
            }
            start[i] = ra as usize;
            end[i] = rb as usize;
        }
        Ok((start, end))
    }

    /// Exact sum of the masses of the cells inside an aligned cube.
    pub fn region_mass(&self, cube: &Aabb<D>) -> Result<f64> {
        let (start, end) = self.aligned_range(cube)?;
        let mut ext = [0; D];
        for i in 0..D {
            ext[i] = end[i] - start[i];
        }
        let n: usize = ext.iter().product();
        let mut sum = 0.0;
        for f in 0..n {
            let mut idx = Grid::<D>::unflat(ext, f);
            for i in 0..D {
                idx[i] += start[i];
            }
            sum += self.mass(idx);
        }
        Ok(sum)
    }

    /// Masses of the `2^(D depth)` dyadic subcubes of the grid box, row-major.
    pub fn dyadic_masses(&self, depth: u32) -> Result<Vec<f64>> {
        let k = 1usize << depth;
        let ext = [k; D];
        (0..k.pow(D as u32))
            .map(|f| self.region_mass(&dyadic_cube(&self.grid.bbox, depth, Grid::<D>::unflat(ext, f))))
            .collect()
    }

    pub fn add(&self, other: &GridMeasure<D>) -> Result<GridMeasure<D>> {
        if self.grid != other.grid {
            return Err(Error::Domain("measures live on different grids".into()));
        }
        let masses = self.masses.iter().zip(&other.masses).map(|(a, b)| a + b).collect();
        Ok(GridMeasure { grid: self.grid, masses })
    }

    pub fn scaled(&self, s: f64) -> GridMeasure<D> {
        GridMeasure { grid: self.grid, masses: self.masses.iter().map(|m| m * s).collect() }
    }
}

/// Dyadic subcube `idx` at `depth` of `bbox`.
pub fn dyadic_cube<const D: usize>(bbox: &Aabb<D>, depth: u32, idx: [usize; D]) -> Aabb<D> {
    let k = (1u64 << depth) as f64;
    let mut c = *bbox;
    for i in 0..D {
        let w = bbox.width(i) / k;
        c.lo[i] = bbox.lo[i] + w * idx[i] as f64;
        c.hi[i] = bbox.lo[i] + w * (idx[i] + 1) as f64;
    }
    c
}

/// 3×3 matrix of measures on a shared grid; `entries[i][j]` is the `(i+1, j+1)` entry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatrixMeasure33 {
    pub entries: [[GridMeasure<3>; 3]; 3],
}

impl MatrixMeasure33 {
    pub fn new(entries: [[GridMeasure<3>; 3]; 3]) -> Result<Self> {
        let g = entries[0][0].grid;
        if entries.iter().flatten().any(|e| e.grid != g) {
            return Err(Error::Domain("matrix entries on different grids".into()));
        }
        Ok(MatrixMeasure33 { entries })
    }

    pub fn grid(&self) -> Grid<3> {
        self.entries[0][0].grid
    }

    pub fn region_mass(&self, cube: &Aabb<3>) -> Result<[[f64; 3]; 3]> {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.entries[i][j].region_mass(cube)?;
            }
        }
        Ok(out)
    }
}

/// `μ = ∫ μ_t dν(t)` along one axis of a 3D grid measure.
///
/// Slice masses are stored as quotients `q = m/ν` together with the exact
/// remainders `m - qν`, so that reconstruction is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Disintegration {
    pub axis: usize,
    pub base: GridMeasure<1>,
    pub slices: Vec<GridMeasure<2>>,
    remainders: Vec<Vec<f64>>,
    grid: Grid<3>,
}

fn layer_grid(grid: &Grid<3>, axis: usize) -> Grid<2> {
    let (a1, a2) = crate::linalg::cyclic(axis);
    Grid {
        bbox: Aabb { lo: [grid.bbox.lo[a1], grid.bbox.lo[a2]], hi: [grid.bbox.hi[a1], grid.bbox.hi[a2]] },
        nodes: [grid.nodes[a1], grid.nodes[a2]],
    }
}

fn cell_of(axis: usize, t: usize, p: usize, q: usize) -> [usize; 3] {
    let (a1, a2) = crate::linalg::cyclic(axis);
    let mut idx = [0; 3];
    idx[axis] = t;
    idx[a1] = p;
    idx[a2] = q;
    idx
}

/// Base `ν(t) = |μ|(layer t)` and normalised slices.
pub fn disintegrate(m: &GridMeasure<3>, axis: usize) -> Result<Disintegration> {
    if m.total_variation() == 0.0 {
        return Err(Error::EmptyMeasure);
    }
    let cells = m.grid.cells();
    let lg = layer_grid(&m.grid, axis);
    let lc = lg.cells();
    let mut base = Vec::with_capacity(cells[axis]);
    let mut slices = Vec::with_capacity(cells[axis]);
    let mut remainders = Vec::with_capacity(cells[axis]);
    for t in 0..cells[axis] {
        let mut layer = Vec::with_capacity(lc[0] * lc[1]);
        for p in 0..lc[0] {
            for q in 0..lc[1] {
                layer.push(m.mass(cell_of(axis, t, p, q)));
            }
        }
        let nu: f64 = layer.iter().map(|v| v.abs()).sum();
        let (q, r): (Vec<f64>, Vec<f64>) = if nu > 0.0 {
            layer
                .iter()
                .map(|&v| {
                    let q = v / nu;
                    (q, (-q).mul_add(nu, v))
                })
                .unzip()
        } else {
            (vec![0.0; layer.len()], layer)
        };
        base.push(nu);
        slices.push(GridMeasure { grid: lg, masses: q });
        remainders.push(r);
    }
    let g = m.grid;
    let base_grid = Grid { bbox: Aabb { lo: [g.bbox.lo[axis]], hi: [g.bbox.hi[axis]] }, nodes: [g.nodes[axis]] };
    Ok(Disintegration { axis, base: GridMeasure { grid: base_grid, masses: base }, slices, remainders, grid: g })
}

/// Cell masses `ν(t) μ_t(cell)`.
pub fn reconstruct(d: &Disintegration) -> GridMeasure<3> {
    let mut out = GridMeasure::zero(d.grid);
    let lc = layer_grid(&d.grid, d.axis).cells();
    for (t, slice) in d.slices.iter().enumerate() {
        let nu = d.base.masses[t];
        for p in 0..lc[0] {
            for q in 0..lc[1] {
                let k = p * lc[1] + q;
                let v = slice.masses[k].mul_add(nu, d.remainders[t][k]);
                let c = d.grid.cell_index(cell_of(d.axis, t, p, q));
                out.masses[c] = v;
            }
        }
    }
    out
}

/// How the singular part is located.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitMode<const D: usize> {
    /// Declared singular support, thickened by one cell.
    Metadata(Vec<SupportTag>),
    /// The same measure on the grid refined once by a factor of two.
    Refinement(GridMeasure<D>),
}

/// Lebesgue decomposition surrogate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AcSplit<const D: usize> {
    /// The a.c. part: the measure off the singular cells.
    pub ac: GridMeasure<D>,
    /// Density of the a.c. part per cell (zero on singular cells).
    pub density: Vec<f64>,
    /// Restriction of the measure to the singular cells.
    pub singular: GridMeasure<D>,
    /// Singular mass net of the a.c. background extrapolated from the
    /// nearest regular cells.
    pub singular_excess: f64,
    pub singular_cells: usize,
    /// Cells assigned to the singular part.
    pub flags: Vec<bool>,
    pub mode: &'static str,
}

/// Splits `m` into an a.c. density and a singular restriction.
pub fn ac_split<const D: usize>(m: &GridMeasure<D>, mode: Option<&SplitMode<D>>) -> Result<AcSplit<D>> {
    let cells = m.grid.cells();
    let h = m.grid.spacing();
    let n = m.grid.cell_count();
    let (flags, name) = match mode {
        None => return Err(Error::InsufficientData("no singular support and no refinement".into())),
        Some(SplitMode::Metadata(tags)) => {
            let flags: Vec<bool> = (0..n)
                .map(|c| {
                    let b = m.grid.cell_box(Grid::<D>::unflat(cells, c));
                    tags.iter().any(|t| {
                        let k = t.axis();
                        k < D && t.meets_slab(k, b.lo[k] - h[k], b.hi[k] + h[k])
                    })
                })
                .collect();
            (flags, "metadata")
        }
        Some(SplitMode::Refinement(fine)) => {
            let fc = fine.grid.cells();
            if fine.grid.bbox != m.grid.bbox || (0..D).any(|i| fc[i] != 2 * cells[i]) {
                return Err(Error::InsufficientData("refinement measure must be on the doubled grid".into()));
            }
            let ratio = m.grid.cell_volume() / fine.grid.cell_volume();
            let flags = (0..n)
                .map(|c| {
                    let idx = Grid::<D>::unflat(cells, c);
                    let parent = m.masses[c].abs();
                    if parent == 0.0 {
                        return false;
                    }
                    let mut max_child = 0.0f64;
                    for s in 0..(1usize << D) {
                        let mut ci = [0; D];
                        for i in 0..D {
                            ci[i] = 2 * idx[i] + ((s >> i) & 1);
                        }
                        max_child = max_child.max(fine.mass(ci).abs() * ratio);
                    }
                    max_child >= core::f64::consts::SQRT_2 * parent
                })
                .collect();
            (flags, "refinement")
        }
    };
    let vol = m.grid.cell_volume();
    let mut density = vec![0.0; n];
    let mut singular = GridMeasure::zero(m.grid);
    let mut ac = GridMeasure::zero(m.grid);
    for c in 0..n {
        if flags[c] {
            singular.masses[c] = m.masses[c];
        } else {
            ac.masses[c] = m.masses[c];
            density[c] = m.masses[c] / vol;
        }
    }
    let mut excess = 0.0;
    for c in 0..n {
        if flags[c] {
            excess += m.masses[c] - background(&density, &flags, cells, c) * vol;
        }
    }
    let singular_cells = flags.iter().filter(|&&f| f).count();
    Ok(AcSplit { ac, density, singular, singular_excess: excess, singular_cells, flags, mode: name })
}

/// Mean density of the nearest regular cells along each axis.
fn background<const D: usize>(density: &[f64], flags: &[bool], cells: [usize; D], c: usize) -> f64 {
    let idx = Grid::<D>::unflat(cells, c);
    let mut sum = 0.0;
    let mut count = 0;
    for k in 0..D {
        for dir in [-1i64, 1] {
            let mut j = idx;
            loop {
                let next = j[k] as i64 + dir;
                if next < 0 || next >= cells[k] as i64 {
                    break;
                }
                j[k] = next as usize;
                let f = Grid::<D>::flat(cells, j);
                if !flags[f] {
                    sum += density[f];
                    count += 1;
                    break;
                }
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
