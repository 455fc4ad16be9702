use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use super::grid::{Aabb, Grid};
use super::map::{kappa_axes, VectorMap};
use crate::error::{Error, Result};

/// Values of an `R^M`-valued field at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField<const D: usize, const M: usize> {
    pub grid: Grid<D>,
    pub values: Vec<[f64; M]>,
}

impl<const D: usize, const M: usize> SampledField<D, M> {
    pub fn new(grid: Grid<D>, values: Vec<[f64; M]>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Domain(format!("{} values for {} nodes", values.len(), grid.node_count())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        Ok(SampledField { grid, values })
    }

    pub fn at(&self, idx: [usize; D]) -> [f64; M] {
        self.values[self.grid.node_index(idx)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `f` at every node of `grid`.
pub fn sample_map<const D: usize, const M: usize>(
    map: &VectorMap<D, M>,
    grid: &Grid<D>,
) -> Result<SampledField<D, M>> {
    if !map.domain.contains_box(&grid.bbox) {
        return Err(Error::Domain(format!("grid box {:?} outside domain of {}", grid.bbox, map.id)));
    }
    let mut values = Vec::with_capacity(grid.node_count());
    for f in 0..grid.node_count() {
        let idx = Grid::<D>::unflat(grid.nodes, f);
        values.push(map.try_eval(grid.node(idx))?);
    }
    Ok(SampledField { grid: *grid, values })
}

/// Unnormalised mollifier profile `(1 - s^2)^3` at `s = |x|/eps`.
pub fn mollifier_weight(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        u * u * u
    }
}

/// Convolution with the radial `(1 - |x/eps|^2)^3` kernel, normalised on the
/// grid stencil. The result lives on the grid shrunk by the stencil radius.
pub fn mollify<const D: usize, const M: usize>(
    field: &SampledField<D, M>,
    eps: f64,
) -> Result<SampledField<D, M>> {
    let h = field.grid.spacing();
    if eps < 2.0 * field.grid.max_spacing() * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("eps {eps:.3e} below twice the grid spacing")));
    }
    let mut r = [0usize; D];
    let mut out_nodes = [0usize; D];
    let mut lo = field.grid.bbox.lo;
    let mut hi = field.grid.bbox.hi;
    for i in 0..D {
        r[i] = (eps / h[i] * (1.0 + 1e-12)).floor() as usize;
        if field.grid.nodes[i] <= 2 * r[i] + 1 {
            return Err(Error::Domain(format!("eps-shrunk domain empty along axis {}", i + 1)));
        }
        out_nodes[i] = field.grid.nodes[i] - 2 * r[i];
        lo[i] += r[i] as f64 * h[i];
        hi[i] = lo[i] + (out_nodes[i] - 1) as f64 * h[i];
    }
    let mut ext = [0usize; D];
    for i in 0..D {
        ext[i] = 2 * r[i] + 1;
    }
    let mut stencil: Vec<(usize, f64)> = Vec::new();
    let mut total = 0.0;
    for f in 0..ext.iter().product() {
        let o = Grid::<D>::unflat(ext, f);
        let mut s2 = 0.0;
        let mut shift = [0usize; D];
        for i in 0..D {
            let d = (o[i] as f64 - r[i] as f64) * h[i];
            s2 += d * d;
            shift[i] = o[i];
        }
        let w = mollifier_weight(s2.sqrt() / eps);
        if w > 0.0 {
            stencil.push((Grid::<D>::flat(field.grid.nodes, shift), w));
            total += w;
        }
    }
    for s in stencil.iter_mut() {
        s.1 /= total;
    }
    let grid = Grid { bbox: Aabb { lo, hi }, nodes: out_nodes };
    let mut values = Vec::with_capacity(grid.node_count());
    for f in 0..grid.node_count() {
        let base = field.grid.node_index(Grid::<D>::unflat(out_nodes, f));
        let mut acc = [0.0; M];
        for &(off, w) in &stencil {
            let v = &field.values[base + off];
            for a in 0..M {
                acc[a] += w * v[a];
            }
        }
        values.push(acc);
    }
    Ok(SampledField { grid, values })
}

/// Per-node Jacobians, `values[n][a][k] = ∂_k f_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianField<const D: usize, const M: usize> {
    pub grid: Grid<D>,
    pub values: Vec<[[f64; D]; M]>,
}

/// Central differences inside, one-sided differences on the boundary.
pub fn gradient_fd<const D: usize, const M: usize>(field: &SampledField<D, M>) -> JacobianField<D, M> {
    let g = &field.grid;
    let h = g.spacing();
    let mut values = Vec::with_capacity(g.node_count());
    for f in 0..g.node_count() {
        let idx = Grid::<D>::unflat(g.nodes, f);
        let mut jac = [[0.0; D]; M];
        for k in 0..D {
            let n = g.nodes[k];
            let (lo, hi) = match idx[k] {
                0 => (0, 1),
                i if i == n - 1 => (i - 1, i),
                i => (i - 1, i + 1),
            };
            let mut a_idx = idx;
            let mut b_idx = idx;
            a_idx[k] = lo;
            b_idx[k] = hi;
            let (va, vb) = (field.at(a_idx), field.at(b_idx));
            let dx = (hi - lo) as f64 * h[k];
            for a in 0..M {
                jac[a][k] = (vb[a] - va[a]) / dx;
            }
        }
        values.push(jac);
    }
    JacobianField { grid: *g, values }
}

/// Restriction of a sampled 3D field to `{x_axis = t}`, reindexed by `κ_axis^t`
/// and linearly interpolated between node layers.
pub fn slice_field<const M: usize>(field: &SampledField<3, M>, axis: usize, t: f64) -> Result<SampledField<2, M>> {
    let g = &field.grid;
    if !(t > g.bbox.lo[axis] && t < g.bbox.hi[axis]) {
        return Err(Error::Domain(format!("slice t = {t} outside grid along axis {}", axis + 1)));
    }
    let (a1, a2) = kappa_axes(axis);
    let h = g.spacing()[axis];
    let u = (t - g.bbox.lo[axis]) / h;
    let k0 = (u.floor() as usize).min(g.nodes[axis] - 2);
    let frac = u - k0 as f64;
    let grid2 = Grid {
        bbox: Aabb { lo: [g.bbox.lo[a1], g.bbox.lo[a2]], hi: [g.bbox.hi[a1], g.bbox.hi[a2]] },
        nodes: [g.nodes[a1], g.nodes[a2]],
    };
    let mut values = Vec::with_capacity(grid2.node_count());
    for p in 0..grid2.nodes[0] {
        for q in 0..grid2.nodes[1] {
            let mut idx = [0usize; 3];
            idx[a1] = p;
            idx[a2] = q;
            idx[axis] = k0;
            let v0 = field.at(idx);
            idx[axis] = k0 + 1;
            let v1 = field.at(idx);
            let mut v = [0.0; M];
            for a in 0..M {
                v[a] = v0[a] + frac * (v1[a] - v0[a]);
            }
            values.push(v);
        }
    }
    Ok(SampledField { grid: grid2, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Box3;

    fn grid3(n: usize) -> Grid<3> {
        Grid::with_cells(Box3::unit(), n).unwrap()
    }

    #[test]
    fn identity_samples_are_node_coordinates() {
        let f = VectorMap::new("id", Box3::unit(), |x: [f64; 3]| x);
        let s = sample_map(&f, &grid3(8)).unwrap();
        assert_eq!(s.at([1, 2, 3]), [0.125, 0.25, 0.375]);
    }

    #[test]
    fn non_finite_rejected() {
        let f = VectorMap::new("bad", Box3::unit(), |x: [f64; 3]| [1.0 / x[0], 0.0, 0.0]);
        assert!(matches!(sample_map(&f, &grid3(8)), Err(Error::Domain(_))));
    }

    #[test]
    fn mollify_constant_and_linear() {
        let f = VectorMap::new("lin", Box3::unit(), |x: [f64; 3]| [5.0, x[0], 2.0 * x[1] - x[2]]);
        let s = sample_map(&f, &grid3(32)).unwrap();
        let m = mollify(&s, 0.1).unwrap();
        assert!(m.grid.nodes[0] < 33);
        for (i, v) in m.values.iter().enumerate() {
            let x = m.grid.node(Grid::<3>::unflat(m.grid.nodes, i));
            assert!((v[0] - 5.0).abs() < 1e-12);
            assert!((v[1] - x[0]).abs() < 1e-12);
            assert!((v[2] - 2.0 * x[1] + x[2]).abs() < 1e-12);
        }
        let jac = gradient_fd(&m);
        for j in &jac.values {
            assert!((j[1][0] - 1.0).abs() < 1e-9 && j[1][1].abs() < 1e-9);
            assert!((j[2][1] - 2.0).abs() < 1e-9 && (j[2][2] + 1.0).abs() < 1e-9);
        }
        assert!(mollify(&s, 0.01).is_err());
        assert!(mollify(&s, 0.6).is_err());
    }

    #[test]
    fn central_difference_exact_for_quadratic() {
        let f = VectorMap::new("sq", Box3::unit(), |x: [f64; 3]| [x[0] * x[0]]);
        let s = sample_map(&f, &grid3(8)).unwrap();
        let j = gradient_fd(&s);
        let idx = s.grid.node_index([4, 3, 3]);
        assert_eq!(j.values[idx][0][0], 1.0);
    }

    #[test]
    fn slice_field_interpolates() {
        let f = VectorMap::new("lin", Box3::unit(), |x: [f64; 3]| [x[0] + 10.0 * x[1] + 100.0 * x[2]]);
        let s = sample_map(&f, &grid3(8)).unwrap();
        let sl = slice_field(&s, 1, 0.3).unwrap();
        // κ2: y1 -> x3, y2 -> x1
        let v = sl.at([2, 4])[0];
        assert!((v - (0.5 + 3.0 + 25.0)).abs() < 1e-12);
    }
}
