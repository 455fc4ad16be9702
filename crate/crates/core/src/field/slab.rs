use alloc::format;
use num_traits::Float;

use super::grid::{Aabb, Grid};
use super::map::VectorMap;
use super::sampled::{gradient_fd, mollify, sample_map};
use crate::error::{Error, Result};
use crate::quad::Rule1d;

/// Frobenius total variation `|Df|` of a slab `{|x_axis - t| < r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SlabVariation {
    pub mass: f64,
    pub r: f64,
    /// Mollification radius; zero when the analytic derivative was used.
    pub eps: f64,
}

/// `|Df|` of the slab of `grid.bbox` around `x_axis = t`. Uses the declared
/// derivative decomposition when available, else mollified differences.
pub fn slab_variation<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    axis: usize,
    t: f64,
    r: f64,
    grid: &Grid<N>,
) -> Result<SlabVariation> {
    let h = grid.spacing();
    if r < 4.0 * h[axis] * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("slab half-width {r:.3e} below 4 grid cells")));
    }
    let mut slab = grid.bbox;
    slab.lo[axis] = t - r;
    slab.hi[axis] = t + r;
    if !grid.bbox.contains_box(&slab) || !map.domain.contains_box(&slab) {
        return Err(Error::Domain(format!("slab around {t} leaves the region")));
    }
    if map.has_jacobian() {
        Ok(SlabVariation { mass: analytic_mass(map, &slab), r, eps: 0.0 })
    } else {
        mollified_mass(map, axis, &slab, r, h)
    }
}

fn analytic_mass<const N: usize, const M: usize>(map: &VectorMap<N, M>, slab: &Aabb<N>) -> f64 {
    let rules: [Rule1d; N] = core::array::from_fn(|i| Rule1d::composite(&[slab.lo[i], slab.hi[i]], 6));
    let total: usize = rules.iter().map(|r| r.len()).product();
    let mut ext = [0usize; N];
    for i in 0..N {
        ext[i] = rules[i].len();
    }
    let mut ac = 0.0;
    for f in 0..total {
        let idx = Grid::<N>::unflat(ext, f);
        let mut x = [0.0; N];
        let mut w = 1.0;
        for i in 0..N {
            x[i] = rules[i].nodes[idx[i]];
            w *= rules[i].weights[idx[i]];
        }
        let j = map.jacobian_ac(x).unwrap_or([[0.0; N]; M]);
        let fro: f64 = j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        ac += w * fro;
    }
    let mut sing = 0.0;
    for term in &map.singular {
        let k = term.axis;
        let cross: f64 = (0..N).filter(|&i| i != k).map(|i| slab.width(i)).product();
        sing += term.profile.variation(slab.lo[k], slab.hi[k]) * cross;
    }
    ac + sing
}

fn mollified_mass<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    axis: usize,
    slab: &Aabb<N>,
    r: f64,
    h: [f64; N],
) -> Result<SlabVariation> {
    let mut s = h;
    s[axis] = s[axis].min(r / 4.0);
    let eps = 2.0 * s.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut cells = [0usize; N];
    let mut bbox = *slab;
    for i in 0..N {
        let c = ((slab.width(i) + 2.0 * eps) / s[i]).ceil() as usize;
        cells[i] = c.max(2);
        let pad = 0.5 * (cells[i] as f64 * s[i] - slab.width(i));
        bbox.lo[i] -= pad;
        bbox.hi[i] = bbox.lo[i] + cells[i] as f64 * s[i];
    }
    let local = Grid::free(bbox, cells)?;
    let field = mollify(&sample_map(map, &local)?, eps)?;
    let jac = gradient_fd(&field);
    let hs = field.grid.spacing();
    let mut mass = 0.0;
    for (n, j) in jac.values.iter().enumerate() {
        let idx = Grid::<N>::unflat(field.grid.nodes, n);
        let x = field.grid.node(idx);
        let mut w = 1.0;
        for i in 0..N {
            // trapezoid weight clipped to the slab
            let a = (x[i] - 0.5 * hs[i]).max(slab.lo[i]);
            let b = (x[i] + 0.5 * hs[i]).min(slab.hi[i]);
            w *= (b - a).max(0.0);
        }
        if w > 0.0 {
            mass += w * j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        }
    }
    Ok(SlabVariation { mass, r, eps })
}

/// Slab variation of a 2D slice map, used for the slice-wise good-plane bounds.
pub fn slab_variation_slice<const M: usize>(
    map: &VectorMap<2, M>,
    axis: usize,
    t: f64,
    r: f64,
    grid: &Grid<2>,
) -> Result<SlabVariation> {
    slab_variation(map, axis, t, r, grid)
}
