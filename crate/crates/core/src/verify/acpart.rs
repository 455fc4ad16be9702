use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::identity::{check_schedule, Gap, IdentityReport, SINGULAR_TOL};
use crate::adj3d::adj_cube_flux;
use crate::error::{Error, Result};
use crate::field::{Aabb, AnalyticMap, Grid};
use crate::linalg::cofactor_adjugate;
use crate::measure::{ac_split, GridMeasure, SplitMode};
use crate::quad::Rule1d;

/// Cells per side along axes without declared singular support.
pub const AC_CROSS_CELLS: usize = 32;
/// Stieltjes lines per face side of every cell.
pub const AC_LINES: usize = 2;

/// `n` cells along axes carrying declared singular support, at most
/// [`AC_CROSS_CELLS`] along the others.
pub fn acpart_grid(f: &AnalyticMap, q: &Aabb<3>, n: usize) -> Result<Grid<3>> {
    let cells = core::array::from_fn(|k| if f.support.iter().any(|t| t.axis() == k) { n } else { n.min(AC_CROSS_CELLS) });
    Grid::free(*q, cells)
}

/// Cell masses of every entry of `Adj Df`, from face fluxes.
pub fn adj_flux_measures(f: &AnalyticMap, grid: &Grid<3>) -> Result<[[GridMeasure<3>; 3]; 3]> {
    let cells = grid.cells();
    let mut masses = vec![vec![0.0; grid.cell_count()]; 9];
    for c in 0..grid.cell_count() {
        let m = adj_cube_flux(f, &grid.cell_box(Grid::<3>::unflat(cells, c)), AC_LINES)?;
        for k in 0..9 {
            masses[k][c] = m[k / 3][k % 3];
        }
    }
    let mut it = masses.into_iter();
    let mut next = || GridMeasure::new(*grid, it.next().unwrap_or_default());
    Ok([[next()?, next()?, next()?], [next()?, next()?, next()?], [next()?, next()?, next()?]])
}

/// Cell averages of `adj(∇f)` from the a.c. Jacobian.
fn pointwise_averages(f: &AnalyticMap, grid: &Grid<3>) -> Vec<[[f64; 3]; 3]> {
    let cells = grid.cells();
    (0..grid.cell_count())
        .map(|c| {
            let b = grid.cell_box(Grid::<3>::unflat(cells, c));
            let rules: [Rule1d; 3] = core::array::from_fn(|k| Rule1d::composite(&[b.lo[k], b.hi[k]], 1));
            let mut acc = [[0.0; 3]; 3];
            for (x, wx) in rules[0].nodes.iter().zip(&rules[0].weights) {
                for (y, wy) in rules[1].nodes.iter().zip(&rules[1].weights) {
                    for (z, wz) in rules[2].nodes.iter().zip(&rules[2].weights) {
                        let a = cofactor_adjugate(f.jacobian_ac([*x, *y, *z]).unwrap_or([[0.0; 3]; 3]));
                        let w = wx * wy * wz / b.volume();
                        for r in 0..3 {
                            for s in 0..3 {
                                acc[r][s] += w * a[r][s];
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect()
}

fn interior(idx: [usize; 3], cells: [usize; 3]) -> bool {
    (0..3).all(|k| idx[k] > 0 && idx[k] + 1 < cells[k])
}

/// Splits each entry of `Adj Df` on `q` into a.c. and singular parts and
/// compares the a.c. density with `adj(∇f)` on interior cells off the
/// declared singular support. One report per entry, row by row; the
/// headline values are the density and the pointwise average at the worst
/// cell.
pub fn acpart_identity(f: &AnalyticMap, q: &Aabb<3>, resolutions: &[usize]) -> Result<Vec<IdentityReport>> {
    check_schedule(resolutions)?;
    if !f.has_jacobian() {
        return Err(Error::InsufficientData(format!("{} has no derivative decomposition", f.id)));
    }
    if !f.domain.contains_box(q) {
        return Err(Error::Domain(format!("{q:?} leaves the domain of {}", f.id)));
    }
    let mode = SplitMode::Metadata(f.support.clone());
    let mut gaps = vec![Vec::with_capacity(resolutions.len()); 9];
    let mut extra: Vec<Vec<(String, f64)>> = vec![Vec::new(); 9];
    for &n in resolutions {
        let grid = acpart_grid(f, q, n)?;
        let cells = grid.cells();
        let measures = adj_flux_measures(f, &grid)?;
        let oracle = pointwise_averages(f, &grid);
        let splits = (0..9).map(|k| ac_split(&measures[k / 3][k % 3], Some(&mode))).collect::<Result<Vec<_>>>()?;
        let sample: Vec<usize> = (0..grid.cell_count())
            .filter(|&c| interior(Grid::<3>::unflat(cells, c), cells) && splits.iter().all(|s| !s.flags[c]))
            .collect();
        if sample.is_empty() {
            return Err(Error::InsufficientData(format!("no interior cells off the singular support at n = {n}")));
        }
        let scale = sample.iter().flat_map(|&c| oracle[c].iter().flatten().map(|v| v.abs())).fold(0.0, f64::max);
        for (k, split) in splits.iter().enumerate() {
            let (i, j) = (k / 3, k % 3);
            let worst = sample
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let ga = (split.density[a] - oracle[a][i][j]).abs();
                    let gb = (split.density[b] - oracle[b][i][j]).abs();
                    ga.partial_cmp(&gb).unwrap_or(core::cmp::Ordering::Equal)
                })
                .unwrap_or(sample[0]);
            gaps[k].push(Gap::new(n, split.density[worst], oracle[worst][i][j], scale));
            extra[k] = vec![
                ("singular_mass".into(), split.singular_excess),
                ("singular_restriction".into(), split.singular.total()),
                ("ac_mass".into(), split.ac.total()),
                ("singular_cells".into(), split.singular_cells as f64),
                ("sample_cells".into(), sample.len() as f64),
            ];
        }
    }
    let mut out = Vec::with_capacity(9);
    for (k, (g, e)) in gaps.into_iter().zip(extra).enumerate() {
        let mut r = IdentityReport::new("ac-part", &f.id, core::slice::from_ref(q), Some((k / 3, k % 3)), g, SINGULAR_TOL)?;
        r.extra.extend(e);
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn smooth_density_matches_pointwise() {
        let r = acpart_identity(&gallery::sine_shear(0.3), &Aabb::unit(), &[8, 16]).unwrap();
        for rep in &r {
            assert!(rep.pass, "{rep:?}");
            assert!(rep.extra["singular_mass"].abs() < 1e-3);
        }
        let a = [[1.0, 0.3, 0.0], [0.2, 2.0, -0.1], [0.0, 0.5, 1.5]];
        let adj = cofactor_adjugate(a);
        for rep in acpart_identity(&gallery::linear(a), &Aabb::unit(), &[6]).unwrap() {
            let [i, j] = rep.ij.unwrap();
            assert!(rep.abs_gap < 1e-9 && (rep.right - adj[i - 1][j - 1]).abs() < 1e-9, "{rep:?}");
            assert!(rep.extra["singular_mass"] == 0.0);
        }
    }

    #[test]
    fn cantor_entry_is_singular() {
        let r = acpart_identity(&gallery::cantor_shear(0), &Aabb::unit(), &[27]).unwrap();
        let e31 = &r[6];
        assert_eq!(e31.ij, Some([3, 1]));
        assert!(e31.pass && e31.left.abs() < 1e-9, "{e31:?}");
        assert!((e31.extra["singular_mass"] + 1.0).abs() < 1e-9, "{e31:?}");
        let e11 = &r[0];
        assert!(e11.extra["singular_mass"].abs() < 1e-9, "{e11:?}");
    }

    #[test]
    fn missing_derivatives() {
        let f = crate::field::VectorMap::new("bare", gallery::domain3(), |x: [f64; 3]| x);
        assert!(matches!(acpart_identity(&f, &Aabb::unit(), &[4]), Err(Error::InsufficientData(_))));
    }
}
