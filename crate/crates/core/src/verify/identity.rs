use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use super::good::{face_cover, image_bounds, screen_cube, COVER_FRACTION};
use crate::adj3d::adj_cube_flux;
use crate::degree::{degree_columns, degree_weighted_integral, degree_weighted_stieltjes, target_grid, DegreeColumns};
use crate::error::{Error, Result};
use crate::field::{Aabb, AnalyticMap, ScalarMap, SingularTerm, Smoothness, VectorMap};
use crate::linalg::cyclic;
use crate::pairing::{derivative_pairing, mollified_derivative_pairing, QuadLevel};
use crate::quad::Rule1d;
use crate::testfn::richardson;

/// Relative tolerance of identities on maps without singular parts.
pub const SMOOTH_TOL: f64 = 0.02;
/// Relative tolerance when a singular part is present.
pub const SINGULAR_TOL: f64 = 0.03;

const CHECK_SEED: u64 = 0x6964_656e_7469_7479;

/// Both sides of an identity at one resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Gap {
    pub resolution: usize,
    pub left: f64,
    pub right: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

impl Gap {
    /// `rel_gap` divides by the larger side, but never by less than `reference`.
    pub fn new(resolution: usize, left: f64, right: f64, reference: f64) -> Self {
        let abs_gap = (left - right).abs();
        let scale = left.abs().max(right.abs()).max(reference);
        let rel_gap = if scale > 0.0 { abs_gap / scale } else { 0.0 };
        Gap { resolution, left, right, abs_gap, rel_gap }
    }
}

/// Outcome of one identity check. The headline values are those of the
/// finest resolution; `gaps` keeps the whole schedule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IdentityReport {
    pub theorem: String,
    pub map: String,
    pub region: Vec<Aabb<3>>,
    /// One-based matrix entry.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub ij: Option<[usize; 2]>,
    pub left: f64,
    pub right: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub schedule: Vec<usize>,
    pub gaps: Vec<Gap>,
    pub extra: BTreeMap<String, f64>,
    pub pass: bool,
}

impl IdentityReport {
    pub fn new(
        theorem: &str,
        map: &str,
        region: &[Aabb<3>],
        ij: Option<(usize, usize)>,
        gaps: Vec<Gap>,
        tolerance: f64,
    ) -> Result<Self> {
        let last = *gaps.last().ok_or_else(|| Error::Resolution("empty resolution schedule".into()))?;
        Ok(IdentityReport {
            theorem: theorem.into(),
            map: map.into(),
            region: region.to_vec(),
            ij: ij.map(|(i, j)| [i + 1, j + 1]),
            left: last.left,
            right: last.right,
            abs_gap: last.abs_gap,
            rel_gap: last.rel_gap,
            tolerance,
            schedule: gaps.iter().map(|g| g.resolution).collect(),
            gaps,
            extra: BTreeMap::new(),
            pass: last.rel_gap <= tolerance,
        })
    }
}

pub(crate) fn check_schedule(resolutions: &[usize]) -> Result<()> {
    if resolutions.is_empty() || resolutions.contains(&0) {
        return Err(Error::Resolution("resolutions must be positive and non-empty".into()));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Resolution("resolutions must increase".into()));
    }
    Ok(())
}

pub(crate) fn check_figure(f: &AnalyticMap, figure: &[Aabb<3>]) -> Result<()> {
    if figure.is_empty() {
        return Err(Error::Domain("empty figure".into()));
    }
    for (k, a) in figure.iter().enumerate() {
        if !f.domain.contains_box(a) {
            return Err(Error::Domain(format!("{a:?} leaves the domain of {}", f.id)));
        }
        for b in &figure[k + 1..] {
            if a.intersect(b).is_some_and(|c| c.volume() > 0.0) {
                return Err(Error::Domain(format!("figure boxes {a:?} and {b:?} overlap")));
            }
        }
    }
    Ok(())
}

/// Smallest box containing every box of `figure`.
pub fn figure_bounds(figure: &[Aabb<3>]) -> Aabb<3> {
    let mut out = figure[0];
    for b in &figure[1..] {
        for k in 0..3 {
            out.lo[k] = out.lo[k].min(b.lo[k]);
            out.hi[k] = out.hi[k].max(b.hi[k]);
        }
    }
    out
}

pub fn figure_volume(figure: &[Aabb<3>]) -> f64 {
    figure.iter().map(|b| b.volume()).sum()
}

/// Two boxes `[a, 1/2] × [a, 1-a]^2` and `[1/2, 1-a] × [a, 1-a]^2` with
/// `a = 1/(2·3^m)`. Their faces avoid the middle-thirds Cantor set and they
/// exhaust `(0,1)^3` as `m` grows.
pub fn interior_figure(m: u32) -> Vec<Aabb<3>> {
    let a = 0.5 / 3f64.powi(m as i32);
    alloc::vec![
        Aabb { lo: [a; 3], hi: [0.5, 1.0 - a, 1.0 - a] },
        Aabb { lo: [0.5, a, a], hi: [1.0 - a; 3] },
    ]
}

/// `x ↦ (x1, x2, u(x))`.
pub fn height_composite(u: &ScalarMap) -> AnalyticMap {
    let e = u.evaluator();
    let mut h = VectorMap::new(format!("({}: x1, x2, u)", u.id), u.domain, move |x: [f64; 3]| [x[0], x[1], e(x)[0]]);
    if u.has_jacobian() {
        let v = u.clone();
        h = h.with_jacobian(move |x| {
            let g = v.jacobian_ac(x).unwrap_or([[0.0; 3]])[0];
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], g]
        });
    }
    h.singular = u.singular.iter().map(|t| SingularTerm { component: 2, ..*t }).collect();
    h.smoothness = [Smoothness::C1, Smoothness::C1, u.smoothness[0]];
    h.support = u.support.clone();
    h
}

/// `x ↦ (f_j', f_j'', x_i)`, whose Jacobian determinant is `adj(Df)_ij`.
pub fn adj_composite(f: &AnalyticMap, i: usize, j: usize) -> AnalyticMap {
    let (j1, j2) = cyclic(j);
    let s = f.select([j1, j2]);
    let e = s.evaluator();
    let id = format!("({}: f{}, f{}, x{})", f.id, j1 + 1, j2 + 1, i + 1);
    let mut g = VectorMap::new(id, f.domain, move |x: [f64; 3]| {
        let y = e(x);
        [y[0], y[1], x[i]]
    });
    if s.has_jacobian() {
        let v = s.clone();
        g = g.with_jacobian(move |x| {
            let d = v.jacobian_ac(x).unwrap_or([[0.0; 3]; 2]);
            let mut row = [0.0; 3];
            row[i] = 1.0;
            [d[0], d[1], row]
        });
    }
    g.singular = s.singular.clone();
    g.smoothness = [s.smoothness[0], s.smoothness[1], Smoothness::C1];
    g.support = s.support.clone();
    g
}

/// Degree columns of `g` on `figure` with `n` boundary cells per box side and
/// a column grid of spacing `s / 2n` aligned to the origin, `s` the power of
/// two at or above the largest side of the figure.
pub fn figure_columns(g: &VectorMap<3, 3>, figure: &[Aabb<3>], n: usize) -> Result<DegreeColumns> {
    let b = figure_bounds(figure);
    let side = (0..3).map(|k| b.width(k)).fold(0.0, f64::max);
    let s = 2f64.powi(side.log2().ceil() as i32);
    let h = s / (2 * n) as f64;
    let mut img = image_bounds(g, &figure[0]);
    for q in &figure[1..] {
        let other = image_bounds(g, q);
        for k in 0..3 {
            img.lo[k] = img.lo[k].min(other.lo[k]);
            img.hi[k] = img.hi[k].max(other.hi[k]);
        }
    }
    let w = (0..2).map(|k| img.width(k)).fold(0.0, f64::max);
    let rect = Aabb { lo: [img.lo[0], img.lo[1]], hi: [img.hi[0], img.hi[1]] }.expand(0.05 * w + 2.0 * h);
    let xy = target_grid(&rect, h, [0.0; 2])?;
    degree_columns(g, figure, &xy, n)
}

fn cover_precheck(g: &AnalyticMap, figure: &[Aabb<3>]) -> Result<()> {
    for q in figure {
        let img = image_bounds(g, q);
        for axis in 0..3 {
            for at in [q.lo[axis], q.hi[axis]] {
                let c = face_cover(g, q, axis, at, &img, CHECK_SEED ^ axis as u64);
                if c > COVER_FRACTION {
                    return Err(Error::Hypothesis(format!(
                        "image of the face x{} = {at} of {q:?} under {} covers {c:.3e} of its box",
                        axis + 1,
                        g.id
                    )));
                }
            }
        }
    }
    Ok(())
}

fn tolerance_for(maps: &[&[SingularTerm]]) -> f64 {
    if maps.iter().all(|s| s.is_empty()) {
        SMOOTH_TOL
    } else {
        SINGULAR_TOL
    }
}

/// `D_3 u(Q)` from the derivative decomposition, or from mollified
/// gradients when none is declared.
pub fn vertical_derivative_mass(u: &ScalarMap, q: &Aabb<3>) -> Result<f64> {
    if u.has_jacobian() {
        let breaks: [Vec<f64>; 3] = core::array::from_fn(|k| alloc::vec![q.lo[k], q.hi[k]]);
        return Ok(derivative_pairing(u, 0, 2, &|_| 1.0, &breaks, QuadLevel::DEFAULT)?.value);
    }
    let l = (0..3).map(|k| q.width(k)).fold(f64::INFINITY, f64::min);
    let eps = [l / 16.0, l / 32.0];
    let inside = |x: [f64; 3]| if q.contains(x) { 1.0 } else { 0.0 };
    let v: Vec<f64> =
        eps.iter().map(|&e| mollified_derivative_pairing(u, 0, 2, &inside, q, e)).collect::<Result<_>>()?;
    Ok(richardson(&eps, &v, 1).0)
}

/// `∫ deg((x1, x2, u), U, z) dz` against `D_3 u(U)`.
pub fn grad_degree_identity(u: &ScalarMap, figure: &[Aabb<3>], resolutions: &[usize]) -> Result<IdentityReport> {
    check_schedule(resolutions)?;
    let h = height_composite(u);
    check_figure(&h, figure)?;
    cover_precheck(&h, figure)?;
    let right: f64 = figure.iter().map(|q| vertical_derivative_mass(u, q)).sum::<Result<f64>>()?;
    let vol = figure_volume(figure);
    let mut gaps = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let left = degree_weighted_integral(&h, figure, n, &|y| y[2]);
        gaps.push(Gap::new(n, left, right, vol));
    }
    IdentityReport::new("gradient-degree", &u.id, figure, None, gaps, tolerance_for(&[&u.singular]))
}

/// `∫ deg(g_ij, Q, z) dz` against `Adj_ij Df(Q)`, zero-based `(i, j)`.
pub fn adj_degree_identity(f: &AnalyticMap, q: &Aabb<3>, i: usize, j: usize, resolutions: &[usize]) -> Result<IdentityReport> {
    check_schedule(resolutions)?;
    if i > 2 || j > 2 {
        return Err(Error::Domain(format!("entry ({}, {}) out of range", i + 1, j + 1)));
    }
    check_figure(f, core::slice::from_ref(q))?;
    screen_cube(f, q)?;
    let g = adj_composite(f, i, j);
    let mut gaps = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let left = degree_weighted_integral(&g, core::slice::from_ref(q), n, &|y| y[2]);
        let right = adj_cube_flux(f, q, n)?[i][j];
        gaps.push(Gap::new(n, left, right, q.volume()));
    }
    IdentityReport::new("adjugate-degree", &f.id, core::slice::from_ref(q), Some((i, j)), gaps, tolerance_for(&[&f.singular]))
}

/// [`adj_degree_identity`] for all nine entries, row by row.
pub fn adj_degree_all(f: &AnalyticMap, q: &Aabb<3>, resolutions: &[usize]) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            out.push(adj_degree_identity(f, q, i, j, resolutions)?);
        }
    }
    Ok(out)
}

/// Rejects columns whose degree leaves `{0, 1}`.
fn check_sense_preserving(cols: &DegreeColumns, id: &str) -> Result<()> {
    for c in 0..cols.hits.len() {
        if let Some((_, _, d)) = cols.intervals(c).into_iter().find(|iv| iv.2 != 1) {
            let p = cols.center(c);
            return Err(Error::Hypothesis(format!(
                "degree {d} over ({}, {}): {id} is not a sense-preserving homeomorphism there",
                p[0], p[1]
            )));
        }
    }
    Ok(())
}

/// `∫ deg(f, U, y) dD_j (f^{-1})_i (y)` on the piecewise-linear image of `∂U`.
fn inverse_mass(f: &AnalyticMap, inv: &AnalyticMap, figure: &[Aabb<3>], n: usize, i: usize, j: usize, z0: f64) -> Result<f64> {
    if !inv.has_jacobian() {
        return Err(Error::InsufficientData(format!("{} has no derivative decomposition", inv.id)));
    }
    let vertical: Vec<_> = inv.singular_terms(i, j).filter(|t| t.axis == 2).map(|t| t.profile).collect();
    let r = |y: [f64; 3]| {
        let rule = Rule1d::composite(&[z0, y[2]], 2);
        let ac = rule.integrate(|z| inv.jacobian_ac([y[0], y[1], z]).map_or(0.0, |m| m[i][j]));
        ac + vertical.iter().map(|p| p.increment(z0, y[2])).sum::<f64>()
    };
    let mut total = degree_weighted_integral(f, figure, n, &r);
    for t in inv.singular_terms(i, j).filter(|t| t.axis < 2) {
        total += degree_weighted_stieltjes(f, figure, n, t.axis, &t.profile);
    }
    Ok(total)
}

/// `D_j (f^{-1})_i (f(U))` against `Adj_ij Df(U)`, zero-based `(i, j)`.
/// `f(U)` is the region where `deg(f, U, ·) = 1`.
pub fn inverse_identity(
    f: &AnalyticMap,
    figure: &[Aabb<3>],
    i: usize,
    j: usize,
    resolutions: &[usize],
) -> Result<IdentityReport> {
    Ok(inverse_entries(f, figure, &[(i, j)], resolutions)?.remove(0))
}

/// [`inverse_identity`] for all nine entries, row by row.
pub fn inverse_all(f: &AnalyticMap, figure: &[Aabb<3>], resolutions: &[usize]) -> Result<Vec<IdentityReport>> {
    let entries: Vec<(usize, usize)> = (0..9).map(|k| (k / 3, k % 3)).collect();
    inverse_entries(f, figure, &entries, resolutions)
}

/// [`inverse_identity`] for several entries sharing one set of degree columns.
pub fn inverse_entries(
    f: &AnalyticMap,
    figure: &[Aabb<3>],
    entries: &[(usize, usize)],
    resolutions: &[usize],
) -> Result<Vec<IdentityReport>> {
    check_schedule(resolutions)?;
    if let Some((i, j)) = entries.iter().find(|(i, j)| *i > 2 || *j > 2) {
        return Err(Error::Domain(format!("entry ({}, {}) out of range", i + 1, j + 1)));
    }
    let inv = f.inverse().ok_or_else(|| Error::MissingInverse(f.id.clone()))?;
    check_figure(f, figure)?;
    for q in figure {
        screen_cube(f, q)?;
    }
    let vol = figure_volume(figure);
    let mut gaps = alloc::vec![Vec::with_capacity(resolutions.len()); entries.len()];
    for &n in resolutions {
        let cols = figure_columns(f, figure, n)?;
        if cols.integral() < 0.0 {
            return Err(Error::Hypothesis(format!("{} reverses orientation on the figure", f.id)));
        }
        check_sense_preserving(&cols, &f.id)?;
        let z0 = figure.iter().map(|q| image_bounds(f, q).lo[2]).fold(f64::INFINITY, f64::min);
        let mut adj = [[0.0; 3]; 3];
        for q in figure {
            let m = adj_cube_flux(f, q, n)?;
            for a in 0..3 {
                for b in 0..3 {
                    adj[a][b] += m[a][b];
                }
            }
        }
        for (k, &(i, j)) in entries.iter().enumerate() {
            let left = inverse_mass(f, inv, figure, n, i, j, z0)?;
            gaps[k].push(Gap::new(n, left, adj[i][j], vol));
        }
    }
    let tol = tolerance_for(&[&f.singular, &inv.singular]);
    entries
        .iter()
        .zip(gaps)
        .map(|(&(i, j), g)| IdentityReport::new("inverse", &f.id, figure, Some((i, j)), g, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::linalg::{cofactor_adjugate, det3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn composites_carry_adjugate_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: [[f64; 3]; 3] = core::array::from_fn(|_| core::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let f = gallery::linear(a);
            let adj = cofactor_adjugate(a);
            for i in 0..3 {
                for j in 0..3 {
                    let g = adj_composite(&f, i, j);
                    let d = det3(g.jacobian_ac([0.3, 0.2, 0.1]).unwrap());
                    assert!((d - adj[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_inverse_all_entries() {
        let f = gallery::linear([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]);
        let r = inverse_all(&f, &[Aabb::unit()], &[8, 16]).unwrap();
        let want = [[6.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]];
        for rep in &r {
            let [i, j] = rep.ij.unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!((rep.right - want[i - 1][j - 1]).abs() < 1e-12);
            assert!((rep.left - want[i - 1][j - 1]).abs() < 1e-3 * 6.0, "{rep:?}");
        }
        let flip = gallery::linear([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(inverse_identity(&flip, &[Aabb::unit()], 0, 0, &[8]), Err(Error::Hypothesis(_))));
        let bare = gallery::identity().without_inverse();
        assert!(matches!(inverse_identity(&bare, &[Aabb::unit()], 0, 0, &[8]), Err(Error::MissingInverse(_))));
    }

    #[test]
    fn cantor_inverse_entry() {
        let f = gallery::cantor_shear(0);
        let m = 2;
        let fig = interior_figure(m);
        let a = 0.5 / 9.0;
        let want = -(1.0 - 0.25) * (1.0 - 2.0 * a) * (1.0 - 2.0 * a);
        let r = inverse_identity(&f, &fig, 2, 0, &[27, 54]).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.left - want).abs() < 1e-9, "{} {want}", r.left);
        assert!((r.right - want).abs() < 1e-9, "{} {want}", r.right);
        let s = gallery::sine_shear(0.3);
        let r = inverse_identity(&s, &interior_figure(1), 2, 2, &[16, 32]).unwrap();
        let vol = figure_volume(&interior_figure(1));
        assert!(r.pass && (r.left - vol).abs() < 0.02 * vol, "{r:?}");
    }

    #[test]
    fn gradient_degree_examples() {
        let unit = [Aabb::unit()];
        let r = grad_degree_identity(&gallery::identity().component(2), &unit, &[8]).unwrap();
        assert!(r.pass && (r.left - 1.0).abs() < 1e-9 && (r.right - 1.0).abs() < 1e-9, "{r:?}");
        let r = grad_degree_identity(&gallery::graded(0.5).component(2), &unit, &[16, 32]).unwrap();
        assert!(r.pass && (r.right - 1.25).abs() < 1e-9 && (r.left - 1.25).abs() < 0.02 * 1.25, "{r:?}");
        let fig = interior_figure(2);
        let vol = figure_volume(&fig);
        let r = grad_degree_identity(&gallery::cantor_shear(0).component(2), &fig, &[27]).unwrap();
        assert!(r.pass && (r.left - vol).abs() < 1e-9 && (r.right - vol).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn adjugate_degree_examples() {
        let unit = Aabb::unit();
        for r in adj_degree_all(&gallery::identity(), &unit, &[8]).unwrap() {
            let [i, j] = r.ij.unwrap();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(r.pass && (r.left - want).abs() < 1e-9 && (r.right - want).abs() < 1e-9, "{r:?}");
        }
        let fig = interior_figure(1);
        let r = adj_degree_identity(&gallery::sine_shear(0.3), &fig[0], 2, 2, &[16, 32]).unwrap();
        assert!(r.pass && (r.left - fig[0].volume()).abs() < 0.02 * fig[0].volume(), "{r:?}");
        let r = adj_degree_identity(&gallery::stretch(0.2), &unit, 2, 2, &[16, 32]).unwrap();
        assert!(r.pass && (r.left - 1.1).abs() < 0.02 * 1.1 && (r.right - 1.1).abs() < 1e-6, "{r:?}");
    }
}
