//! Distributional Jacobians of continuous planar BV maps.
//!
//! `⟨J_g, φ⟩ = ⟨D_1 g_2, g_1 D_2 φ⟩ - ⟨D_2 g_2, g_1 D_1 φ⟩` is computed from
//! the derivative measures of `g`, from mollified samples, or through the
//! degree formula `J_g(Q) = ∫ deg(g, Q, y) dy`.

mod kernel;

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::PI;
use num_traits::Float;

pub use kernel::{kernel_cell_integral, kernel_field, DivergenceField, KernelField, UnitDivergence};

use crate::degree::{degree_field2, target_grid};
use crate::error::{Error, Result};
use crate::field::{gradient_fd, sample_map, slab_variation, Aabb, Grid, VectorMap};
use crate::measure::GridMeasure;
use crate::pairing::{combined_pairing, mollified_derivative_pairing, Estimate, PairingTerm};
use crate::testfn::{richardson_order1, CutoffFamily, TestFunction};

/// Relative Cauchy tolerance of pairing quadratures.
pub const PAIRING_TOL: f64 = 2e-3;
const MAX_REFINEMENTS: usize = 3;

/// A Jacobian pairing with its Cauchy error and the mollification radius
/// used (`None` for the analytic derivative decomposition).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DetPairing {
    pub value: f64,
    pub err: f64,
    pub eps: Option<f64>,
}

fn refine_terms(g: &VectorMap<2, 2>, terms: &[PairingTerm<'_, 2>], breaks: &[Vec<f64>; 2]) -> Result<DetPairing> {
    let e = combined_pairing(g, terms, breaks, PAIRING_TOL, MAX_REFINEMENTS)?;
    Ok(DetPairing { value: e.value, err: e.err, eps: None })
}

fn breaks_of(phi: &dyn TestFunction<2>) -> [Vec<f64>; 2] {
    [phi.breakpoints(0), phi.breakpoints(1)]
}

/// `⟨J_g, φ⟩`. Without `eps` the declared derivative decomposition of `g` is
/// used; with `eps`, `D g_2` comes from mollified samples at `eps`, `eps/2`
/// and `eps/4`, which must contract.
pub fn det_pairing(g: &VectorMap<2, 2>, phi: &dyn TestFunction<2>, eps: Option<f64>) -> Result<DetPairing> {
    let w1 = |x: [f64; 2]| g.eval(x)[0] * phi.grad(x)[1];
    let w2 = |x: [f64; 2]| g.eval(x)[0] * phi.grad(x)[0];
    match eps {
        None => refine_terms(g, &[(1, 0, 1.0, &w1), (1, 1, -1.0, &w2)], &breaks_of(phi)),
        Some(eps) => {
            let support = phi.support();
            let mut vals = [0.0; 3];
            for (n, v) in vals.iter_mut().enumerate() {
                let e = eps / (1u32 << n) as f64;
                *v = mollified_derivative_pairing(g, 1, 0, &w1, &support, e)?
                    - mollified_derivative_pairing(g, 1, 1, &w2, &support, e)?;
            }
            let d1 = (vals[1] - vals[0]).abs();
            let d2 = (vals[2] - vals[1]).abs();
            if d2 > d1 && d2 > PAIRING_TOL * vals[2].abs() {
                return Err(Error::Convergence(format!("eps sequence {vals:?} is not Cauchy")));
            }
            Ok(DetPairing { value: vals[2], err: d2, eps: Some(eps / 4.0) })
        }
    }
}

/// Samples per axis of the localization check.
const HYPOTHESIS_SAMPLES: usize = 257;

/// `-Σ_ij ⟨adj_ij Dg, (Φ_j ∘ g) D_i φ⟩` for a field `Φ` with `div Φ = η`.
/// When `η` is localized, `φ` must equal 1 wherever `η ∘ g` is nonzero.
pub fn det_pairing_phi(g: &VectorMap<2, 2>, field: &dyn DivergenceField, phi: &dyn TestFunction<2>) -> Result<DetPairing> {
    if field.eta_support().is_some() {
        let d = g.domain;
        let n = HYPOTHESIS_SAMPLES;
        for i in 0..n {
            for j in 0..n {
                let x = [
                    d.lo[0] + d.width(0) * i as f64 / (n - 1) as f64,
                    d.lo[1] + d.width(1) * j as f64 / (n - 1) as f64,
                ];
                if field.eta(g.eval(x)) != 0.0 && (phi.eval(x) - 1.0).abs() > 1e-12 {
                    return Err(Error::Hypothesis(format!(
                        "test function is {} at {x:?} where η∘g is nonzero",
                        phi.eval(x)
                    )));
                }
            }
        }
    }
    let cache: RefCell<BTreeMap<(u64, u64), [f64; 2]>> = RefCell::new(BTreeMap::new());
    let phig = |x: [f64; 2]| -> [f64; 2] {
        let key = (x[0].to_bits(), x[1].to_bits());
        if let Some(v) = cache.borrow().get(&key) {
            return *v;
        }
        let v = field.phi(g.eval(x));
        cache.borrow_mut().insert(key, v);
        v
    };
    let a = |x: [f64; 2]| phig(x)[0] * phi.grad(x)[1];
    let b = |x: [f64; 2]| phig(x)[0] * phi.grad(x)[0];
    let c = |x: [f64; 2]| phig(x)[1] * phi.grad(x)[0];
    let d = |x: [f64; 2]| phig(x)[1] * phi.grad(x)[1];
    let out = refine_terms(g, &[(1, 0, 1.0, &a), (1, 1, -1.0, &b), (0, 1, 1.0, &c), (0, 0, -1.0, &d)], &breaks_of(phi))?;
    if !out.value.is_finite() {
        return Err(Error::Resolution("kernel field evaluation failed".into()));
    }
    Ok(out)
}

/// Route for [`jac_measure_square`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum JacRoute {
    Degree,
    PairingLimit,
}

const COVER_CELLS: usize = 256;
const BOUNDARY_SAMPLES: usize = 8192;

fn boundary_points(g: &VectorMap<2, 2>, q: &Aabb<2>, n: usize) -> Vec<[f64; 2]> {
    let c = [q.lo, [q.hi[0], q.lo[1]], q.hi, [q.lo[0], q.hi[1]]];
    let mut out = Vec::with_capacity(4 * n);
    for s in 0..4 {
        let (a, b) = (c[s], c[(s + 1) % 4]);
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push(g.eval([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
        }
    }
    out
}

fn bounds(points: &[[f64; 2]]) -> Aabb<2> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    Aabb { lo, hi }
}

fn cover_area(points: &[[f64; 2]], b: &Aabb<2>, s: f64) -> f64 {
    let mut cells = BTreeSet::new();
    for p in points {
        cells.insert((((p[0] - b.lo[0]) / s).floor() as i64, ((p[1] - b.lo[1]) / s).floor() as i64));
    }
    cells.len() as f64 * s * s
}

/// Numerical good-square test: the cover of `g(∂Q)` by cells of side `s`
/// must shrink when `s` halves, and the derivative mass of thin slabs along
/// the sides must be finite.
pub fn good_square(g: &VectorMap<2, 2>, q: &Aabb<2>) -> Result<()> {
    if !g.domain.contains_box(q) {
        return Err(Error::Domain(format!("square {q:?} leaves the domain of {}", g.id)));
    }
    let pts = boundary_points(g, q, BOUNDARY_SAMPLES);
    let b = bounds(&pts);
    let w = b.width(0).max(b.width(1));
    if !(w > 0.0) {
        return Err(Error::Hypothesis(format!("{} collapses the boundary of {q:?}", g.id)));
    }
    let s = w / COVER_CELLS as f64;
    let coarse = cover_area(&pts, &b, s);
    let fine = cover_area(&pts, &b, s / 2.0);
    if fine > 0.75 * coarse {
        return Err(Error::Hypothesis(format!("cover of g(∂Q) does not shrink: {coarse:.3e} -> {fine:.3e}")));
    }
    let l = q.width(0).min(q.width(1));
    let r = l / 64.0;
    let outer = q.expand(2.0 * r);
    if g.domain.contains_box(&outer) {
        let grid = Grid::free(outer, [512, 512])?;
        for axis in 0..2 {
            for t in [q.lo[axis], q.hi[axis]] {
                let m = slab_variation(g, axis, t, r, &grid)?;
                if !m.mass.is_finite() {
                    return Err(Error::Hypothesis(format!("slab variation at {t} is not finite")));
                }
            }
        }
    }
    Ok(())
}

/// Target cells across the longer side of the boundary image.
pub const DEGREE_TARGET_CELLS: usize = 512;

/// `J_g(Q)` for a good square `Q`.
pub fn jac_measure_square(g: &VectorMap<2, 2>, q: &Aabb<2>, route: JacRoute) -> Result<Estimate> {
    good_square(g, q)?;
    match route {
        JacRoute::Degree => {
            let b = bounds(&boundary_points(g, q, 1024));
            let h = b.width(0).max(b.width(1)) / DEGREE_TARGET_CELLS as f64;
            let grid = target_grid(&b.expand(2.0 * h), h, [0.0; 2])?;
            let d = degree_field2(g, q, &grid, None)?;
            let err = d.unknown_volume + (d.integral - d.pl_integral).abs();
            Ok(Estimate::new(d.integral, err))
        }
        JacRoute::PairingLimit => {
            let fam = CutoffFamily::standard(*q);
            let mut vals = Vec::with_capacity(fam.len());
            let mut qerr = 0.0f64;
            for k in 0..fam.len() {
                let p = det_pairing(g, &fam.member(k), None)?;
                vals.push(p.value);
                qerr = qerr.max(p.err);
            }
            let (lim, err) = richardson_order1(&fam.widths, &vals);
            Ok(Estimate::new(lim, err + qerr))
        }
    }
}

/// Cell masses of `J_g` on `grid`: the counterclockwise Stieltjes sum
/// `∮ g_1 dg_2` around each cell with one midpoint per edge.
pub fn jac_flux_measure(g: &VectorMap<2, 2>, grid: &Grid<2>) -> Result<GridMeasure<2>> {
    if !g.domain.contains_box(&grid.bbox) {
        return Err(Error::Domain(format!("grid leaves the domain of {}", g.id)));
    }
    let [nx, ny] = grid.cells();
    let h = grid.spacing();
    let lo = grid.bbox.lo;
    let node = |i: usize, j: usize| g.eval([lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]]);
    let mut nodes = vec![[0.0; 2]; (nx + 1) * (ny + 1)];
    for i in 0..=nx {
        for j in 0..=ny {
            nodes[i * (ny + 1) + j] = node(i, j);
        }
    }
    // g_1 at midpoints of horizontal and vertical edges
    let mut hmid = vec![0.0; nx * (ny + 1)];
    for i in 0..nx {
        for j in 0..=ny {
            hmid[i * (ny + 1) + j] = g.eval([lo[0] + (i as f64 + 0.5) * h[0], lo[1] + j as f64 * h[1]])[0];
        }
    }
    let mut vmid = vec![0.0; (nx + 1) * ny];
    for i in 0..=nx {
        for j in 0..ny {
            vmid[i * ny + j] = g.eval([lo[0] + i as f64 * h[0], lo[1] + (j as f64 + 0.5) * h[1]])[0];
        }
    }
    let g2 = |i: usize, j: usize| nodes[i * (ny + 1) + j][1];
    let mut masses = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let bottom = hmid[i * (ny + 1) + j] * (g2(i + 1, j) - g2(i, j));
            let right = vmid[(i + 1) * ny + j] * (g2(i + 1, j + 1) - g2(i + 1, j));
            let top = hmid[i * (ny + 1) + j + 1] * (g2(i, j + 1) - g2(i + 1, j + 1));
            let left = vmid[i * ny + j] * (g2(i, j) - g2(i, j + 1));
            masses[grid.cell_index([i, j])] = bottom + right + top + left;
        }
    }
    GridMeasure::new(*grid, masses)
}

/// `∫_{∂B(c, ρ)} h_1 dh_2` counterclockwise, as midpoint Riemann-Stieltjes
/// sums with `n` arcs doubled until consecutive sums agree.
pub fn circle_stieltjes(h: &VectorMap<2, 2>, center: [f64; 2], rho: f64, n: usize) -> Result<f64> {
    let b = Aabb { lo: [center[0] - rho, center[1] - rho], hi: [center[0] + rho, center[1] + rho] };
    if !(rho > 0.0) || !h.domain.contains_box(&b) {
        return Err(Error::Domain(format!("circle of radius {rho} at {center:?} leaves the domain")));
    }
    let at = |t: f64| h.eval([center[0] + rho * t.cos(), center[1] + rho * t.sin()]);
    let sum = |n: usize| {
        let dt = 2.0 * PI / n as f64;
        let mut prev = at(0.0)[1];
        let mut s = 0.0;
        for k in 0..n {
            let next = at(dt * (k + 1) as f64)[1];
            s += at(dt * (k as f64 + 0.5))[0] * (next - prev);
            prev = next;
        }
        s
    };
    let mut n = n.max(8);
    let mut prev = sum(n);
    for _ in 0..12 {
        n *= 2;
        let s = sum(n);
        if (s - prev).abs() <= 1e-7 * s.abs().max(rho * rho) {
            return Ok(s);
        }
        prev = s;
    }
    Err(Error::Resolution(format!("circle sums at radius {rho} are not Cauchy")))
}

/// Density quotient and pointwise Jacobian at one sample point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AcDensity {
    pub x: [f64; 2],
    /// `None` when the quotients did not settle.
    pub theta: Option<f64>,
    pub jacobian: f64,
}

/// Side of the largest square in the density quotient sequence.
pub const DENSITY_SIDE: f64 = 0.25;
const DENSITY_STEPS: usize = 5;

/// Pointwise determinant of the central-difference gradient at step `step`.
pub fn jacobian_fd(g: &VectorMap<2, 2>, x: [f64; 2], step: f64) -> Result<f64> {
    let grid = Grid::free(Aabb { lo: [x[0] - step, x[1] - step], hi: [x[0] + step, x[1] + step] }, [2, 2])?;
    let jac = gradient_fd(&sample_map(g, &grid)?);
    let j = jac.values[grid.node_index([1, 1])];
    Ok(j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

/// For each point, `J_g(Q_k) / |Q_k|` on shrinking squares centred there
/// (degree route) next to the finite-difference Jacobian.
pub fn jac_ac_density(g: &VectorMap<2, 2>, points: &[[f64; 2]]) -> Result<Vec<AcDensity>> {
    let mut out = Vec::with_capacity(points.len());
    for &x in points {
        let mut q = Vec::new();
        for k in 0..DENSITY_STEPS {
            let s = 0.5 * DENSITY_SIDE / (1u32 << k) as f64;
            let sq = Aabb { lo: [x[0] - s, x[1] - s], hi: [x[0] + s, x[1] + s] };
            match jac_measure_square(g, &sq, JacRoute::Degree) {
                Ok(e) => q.push(e.value / sq.volume()),
                Err(Error::Hypothesis(_)) | Err(Error::Coverage { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        let n = q.len();
        let theta = if n >= 2 && (q[n - 1] - q[n - 2]).abs() <= 0.01 * q[n - 1].abs() + 1e-9 {
            Some(q[n - 1])
        } else {
            None
        };
        out.push(AcDensity { x, theta, jacobian: jacobian_fd(g, x, 1e-5)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::testfn::{BoxCutoff, Bump2};

    #[test]
    fn identity_and_linear_pairings() {
        let phi = Bump2::new([0.3, -0.2], 0.4).unwrap();
        let id = gallery::map2("identity_2d").unwrap();
        let p = det_pairing(&id, &phi, None).unwrap();
        assert!((p.value - phi.integral()).abs() < 0.005 * phi.integral());
        let a = gallery::map2("linear_2d:2,1,-0.5,1.5").unwrap();
        let p = det_pairing(&a, &phi, None).unwrap();
        assert!((p.value - 3.5 * phi.integral()).abs() < 0.005 * 3.5 * phi.integral());
        let m = det_pairing(&a, &phi, Some(0.08)).unwrap();
        assert!((m.value - 3.5 * phi.integral()).abs() < 0.005 * 3.5 * phi.integral(), "{m:?}");
    }

    #[test]
    fn unit_field_reduces_to_det_pairing() {
        let phi = Bump2::new([0.1, 0.2], 0.5).unwrap();
        for g in [gallery::z_square(), gallery::cantor_row()] {
            let a = det_pairing(&g, &phi, None).unwrap().value;
            let b = det_pairing_phi(&g, &UnitDivergence, &phi).unwrap().value;
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn kernel_field_pairing_and_hypothesis() {
        let id = gallery::map2("identity_2d").unwrap();
        let eta = Bump2::new([0.5, 0.5], 0.2).unwrap();
        let k = KernelField::with_cells(eta, 1.0, 24).unwrap();
        let cut = BoxCutoff::new(Aabb::unit(), 0.2).unwrap();
        let p = det_pairing_phi(&id, &k, &cut).unwrap();
        assert!((p.value - eta.integral()).abs() < 0.01 * eta.integral(), "{p:?} {}", eta.integral());
        let thin = BoxCutoff::new(Aabb::unit(), 0.4).unwrap();
        assert!(matches!(det_pairing_phi(&id, &k, &thin), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn jacobian_of_squares_by_both_routes() {
        let unit = Aabb::<2>::unit();
        let id = gallery::map2("identity_2d").unwrap();
        for route in [JacRoute::Degree, JacRoute::PairingLimit] {
            let e = jac_measure_square(&id, &unit, route).unwrap();
            assert!((e.value - 1.0).abs() < 0.01, "{route:?} {e:?}");
        }
        let sq = Aabb { lo: [-1.0; 2], hi: [1.0; 2] };
        for route in [JacRoute::Degree, JacRoute::PairingLimit] {
            let e = jac_measure_square(&gallery::z_square(), &sq, route).unwrap();
            assert!((e.value - 32.0 / 3.0).abs() < 0.02 * 32.0 / 3.0, "{route:?} {e:?}");
        }
        let c = gallery::cantor_row();
        for route in [JacRoute::Degree, JacRoute::PairingLimit] {
            let e = jac_measure_square(&c, &unit, route).unwrap();
            assert!((e.value - 2.0).abs() < 0.02, "{route:?} {e:?}");
        }
    }

    #[test]
    fn circle_integrals() {
        let id = gallery::map2("identity_2d").unwrap();
        let v = circle_stieltjes(&id, [0.1, 0.2], 0.7, 64).unwrap();
        assert!((v - PI * 0.49).abs() < 1e-6);
        let z = gallery::z_square();
        let v = circle_stieltjes(&z, [0.0, 0.0], 0.9, 64).unwrap();
        assert!((v - 2.0 * PI * 0.9f64.powi(4)).abs() < 0.01 * 2.0 * PI * 0.9f64.powi(4));
    }

    #[test]
    fn flux_measure_of_disc_figure() {
        let z = gallery::z_square();
        let grid = Grid::free(Aabb { lo: [-1.0; 2], hi: [1.0; 2] }, [512, 512]).unwrap();
        let m = jac_flux_measure(&z, &grid).unwrap();
        assert!((m.total() - 32.0 / 3.0).abs() < 1e-3);
        let rho: f64 = 0.6;
        let mut fig = 0.0;
        for i in 0..512 {
            for j in 0..512 {
                let b = grid.cell_box([i, j]);
                let far = [b.lo[0].abs().max(b.hi[0].abs()), b.lo[1].abs().max(b.hi[1].abs())];
                if far[0] * far[0] + far[1] * far[1] <= rho * rho {
                    fig += m.mass([i, j]);
                }
            }
        }
        let circle = circle_stieltjes(&z, [0.0; 2], rho, 64).unwrap();
        assert!((fig - circle).abs() < 0.03 * circle, "{fig} {circle}");
    }

    #[test]
    fn density_quotients() {
        let z = gallery::z_square();
        let d = jac_ac_density(&z, &[[0.5, 0.5]]).unwrap();
        assert!((d[0].theta.unwrap() - 2.0).abs() < 0.06 && (d[0].jacobian - 2.0).abs() < 1e-6, "{d:?}");
        let c = gallery::cantor_row();
        let d = jac_ac_density(&c, &[[0.5, 0.5]]).unwrap();
        assert!((d[0].theta.unwrap() - 1.0).abs() < 0.03, "{d:?}");
        assert!((d[0].jacobian - 1.0).abs() < 1e-6);
    }
}
