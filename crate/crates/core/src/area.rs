//! Lebesgue area of maps `R^2 → R^3` by piecewise-linear interpolation.

use alloc::vec;
use alloc::vec::Vec;

use crate::field::{Aabb, AnalyticMap, Surface};
use crate::linalg::{cross3, norm3, sub3};
use crate::pairing::stieltjes_leaves;
use crate::quad::Rule1d;
use crate::testfn::richardson;

/// Uniform vertex grid over a box; each cell is split along the diagonal
/// from its lower-left to its upper-right corner into two counterclockwise
/// triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Triangulation2 {
    pub bbox: Aabb<2>,
    pub cells: [usize; 2],
}

impl Triangulation2 {
    pub fn new(bbox: Aabb<2>, cells: [usize; 2]) -> Self {
        Triangulation2 { bbox, cells: [cells[0].max(1), cells[1].max(1)] }
    }

    pub fn vertex(&self, i: usize, j: usize) -> [f64; 2] {
        let t = |a: usize, k: usize| {
            if k == self.cells[a] {
                self.bbox.hi[a]
            } else {
                self.bbox.lo[a] + self.bbox.width(a) * k as f64 / self.cells[a] as f64
            }
        };
        [t(0, i), t(1, j)]
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.cells[0] * self.cells[1]
    }

    /// Vertex index triples into the row-major `(cells+1)^2` vertex array.
    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let ny = self.cells[1] + 1;
        (0..self.cells[0]).flat_map(move |i| {
            (0..self.cells[1]).flat_map(move |j| {
                let v = |a: usize, b: usize| (i + a) * ny + j + b;
                [[v(0, 0), v(1, 0), v(1, 1)], [v(0, 0), v(1, 1), v(0, 1)]]
            })
        })
    }
}

/// `Σ_T H²(g(T))` for the PL interpolant of `g` on `tri`.
pub fn pl_area(g: &Surface, tri: &Triangulation2) -> f64 {
    let ny = tri.cells[1] + 1;
    let mut verts = vec![[0.0; 3]; (tri.cells[0] + 1) * ny];
    for i in 0..=tri.cells[0] {
        for j in 0..ny {
            verts[i * ny + j] = g.eval(tri.vertex(i, j));
        }
    }
    // Neumaier summation
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for [a, b, c] in tri.triangles() {
        let v = 0.5 * norm3(cross3(sub3(verts[b], verts[a]), sub3(verts[c], verts[a])));
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Growth ratio per doubling that counts towards divergence.
pub const DIVERGENCE_RATIO: f64 = 1.5;
/// Consecutive growing doublings that flag divergence.
pub const DIVERGENCE_STEPS: usize = 3;

/// Cells per side of the default refinement schedule. Starting from 14
/// keeps sample points off the dyadic lattice where oscillating test
/// functions alias to zero.
pub fn default_schedule() -> Vec<usize> {
    (0..6).map(|k| 14 << k).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AreaReport {
    pub axis: Option<usize>,
    pub t: Option<f64>,
    pub resolutions: Vec<usize>,
    pub areas: Vec<f64>,
    /// Second-order Richardson value; `None` when divergence is flagged.
    pub estimate: Option<f64>,
    pub divergent: bool,
}

/// PL areas of `g` on `rect` along `schedule` (cells per side, doubling).
pub fn lebesgue_area_estimate(g: &Surface, rect: &Aabb<2>, schedule: &[usize]) -> AreaReport {
    let areas: Vec<f64> = schedule.iter().map(|&n| pl_area(g, &Triangulation2::new(*rect, [n, n]))).collect();
    let mut run = 0usize;
    let mut divergent = false;
    for w in areas.windows(2) {
        if w[1] >= DIVERGENCE_RATIO * w[0] {
            run += 1;
            if run >= DIVERGENCE_STEPS {
                divergent = true;
            }
        } else {
            run = 0;
        }
    }
    let divergent = divergent || areas.iter().any(|a| !a.is_finite());
    let estimate = if divergent {
        None
    } else if areas.len() >= 2 {
        let h: Vec<f64> = schedule.iter().map(|&n| 1.0 / n as f64).collect();
        Some(richardson(&h, &areas, 2).0)
    } else {
        areas.first().copied()
    };
    AreaReport { axis: None, t: None, resolutions: schedule.to_vec(), areas, estimate, divergent }
}

/// `Σ_{a<b} ∫ |det(D g_a, D g_b)|` including declared singular terms,
/// an upper bound for the Lebesgue area of a BV surface.
pub fn area_bound(g: &Surface, rect: &Aabb<2>) -> f64 {
    let rules = [Rule1d::composite(&[rect.lo[0], rect.hi[0]], 32), Rule1d::composite(&[rect.lo[1], rect.hi[1]], 32)];
    let mut total = 0.0;
    for (x, wx) in rules[0].nodes.iter().zip(&rules[0].weights) {
        for (y, wy) in rules[1].nodes.iter().zip(&rules[1].weights) {
            if let Some(j) = g.jacobian_ac([*x, *y]) {
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    total += wx * wy * (j[a][0] * j[b][1] - j[a][1] * j[b][0]).abs();
                }
            }
        }
    }
    for term in &g.singular {
        let k = term.axis;
        let other = 1 - k;
        let mut leaves = Vec::new();
        stieltjes_leaves(&term.profile, rect.lo[k], rect.hi[k], 8, &mut leaves);
        for (t, d) in leaves {
            for (s, w) in rules[other].nodes.iter().zip(&rules[other].weights) {
                let mut x = [0.0; 2];
                x[k] = t;
                x[other] = *s;
                if let Some(j) = g.jacobian_ac(x) {
                    for b in (0..3).filter(|&b| b != term.component) {
                        total += d.abs() * w * j[b][other].abs();
                    }
                }
            }
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AxisAreas {
    pub axis: usize,
    pub layers: Vec<AreaReport>,
    pub finite_fraction: f64,
    /// Layers whose finest PL area exceeds the determinant bound by more than 5%.
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FiniteAreaReport {
    pub map: alloc::string::String,
    pub axes: Vec<AxisAreas>,
    pub holds: bool,
}

/// Lebesgue area estimates of the slices `f ∘ κ_i^t` at `layers` midpoint
/// layers of `region` along each axis.
pub fn finite_area_condition(f: &AnalyticMap, region: &Aabb<3>, layers: usize, schedule: &[usize]) -> FiniteAreaReport {
    let mut axes = Vec::with_capacity(3);
    for axis in 0..3 {
        let (a1, a2) = crate::field::kappa_axes(axis);
        let rect = Aabb { lo: [region.lo[a1], region.lo[a2]], hi: [region.hi[a1], region.hi[a2]] };
        let mut reports = Vec::with_capacity(layers);
        let mut violations = 0;
        for k in 0..layers {
            let t = region.lo[axis] + region.width(axis) * (k as f64 + 0.5) / layers as f64;
            let Ok(g) = f.slice(axis, t) else {
                continue;
            };
            let mut r = lebesgue_area_estimate(&g, &rect, schedule);
            r.axis = Some(axis);
            r.t = Some(t);
            if let Some(&last) = r.areas.last() {
                if g.has_jacobian() && last > 1.05 * area_bound(&g, &rect) {
                    violations += 1;
                }
            }
            reports.push(r);
        }
        let finite = reports.iter().filter(|r| !r.divergent).count();
        let frac = if reports.is_empty() { 0.0 } else { finite as f64 / reports.len() as f64 };
        axes.push(AxisAreas { axis, layers: reports, finite_fraction: frac, bound_violations: violations });
    }
    let holds = axes.iter().all(|a| a.finite_fraction == 1.0 && !a.layers.is_empty());
    FiniteAreaReport { map: f.id.clone(), axes, holds }
}
