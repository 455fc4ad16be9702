use alloc::vec::Vec;

use super::surface::for_each_triangle;
use crate::cantor::SingularProfile;
use crate::field::{Aabb, VectorMap};
use crate::pairing::stieltjes_leaves;

const LEAF_DEPTH: u32 = 4;

fn orient(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// `∫ deg(f, figure, y) ρ(y) dy` for the piecewise-linear image of the
/// boundary on a lattice of `lattice` cells per box side, given a vertical
/// primitive `r(y) = ∫_{z0}^{y3} ρ(y1, y2, s) ds`. Exact when `r` is
/// quadratic on every image triangle.
pub fn degree_weighted_integral(
    f: &VectorMap<3, 3>,
    figure: &[Aabb<3>],
    lattice: usize,
    r: &dyn Fn([f64; 3]) -> f64,
) -> f64 {
    let mut total = 0.0;
    for cube in figure {
        for_each_triangle(f, cube, lattice, &mut |t| {
            let area = 0.5 * orient(t.v[0], t.v[1], t.v[2]);
            if area == 0.0 {
                return;
            }
            let mut s = 0.0;
            for k in 0..3 {
                let p: [f64; 3] = core::array::from_fn(|c| {
                    (4.0 * t.v[k][c] + t.v[(k + 1) % 3][c] + t.v[(k + 2) % 3][c]) / 6.0
                });
                s += r(p);
            }
            total += area * s / 3.0;
        });
    }
    total
}

/// `∫ deg(f, figure, y) dμ(y)` for `μ = dprofile(y_axis) ⊗ λ^2`, `axis` 0 or
/// 1, on the piecewise-linear image of the boundary.
pub fn degree_weighted_stieltjes(
    f: &VectorMap<3, 3>,
    figure: &[Aabb<3>],
    lattice: usize,
    axis: usize,
    profile: &SingularProfile,
) -> f64 {
    let other = 1 - axis;
    let mut total = 0.0;
    let mut leaves = Vec::new();
    for cube in figure {
        for_each_triangle(f, cube, lattice, &mut |t| {
            let area = orient(t.v[0], t.v[1], t.v[2]);
            if area == 0.0 {
                return;
            }
            let sign = area.signum();
            let lo = t.v.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
            let hi = t.v.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
            leaves.clear();
            stieltjes_leaves(profile, lo, hi, LEAF_DEPTH, &mut leaves);
            for &(s, d) in &leaves {
                let (mut a, mut b) = ([f64::INFINITY, 0.0], [f64::NEG_INFINITY, 0.0]);
                for k in 0..3 {
                    let (p, q) = (t.v[k], t.v[(k + 1) % 3]);
                    if p[axis] == q[axis] || (s - p[axis]) * (s - q[axis]) > 0.0 {
                        continue;
                    }
                    let l = (s - p[axis]) / (q[axis] - p[axis]);
                    let pt = [p[other] + l * (q[other] - p[other]), p[2] + l * (q[2] - p[2])];
                    if pt[0] < a[0] {
                        a = pt;
                    }
                    if pt[0] > b[0] {
                        b = pt;
                    }
                }
                if b[0] > a[0] {
                    total += sign * d * (b[0] - a[0]) * 0.5 * (a[1] + b[1]);
                }
            }
        });
    }
    total
}
