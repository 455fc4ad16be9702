use alloc::vec::Vec;
use num_traits::Float;

use crate::field::{Aabb, VectorMap};
use crate::linalg::{cyclic, Vec3};

/// Image triangle with outward orientation and the largest deviation of the
/// map from its linear interpolant at the edge midpoints and centroid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tri {
    pub v: [Vec3; 3],
    pub dev: f64,
}

/// Image segment of the counter-clockwise boundary.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Seg {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub dev: f64,
}

fn dist<const M: usize>(p: [f64; M], q: [f64; M]) -> f64 {
    let mut s = 0.0;
    for i in 0..M {
        s += (p[i] - q[i]) * (p[i] - q[i]);
    }
    s.sqrt()
}

fn mean<const M: usize>(pts: &[[f64; M]]) -> [f64; M] {
    let mut m = [0.0; M];
    for p in pts {
        for i in 0..M {
            m[i] += p[i];
        }
    }
    for v in m.iter_mut() {
        *v /= pts.len() as f64;
    }
    m
}

/// Lattice coordinate `lo + k s` with `k` counted in half steps.
fn coord(lo: f64, s: f64, half_steps: usize) -> f64 {
    if half_steps % 2 == 0 {
        lo + (half_steps / 2) as f64 * s
    } else {
        lo + half_steps as f64 * (0.5 * s)
    }
}

/// Streams the outward-oriented triangles of the image of `∂region` on a
/// lattice of `n` cells per side. Vertices shared between faces are images
/// of bitwise-identical points.
pub(crate) fn for_each_triangle(map: &VectorMap<3, 3>, region: &Aabb<3>, n: usize, emit: &mut dyn FnMut(Tri)) {
    let s: [f64; 3] = core::array::from_fn(|i| region.width(i) / n as f64);
    let m = 2 * n + 1;
    let mut img: Vec<Vec3> = alloc::vec![[0.0; 3]; m * m];
    for k in 0..3 {
        let (u, v) = cyclic(k);
        for side in [0usize, 1] {
            let fixed = side * 2 * n;
            for a in 0..m {
                for b in 0..m {
                    let mut x = [0.0; 3];
                    x[k] = coord(region.lo[k], s[k], fixed);
                    x[u] = coord(region.lo[u], s[u], a);
                    x[v] = coord(region.lo[v], s[v], b);
                    img[a * m + b] = map.eval(x);
                }
            }
            let at = |a: usize, b: usize| img[a * m + b];
            for a in 0..n {
                for b in 0..n {
                    let (a2, b2) = (2 * a, 2 * b);
                    let p00 = at(a2, b2);
                    let p10 = at(a2 + 2, b2);
                    let p11 = at(a2 + 2, b2 + 2);
                    let p01 = at(a2, b2 + 2);
                    let e_bottom = dist(at(a2 + 1, b2), mean(&[p00, p10]));
                    let e_right = dist(at(a2 + 2, b2 + 1), mean(&[p10, p11]));
                    let e_top = dist(at(a2 + 1, b2 + 2), mean(&[p01, p11]));
                    let e_left = dist(at(a2, b2 + 1), mean(&[p00, p01]));
                    let e_diag = dist(at(a2 + 1, b2 + 1), mean(&[p00, p11]));
                    let d1 = e_bottom.max(e_right).max(e_diag);
                    let d2 = e_top.max(e_left).max(e_diag);
                    if side == 1 {
                        emit(Tri { v: [p00, p10, p11], dev: d1 });
                        emit(Tri { v: [p00, p11, p01], dev: d2 });
                    } else {
                        emit(Tri { v: [p00, p11, p10], dev: d1 });
                        emit(Tri { v: [p00, p01, p11], dev: d2 });
                    }
                }
            }
        }
    }
}

/// Counter-clockwise image segments of `∂rect` on `n` cells per side.
pub(crate) fn boundary_segments(map: &VectorMap<2, 2>, rect: &Aabb<2>, n: usize) -> Vec<Seg> {
    let s = [rect.width(0) / n as f64, rect.width(1) / n as f64];
    let m = 2 * n;
    // walk the boundary in half steps: (axis0 half index, axis1 half index)
    let mut path: Vec<(usize, usize)> = Vec::with_capacity(4 * m + 1);
    for i in 0..m {
        path.push((i, 0));
    }
    for j in 0..m {
        path.push((m, j));
    }
    for i in (1..=m).rev() {
        path.push((i, m));
    }
    for j in (1..=m).rev() {
        path.push((0, j));
    }
    path.push((0, 0));
    let pts: Vec<[f64; 2]> = path
        .iter()
        .map(|&(i, j)| map.eval([coord(rect.lo[0], s[0], i), coord(rect.lo[1], s[1], j)]))
        .collect();
    let mut segs = Vec::with_capacity(4 * n);
    let mut k = 0;
    while k + 2 < pts.len() {
        let (a, mid, b) = (pts[k], pts[k + 1], pts[k + 2]);
        segs.push(Seg { a, b, dev: dist(mid, mean(&[a, b])) });
        k += 2;
    }
    segs
}
