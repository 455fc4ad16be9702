use alloc::format;
use num_traits::Float;

use super::geom::{point_segment_distance, point_triangle_distance, solid_angle};
use super::surface::{boundary_segments, for_each_triangle};
use crate::error::{Error, Result};
use crate::field::{Aabb, VectorMap};
use crate::linalg::sub3;

/// Degree at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DegreeResult {
    pub value: i32,
    /// Winding number before rounding.
    pub raw: f64,
    /// Distance from the point to the sampled image of the boundary.
    pub boundary_gap: f64,
}

const MAX_SIDE_2D: usize = 1 << 16;
const MAX_SIDE_3D: usize = 512;

/// Outcome of one boundary resolution.
struct Pass {
    raw: f64,
    gap: f64,
    /// Largest ratio `10 dev / distance` over boundary pieces; at most 1 when
    /// the sampling is fine enough for the point.
    crowding: f64,
}

fn settle(mut run: impl FnMut(usize) -> Pass, start: usize, max: usize) -> Result<DegreeResult> {
    let mut n = start;
    let mut prev: Option<f64> = None;
    loop {
        let p = run(n);
        if p.gap <= 0.0 {
            return Err(Error::BoundaryProximity { gap: p.gap, required: 0.0 });
        }
        if p.crowding <= 1.0 {
            let value = p.raw.round();
            if let Some(q) = prev {
                if (p.raw - q).abs() < 0.1 && (p.raw - value).abs() <= 0.25 {
                    return Ok(DegreeResult { value: value as i32, raw: p.raw, boundary_gap: p.gap });
                }
            }
            prev = Some(p.raw);
        }
        if 2 * n > max {
            if p.crowding > 1.0 {
                return Err(Error::BoundaryProximity { gap: p.gap, required: p.gap * p.crowding });
            }
            return Err(Error::Resolution(format!("winding number did not settle at {n} samples per side")));
        }
        n *= 2;
    }
}

/// Winding number of `g(∂rect)` around `y`. `n_boundary` counts samples on
/// the whole boundary and is doubled until two passes agree.
pub fn degree2(g: &VectorMap<2, 2>, rect: &Aabb<2>, y: [f64; 2], n_boundary: usize) -> Result<DegreeResult> {
    if n_boundary < 64 {
        return Err(Error::Domain(format!("n_boundary {n_boundary} < 64")));
    }
    settle(
        |n| {
            let segs = boundary_segments(g, rect, n);
            let mut raw = 0.0;
            let mut gap = f64::INFINITY;
            let mut crowding = 0.0f64;
            for s in &segs {
                let d = point_segment_distance(y, s.a, s.b);
                gap = gap.min(d);
                crowding = crowding.max(10.0 * s.dev / d);
                let (u, v) = ([s.a[0] - y[0], s.a[1] - y[1]], [s.b[0] - y[0], s.b[1] - y[1]]);
                raw += (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
            }
            Pass { raw: raw / (2.0 * core::f64::consts::PI), gap, crowding }
        },
        n_boundary.div_ceil(4),
        MAX_SIDE_2D,
    )
}

/// Solid-angle degree of `f(∂box)` around `y` with `n_boundary` lattice cells
/// per face side.
pub fn degree3(f: &VectorMap<3, 3>, region: &Aabb<3>, y: [f64; 3], n_boundary: usize) -> Result<DegreeResult> {
    if n_boundary < 4 {
        return Err(Error::Domain(format!("n_boundary {n_boundary} < 4")));
    }
    settle(
        |n| {
            let mut raw = 0.0;
            let mut gap = f64::INFINITY;
            let mut crowding = 0.0f64;
            for_each_triangle(f, region, n, &mut |t| {
                let d = point_triangle_distance(y, t.v[0], t.v[1], t.v[2]);
                gap = gap.min(d);
                crowding = crowding.max(10.0 * t.dev / d);
                raw += solid_angle(sub3(t.v[0], y), sub3(t.v[1], y), sub3(t.v[2], y));
            });
            Pass { raw: raw / (4.0 * core::f64::consts::PI), gap, crowding }
        },
        n_boundary,
        MAX_SIDE_3D,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn planar_examples() {
        let unit = Aabb::<2>::unit();
        let sq = Aabb { lo: [-1.0; 2], hi: [1.0; 2] };
        assert_eq!(degree2(&gallery::map2("identity_2d").unwrap(), &unit, [0.5, 0.5], 64).unwrap().value, 1);
        assert_eq!(degree2(&gallery::map2("reflection_2d").unwrap(), &sq, [0.0, 0.0], 64).unwrap().value, -1);
        let z2 = degree2(&gallery::z_square(), &sq, [0.25, 0.0], 64).unwrap();
        assert_eq!(z2.value, 2);
        assert!((z2.raw - 2.0).abs() < 1e-9);
        let edge = degree2(&gallery::map2("identity_2d").unwrap(), &unit, [0.5, 0.0], 64);
        assert!(matches!(edge, Err(Error::BoundaryProximity { .. })));
        assert!(degree2(&gallery::z_square(), &sq, [0.25, 0.0], 16).is_err());
    }

    #[test]
    fn spatial_examples() {
        let unit = Aabb::<3>::unit();
        assert_eq!(degree3(&gallery::identity(), &unit, [0.5; 3], 8).unwrap().value, 1);
        let a = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        let f = gallery::linear(a);
        assert_eq!(degree3(&f, &unit, f.eval([0.5; 3]), 8).unwrap().value, -1);
        assert_eq!(degree3(&gallery::identity(), &unit, [1.5, 0.5, 0.5], 8).unwrap().value, 0);
        let c = degree3(&gallery::cantor_shear(0), &unit, [0.5, 0.5, 0.9], 16).unwrap();
        assert_eq!(c.value, 1);
        assert!((c.raw - 1.0).abs() < 0.1);
    }
}
