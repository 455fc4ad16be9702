use num_traits::Float;

use crate::linalg::{cross3, dot3, norm3, sub3, Vec3};

/// Signed solid angle of triangle `(a, b, c)` seen from the origin
/// (van Oosterom-Strackee).
pub fn solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let (la, lb, lc) = (norm3(a), norm3(b), norm3(c));
    let num = dot3(a, cross3(b, c));
    let den = la * lb * lc + dot3(a, b) * lc + dot3(a, c) * lb + dot3(b, c) * la;
    2.0 * num.atan2(den)
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

/// Euclidean distance from `p` to the closed triangle `(a, b, c)`.
pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return norm3(ap);
    }
    let bp = sub3(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return norm3(bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return norm3(sub3(p, [a[0] + v * ab[0], a[1] + v * ab[1], a[2] + v * ab[2]]));
    }
    let cp = sub3(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return norm3(cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return norm3(sub3(p, [a[0] + w * ac[0], a[1] + w * ac[1], a[2] + w * ac[2]]));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let bc = sub3(c, b);
        return norm3(sub3(p, [b[0] + w * bc[0], b[1] + w * bc[1], b[2] + w * bc[2]]));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let q = [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ];
    norm3(sub3(p, q))
}

/// Orientation of `p` relative to the directed edge `a -> b` in the plane,
/// with ties broken by the perturbation `p + (ε, ε²)`. Edges are evaluated
/// in a canonical vertex order so the two triangles sharing an edge see
/// exactly opposite signs.
pub fn edge_side(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> i32 {
    let swap = (b[0], b[1]) < (a[0], a[1]);
    let (a, b) = if swap { (b, a) } else { (a, b) };
    let det = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let s = if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else if b[1] != a[1] {
        if b[1] > a[1] {
            -1
        } else {
            1
        }
    } else if b[0] > a[0] {
        1
    } else {
        -1
    };
    if swap {
        -s
    } else {
        s
    }
}
