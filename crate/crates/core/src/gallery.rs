//! Explicit maps addressable by string id.
//!
//! 3D: `identity`, `linear:<9 floats>`, `cantor_shear[:1|2]`, `sine_shear:<a>`,
//! `stretch:<b>`, `graded:<b>`. 2D: `identity_2d`, `linear_2d:<4 floats>`,
//! `reflection_2d`, `z_square_2d`, `cantor_row_2d`. Surfaces: `flat_surface`,
//! `paraboloid`, `wild:<K>`. Axes in ids are one-based.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::cantor::{cantor, SingularProfile};
use crate::error::{Error, Result};
use crate::field::{Aabb, AnalyticMap, Map2, SingularTerm, Smoothness, Surface, VectorMap};
use crate::linalg::{inverse3, Mat3, IDENTITY3};

const PI: f64 = core::f64::consts::PI;

/// Domain of every 3D gallery map; leaves a collar around `(0,1)^3`.
pub fn domain3() -> Aabb<3> {
    Aabb { lo: [-1.0; 3], hi: [2.0; 3] }
}

pub fn domain2() -> Aabb<2> {
    Aabb { lo: [-2.0; 2], hi: [2.0; 2] }
}

/// Representative ids, one per family.
pub fn ids() -> Vec<&'static str> {
    alloc::vec![
        "identity",
        "linear:1,0,0,0,2,0,0,0,3",
        "cantor_shear",
        "cantor_shear:2",
        "sine_shear:0.3",
        "stretch:0.2",
        "graded:0.5",
        "identity_2d",
        "linear_2d:2,1,0,1",
        "reflection_2d",
        "z_square_2d",
        "cantor_row_2d",
        "flat_surface",
        "paraboloid",
        "wild:8",
    ]
}

fn split(id: &str) -> (&str, Option<&str>) {
    match id.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (id, None),
    }
}

fn floats(id: &str, args: Option<&str>, n: usize) -> Result<Vec<f64>> {
    let args = args.ok_or_else(|| Error::Parse(format!("`{id}` needs {n} parameters")))?;
    let v: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in `{id}`"))))
        .collect::<Result<_>>()?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("`{id}` needs {n} finite parameters")));
    }
    Ok(v)
}

/// Parses a 3D map id.
pub fn map3(id: &str) -> Result<AnalyticMap> {
    let (name, args) = split(id);
    match name {
        "identity" if args.is_none() => Ok(identity()),
        "linear" => {
            let v = floats(id, args, 9)?;
            Ok(linear([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]))
        }
        "cantor_shear" => {
            let axis = match args {
                None => 1,
                Some(a) => a.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad axis in `{id}`")))?,
            };
            if !(1..=2).contains(&axis) {
                return Err(Error::Parse(format!("cantor_shear axis must be 1 or 2, got {axis}")));
            }
            Ok(cantor_shear(axis - 1))
        }
        "sine_shear" => Ok(sine_shear(floats(id, args, 1)?[0])),
        "stretch" => {
            let b = floats(id, args, 1)?[0];
            if !(b > -0.5 && b < 1.0) {
                return Err(Error::Parse("stretch needs -0.5 < b < 1".into()));
            }
            Ok(stretch(b))
        }
        "graded" => {
            let b = floats(id, args, 1)?[0];
            if !(b > -0.5 && b < 1.0) {
                return Err(Error::Parse("graded needs -0.5 < b < 1".into()));
            }
            Ok(graded(b))
        }
        _ => Err(Error::UnknownId(String::from(id))),
    }
}

/// Parses a 2D map id.
pub fn map2(id: &str) -> Result<Map2> {
    let (name, args) = split(id);
    match name {
        "identity_2d" if args.is_none() => Ok(linear2("identity_2d", [[1.0, 0.0], [0.0, 1.0]])),
        "linear_2d" => {
            let v = floats(id, args, 4)?;
            Ok(linear2(id, [[v[0], v[1]], [v[2], v[3]]]))
        }
        "reflection_2d" if args.is_none() => Ok(linear2("reflection_2d", [[1.0, 0.0], [0.0, -1.0]])),
        "z_square_2d" if args.is_none() => Ok(z_square()),
        "cantor_row_2d" if args.is_none() => Ok(cantor_row()),
        _ => Err(Error::UnknownId(String::from(id))),
    }
}

/// Parses a surface id.
pub fn surface(id: &str) -> Result<Surface> {
    let (name, args) = split(id);
    let dom = Aabb { lo: [-1.0; 2], hi: [2.0; 2] };
    match name {
        "flat_surface" if args.is_none() => {
            Ok(VectorMap::new(id, dom, |x: [f64; 2]| [x[0], x[1], 0.0])
                .with_jacobian(|_| [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        }
        "paraboloid" if args.is_none() => Ok(VectorMap::new(id, dom, |x: [f64; 2]| {
            [x[0], x[1], x[0] * x[0] + x[1] * x[1]]
        })
        .with_jacobian(|x| [[1.0, 0.0], [0.0, 1.0], [2.0 * x[0], 2.0 * x[1]]])),
        "wild" => {
            let k = args
                .and_then(|a| a.trim().parse::<u32>().ok())
                .filter(|&k| (1..=12).contains(&k))
                .ok_or_else(|| Error::Parse(format!("`{id}` needs an order 1..=12")))?;
            Ok(wild(k))
        }
        _ => Err(Error::UnknownId(String::from(id))),
    }
}

pub fn identity() -> AnalyticMap {
    linear_named("identity", IDENTITY3)
}

/// `x ↦ Ax`, with the inverse attached when `A` is invertible.
pub fn linear(a: Mat3) -> AnalyticMap {
    let id = format!(
        "linear:{}",
        a.iter().flatten().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
    );
    linear_named(&id, a)
}

fn linear_named(id: &str, a: Mat3) -> AnalyticMap {
    let apply = move |m: Mat3, x: [f64; 3]| {
        let mut y = [0.0; 3];
        for r in 0..3 {
            y[r] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2];
        }
        y
    };
    let dom = domain3();
    let mut f = VectorMap::new(id, dom, move |x| apply(a, x)).with_jacobian(move |_| a);
    if let Some(inv) = inverse3(a) {
        let big = Aabb { lo: [-100.0; 3], hi: [100.0; 3] };
        f = f.with_inverse(VectorMap::new(format!("{id}^-1"), big, move |y| apply(inv, y)).with_jacobian(move |_| inv));
    }
    f
}

/// `(x1, x2, x3 + c(x_axis))`; `axis` is zero-based (0 or 1).
pub fn cantor_shear(axis: usize) -> AnalyticMap {
    let id = if axis == 0 { String::from("cantor_shear") } else { format!("cantor_shear:{}", axis + 1) };
    let inv = VectorMap::new(format!("{id}^-1"), domain3(), move |y: [f64; 3]| {
        [y[0], y[1], y[2] - cantor(y[axis])]
    })
    .with_jacobian(|_| IDENTITY3)
    .with_singular(SingularTerm { component: 2, axis, profile: SingularProfile::cantor(-1.0) });
    VectorMap::new(id, domain3(), move |x: [f64; 3]| [x[0], x[1], x[2] + cantor(x[axis])])
        .with_jacobian(|_| IDENTITY3)
        .with_singular(SingularTerm { component: 2, axis, profile: SingularProfile::cantor(1.0) })
        .with_inverse(inv)
}

/// `(x1, x2, x3 + a sin(πx1) sin(πx2))`.
pub fn sine_shear(a: f64) -> AnalyticMap {
    let bump = move |x: [f64; 3]| a * (PI * x[0]).sin() * (PI * x[1]).sin();
    let grad = move |x: [f64; 3]| {
        [a * PI * (PI * x[0]).cos() * (PI * x[1]).sin(), a * PI * (PI * x[0]).sin() * (PI * x[1]).cos()]
    };
    let id = format!("sine_shear:{a}");
    let inv = VectorMap::new(format!("{id}^-1"), domain3(), move |y: [f64; 3]| [y[0], y[1], y[2] - bump(y)])
        .with_jacobian(move |y| {
            let g = grad(y);
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-g[0], -g[1], 1.0]]
        });
    VectorMap::new(id, domain3(), move |x: [f64; 3]| [x[0], x[1], x[2] + bump(x)])
        .with_jacobian(move |x| {
            let g = grad(x);
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [g[0], g[1], 1.0]]
        })
        .with_inverse(inv)
}

/// `(x1 (1 + b x2), x2, x3)`.
pub fn stretch(b: f64) -> AnalyticMap {
    let id = format!("stretch:{b}");
    let inv = VectorMap::new(format!("{id}^-1"), domain3(), move |y: [f64; 3]| [y[0] / (1.0 + b * y[1]), y[1], y[2]])
        .with_jacobian(move |y| {
            let s = 1.0 + b * y[1];
            [[1.0 / s, -b * y[0] / (s * s), 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        });
    VectorMap::new(id, domain3(), move |x: [f64; 3]| [x[0] * (1.0 + b * x[1]), x[1], x[2]])
        .with_jacobian(move |x| [[1.0 + b * x[1], b * x[0], 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        .with_inverse(inv)
}

/// `(x1, x2, x3 (1 + b x1))`.
pub fn graded(b: f64) -> AnalyticMap {
    let id = format!("graded:{b}");
    let inv = VectorMap::new(format!("{id}^-1"), domain3(), move |y: [f64; 3]| [y[0], y[1], y[2] / (1.0 + b * y[0])])
        .with_jacobian(move |y| {
            let s = 1.0 + b * y[0];
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-b * y[2] / (s * s), 0.0, 1.0 / s]]
        });
    VectorMap::new(id, domain3(), move |x: [f64; 3]| [x[0], x[1], x[2] * (1.0 + b * x[0])])
        .with_jacobian(move |x| [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [b * x[2], 0.0, 1.0 + b * x[0]]])
        .with_inverse(inv)
}

pub fn linear2(id: &str, a: [[f64; 2]; 2]) -> Map2 {
    VectorMap::new(id, domain2(), move |x: [f64; 2]| {
        [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    })
    .with_jacobian(move |_| a)
}

/// Complex squaring `z ↦ z^2`.
pub fn z_square() -> Map2 {
    VectorMap::new("z_square_2d", domain2(), |x: [f64; 2]| [x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]])
        .with_jacobian(|x| [[2.0 * x[0], -2.0 * x[1]], [2.0 * x[1], 2.0 * x[0]]])
}

/// `(x1 + c(x1), x2)`.
pub fn cantor_row() -> Map2 {
    VectorMap::new("cantor_row_2d", domain2(), |x: [f64; 2]| [x[0] + cantor(x[0]), x[1]])
        .with_jacobian(|_| [[1.0, 0.0], [0.0, 1.0]])
        .with_singular(SingularTerm { component: 0, axis: 0, profile: SingularProfile::cantor(1.0) })
}

/// Graph of `Σ_{k<=K} 2^{-k/2} sin(4^k π x1)`.
pub fn wild(order: u32) -> Surface {
    let dom = Aabb { lo: [-1.0; 2], hi: [2.0; 2] };
    let h = move |t: f64| (1..=order).map(|k| 2f64.powf(-(k as f64) / 2.0) * (4f64.powi(k as i32) * PI * t).sin()).sum::<f64>();
    let dh = move |t: f64| {
        (1..=order)
            .map(|k| {
                let f = 4f64.powi(k as i32) * PI;
                2f64.powf(-(k as f64) / 2.0) * f * (f * t).cos()
            })
            .sum::<f64>()
    };
    VectorMap::new(format!("wild:{order}"), dom, move |x: [f64; 2]| [x[0], x[1], h(x[0])])
        .with_jacobian(move |x| [[1.0, 0.0], [0.0, 1.0], [dh(x[0]), 0.0]])
}

/// Smoothness tags are part of the map; this helper lets callers override
/// them for hypothesis checks on metadata alone.
pub fn with_exponents(map: AnalyticMap, p: [f64; 3]) -> AnalyticMap {
    let s = p.map(|p| if p.is_infinite() { Smoothness::C1 } else { Smoothness::Sobolev(p) });
    map.with_smoothness(s)
}
