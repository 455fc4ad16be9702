use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Aabb, AnalyticMap, Grid, VectorMap};
use crate::linalg::{cofactor_adjugate, frobenius3, Mat3};
use crate::measure::dyadic_cube;
use crate::pairing::{stieltjes_leaves, tensor_integrate};
use crate::quad::Rule1d;

/// Largest admissible volume of the image-cell cover of one face, as a
/// fraction of the image bounding box.
pub const COVER_FRACTION: f64 = 0.01;
/// Cover cells per side of the image bounding box.
pub const COVER_CELLS: usize = 256;
/// Jittered samples per side of each face.
pub const COVER_SAMPLES: usize = 512;
/// Largest admissible growth of a slab ratio per halving.
pub const SLAB_GROWTH: f64 = 1.3;
pub const SLAB_HALVINGS: usize = 3;
/// First slab half-width as a fraction of the cube side.
pub const SLAB_START: f64 = 1.0 / 1024.0;
pub const MAX_SCAN_DEPTH: u32 = 4;

const COVER_SEED: u64 = 0x676f_6f64_6375_6265;
const SLAB_DEPTH: u32 = 6;

/// One screened condition with the surrogate value behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Flag {
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Flag {
    fn at_most(value: f64, threshold: f64) -> Self {
        Flag { pass: value <= threshold, value, threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FaceReport {
    pub axis: usize,
    pub at: f64,
    /// Declared singular support meets the face plane (value 1) or not (0).
    pub good1: Flag,
    /// Cover volume of the face image as a fraction of the image box.
    pub good2: Flag,
    /// Slab ratio growth of `|Df|`, `|adj Df|` and `|det Df|`.
    pub good3: Flag,
    pub good4: Flag,
    pub good5: Flag,
    pub slab_widths: Vec<f64>,
    /// `mass / (2r · face area)` per measure and half-width.
    pub slab_ratios: [Vec<f64>; 3],
}

impl FaceReport {
    pub fn flags(&self) -> [(&'static str, Flag); 5] {
        [("good1", self.good1), ("good2", self.good2), ("good3", self.good3), ("good4", self.good4), ("good5", self.good5)]
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GoodCubeReport {
    pub cube: Aabb<3>,
    pub faces: Vec<FaceReport>,
    pub verdict: bool,
}

impl GoodCubeReport {
    /// First failing condition as `"goodK on x_a = t (value > threshold)"`.
    pub fn first_failure(&self) -> Option<String> {
        self.faces.iter().find_map(|face| {
            face.flags().iter().find(|(_, fl)| !fl.pass).map(|(name, fl)| {
                format!("{name} on x{} = {} ({:.3e} > {:.3e})", face.axis + 1, face.at, fl.value, fl.threshold)
            })
        })
    }
}

/// Bounding box of `f(q)` from a `17^3` node sample.
pub fn image_bounds(f: &VectorMap<3, 3>, q: &Aabb<3>) -> Aabb<3> {
    let n = 16;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for a in 0..=n {
        for b in 0..=n {
            for c in 0..=n {
                let t = [a, b, c];
                let x: [f64; 3] = core::array::from_fn(|k| q.lo[k] + q.width(k) * t[k] as f64 / n as f64);
                let y = f.eval(x);
                for k in 0..3 {
                    lo[k] = lo[k].min(y[k]);
                    hi[k] = hi[k].max(y[k]);
                }
            }
        }
    }
    Aabb { lo, hi }
}

/// Volume of the cover of `f({x_axis = at} ∩ q)` by image cells hit by
/// jittered samples, as a fraction of the volume of `image`.
pub fn face_cover(f: &VectorMap<3, 3>, q: &Aabb<3>, axis: usize, at: f64, image: &Aabb<3>, seed: u64) -> f64 {
    if (0..3).any(|k| !(image.width(k) > 0.0)) {
        return 0.0;
    }
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = COVER_SAMPLES;
    let (hu, hv) = (q.width(u) / n as f64, q.width(v) / n as f64);
    let cell = |y: f64, k: usize| -> u64 {
        let t = ((y - image.lo[k]) / image.width(k) * COVER_CELLS as f64).floor();
        t.max(0.0).min((COVER_CELLS - 1) as f64) as u64
    };
    let mut keys = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut x = [0.0; 3];
            x[axis] = at;
            x[u] = q.lo[u] + (a as f64 + rng.gen::<f64>()) * hu;
            x[v] = q.lo[v] + (b as f64 + rng.gen::<f64>()) * hv;
            let y = f.eval(x);
            keys.push(cell(y[0], 0) | cell(y[1], 1) << 21 | cell(y[2], 2) << 42);
        }
    }
    keys.sort_unstable();
    keys.dedup();
    keys.len() as f64 / (COVER_CELLS as f64).powi(3)
}

/// `|Df|`, `|adj Df|` and `|det Df|` of a box, from the derivative
/// decomposition.
pub fn slab_masses(f: &AnalyticMap, slab: &Aabb<3>) -> Result<[f64; 3]> {
    if !f.has_jacobian() {
        return Err(Error::InsufficientData(format!("{} has no derivative decomposition", f.id)));
    }
    if !f.domain.contains_box(slab) {
        return Err(Error::Domain(format!("slab {slab:?} leaves the domain of {}", f.id)));
    }
    let jac = |x: [f64; 3]| -> Mat3 { f.jacobian_ac(x).unwrap_or([[0.0; 3]; 3]) };
    let rules: [Rule1d; 3] = core::array::from_fn(|k| Rule1d::composite(&[slab.lo[k], slab.hi[k]], 4));
    let mut out = [0.0; 3];
    for (m, o) in out.iter_mut().enumerate() {
        *o = tensor_integrate(&rules, &|x| {
            let j = jac(x);
            match m {
                0 => frobenius3(j),
                1 => frobenius3(cofactor_adjugate(j)),
                _ => crate::linalg::det3(j).abs(),
            }
        });
    }
    for term in &f.singular {
        let (a, t) = (term.component, term.axis);
        let mut leaves = Vec::new();
        stieltjes_leaves(&term.profile, slab.lo[t], slab.hi[t], SLAB_DEPTH, &mut leaves);
        let mut cross = rules.clone();
        for (pos, d) in leaves {
            cross[t] = Rule1d { nodes: alloc::vec![pos], weights: alloc::vec![1.0] };
            out[0] += d.abs() * tensor_integrate(&cross, &|_| 1.0);
            out[1] += d.abs()
                * tensor_integrate(&cross, &|x| {
                    let j = jac(x);
                    let mut e = j;
                    e[a][t] += 1.0;
                    let (p, q) = (cofactor_adjugate(e), cofactor_adjugate(j));
                    let diff: Mat3 = core::array::from_fn(|r| core::array::from_fn(|c| p[r][c] - q[r][c]));
                    frobenius3(diff)
                });
            out[2] += d.abs() * tensor_integrate(&cross, &|x| cofactor_adjugate(jac(x))[t][a].abs());
        }
    }
    Ok(out)
}

fn growth(ratios: &[f64]) -> f64 {
    ratios
        .windows(2)
        .map(|w| if w[0] > 1e-300 { w[1] / w[0] } else if w[1] > 1e-300 { f64::INFINITY } else { 1.0 })
        .fold(1.0, f64::max)
}

fn face_report(f: &AnalyticMap, q: &Aabb<3>, axis: usize, at: f64, image: &Aabb<3>, seed: u64) -> FaceReport {
    let meets = f.support.iter().any(|t| t.meets_plane(axis, at, 0.0));
    let good1 = Flag::at_most(if meets { 1.0 } else { 0.0 }, 0.0);
    let good2 = Flag::at_most(face_cover(f, q, axis, at, image, seed), COVER_FRACTION);
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let area = q.width(u) * q.width(v);
    let widths: Vec<f64> = (0..=SLAB_HALVINGS).map(|k| q.width(axis) * SLAB_START / (1u64 << k) as f64).collect();
    let mut ratios: [Vec<f64>; 3] = Default::default();
    let mut failed = false;
    for &r in &widths {
        let mut slab = *q;
        slab.lo[axis] = at - r;
        slab.hi[axis] = at + r;
        match slab_masses(f, &slab) {
            Ok(m) => {
                for k in 0..3 {
                    ratios[k].push(m[k] / (2.0 * r * area));
                }
            }
            Err(_) => failed = true,
        }
    }
    let flag = |k: usize| Flag::at_most(if failed { f64::INFINITY } else { growth(&ratios[k]) }, SLAB_GROWTH);
    FaceReport {
        axis,
        at,
        good1,
        good2,
        good3: flag(0),
        good4: flag(1),
        good5: flag(2),
        slab_widths: widths,
        slab_ratios: ratios,
    }
}

/// Screens the six faces of `q`.
pub fn good_cube(f: &AnalyticMap, q: &Aabb<3>) -> GoodCubeReport {
    let image = image_bounds(f, q);
    let mut faces = Vec::with_capacity(6);
    for axis in 0..3 {
        for (s, at) in [q.lo[axis], q.hi[axis]].into_iter().enumerate() {
            let seed = COVER_SEED ^ (2 * axis + s) as u64;
            faces.push(face_report(f, q, axis, at, &image, seed));
        }
    }
    let verdict = faces.iter().all(|face| face.flags().iter().all(|(_, fl)| fl.pass));
    GoodCubeReport { cube: *q, faces, verdict }
}

/// Screens every dyadic subcube of `region` at `depth`, in row-major order.
pub fn good_cube_scan(f: &AnalyticMap, region: &Aabb<3>, depth: u32) -> Result<Vec<GoodCubeReport>> {
    if depth > MAX_SCAN_DEPTH {
        return Err(Error::Domain(format!("scan depth {depth} exceeds {MAX_SCAN_DEPTH}")));
    }
    let k = 1usize << depth;
    Ok((0..k * k * k)
        .map(|c| good_cube(f, &dyadic_cube(region, depth, Grid::<3>::unflat([k; 3], c))))
        .collect())
}

/// `Ok` when `q` is good for `f`, otherwise a hypothesis error naming the
/// first failed condition.
pub fn screen_cube(f: &AnalyticMap, q: &Aabb<3>) -> Result<()> {
    let r = good_cube(f, q);
    match r.first_failure() {
        None => Ok(()),
        Some(why) => Err(Error::Hypothesis(format!("{q:?} is not a good cube for {}: {why}", f.id))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn identity_cubes_are_good() {
        let scan = good_cube_scan(&gallery::identity(), &Aabb::unit(), 1).unwrap();
        assert_eq!(scan.len(), 8);
        assert!(scan.iter().all(|r| r.verdict));
        assert!(good_cube_scan(&gallery::identity(), &Aabb::unit(), 5).is_err());
    }

    #[test]
    fn cantor_faces() {
        let f = gallery::cantor_shear(0);
        let r = good_cube(&f, &Aabb::unit());
        assert!(!r.verdict);
        let bad: Vec<_> = r.faces.iter().filter(|face| !face.good1.pass).map(|face| (face.axis, face.at)).collect();
        assert_eq!(bad, alloc::vec![(0, 0.0), (0, 1.0)]);
        let inner = Aabb { lo: [0.5, 0.0, 0.0], hi: [1.0 - 1.0 / 18.0, 1.0, 1.0] };
        let r = good_cube(&f, &inner);
        assert!(r.verdict, "{:?}", r.first_failure());
        let on_set = Aabb { lo: [0.25, 0.0, 0.0], hi: [0.5, 1.0, 1.0] };
        assert!(matches!(screen_cube(&f, &on_set), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn sine_shear_ratios_bounded_by_gradient() {
        let a = 0.3;
        let f = gallery::sine_shear(a);
        let r = good_cube(&f, &Aabb::unit());
        assert!(r.verdict, "{:?}", r.first_failure());
        // |Df|_F <= sqrt(3 + (aπ)^2 · 2)
        let bound = (3.0 + 2.0 * (a * core::f64::consts::PI).powi(2)).sqrt();
        for face in &r.faces {
            assert!(face.slab_ratios[0].iter().all(|&v| v <= bound + 1e-9));
            assert!(face.good2.value < COVER_FRACTION);
        }
    }
}
