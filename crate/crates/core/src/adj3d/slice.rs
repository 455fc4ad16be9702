use alloc::format;
use alloc::vec::Vec;

use super::{check_entry, AdjPairingResult, AdjRoute};
use crate::error::{Error, Result};
use crate::field::{kappa, kappa_axes, Aabb, AnalyticMap, SupportTag};
use crate::jac2d::det_pairing;
use crate::linalg::cyclic;
use crate::quad::Rule1d;
use crate::testfn::TestFunction;

/// `φ ∘ κ_axis^t` as a planar test function.
pub struct SlicedTest<'a> {
    pub phi: &'a dyn TestFunction<3>,
    pub axis: usize,
    pub t: f64,
}

impl TestFunction<2> for SlicedTest<'_> {
    fn eval(&self, y: [f64; 2]) -> f64 {
        self.phi.eval(kappa(self.axis, self.t, y))
    }

    fn grad(&self, y: [f64; 2]) -> [f64; 2] {
        let g = self.phi.grad(kappa(self.axis, self.t, y));
        let (a1, a2) = kappa_axes(self.axis);
        [g[a1], g[a2]]
    }

    fn support(&self) -> Aabb<2> {
        let s = self.phi.support();
        let (a1, a2) = kappa_axes(self.axis);
        Aabb { lo: [s.lo[a1], s.lo[a2]], hi: [s.hi[a1], s.hi[a2]] }
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let (a1, a2) = kappa_axes(self.axis);
        self.phi.breakpoints(if axis == 0 { a1 } else { a2 })
    }

    fn integral(&self) -> f64 {
        let r0 = Rule1d::composite(&self.breakpoints(0), 8);
        let r1 = Rule1d::composite(&self.breakpoints(1), 8);
        let mut s = 0.0;
        for (x, wx) in r0.nodes.iter().zip(&r0.weights) {
            for (y, wy) in r1.nodes.iter().zip(&r1.weights) {
                s += wx * wy * self.eval([*x, *y]);
            }
        }
        s
    }
}

/// Share of layers allowed to fail before the slice integral is rejected.
pub const MAX_FAILED_LAYERS: f64 = 0.05;

/// `∫ ⟨Det(D(f_j' ∘ κ_i^t), D(f_j'' ∘ κ_i^t)), φ ∘ κ_i^t⟩ dt` by the midpoint
/// rule on `layers` layers across the support of `φ`. Layers within one
/// layer of a declared singular plane `x_i = const` are skipped.
pub fn pairing_slice(
    f: &AnalyticMap,
    i: usize,
    j: usize,
    phi: &dyn TestFunction<3>,
    layers: usize,
) -> Result<AdjPairingResult> {
    check_entry(i, j)?;
    if layers == 0 {
        return Err(Error::Domain("no slice layers".into()));
    }
    let (j1, j2) = cyclic(j);
    let pair = f.select([j1, j2]);
    let s = phi.support();
    let dt = s.width(i) / layers as f64;
    let planes: Vec<f64> = f
        .support
        .iter()
        .filter_map(|t| match *t {
            SupportTag::Plane { axis, at } if axis == i => Some(at),
            _ => None,
        })
        .collect();
    let mut value = 0.0;
    let mut mass = 0.0;
    let mut err = 0.0;
    let mut failed = 0usize;
    let mut used = 0usize;
    for k in 0..layers {
        let t = s.lo[i] + (k as f64 + 0.5) * dt;
        if planes.iter().any(|p| (p - t).abs() < dt) {
            continue;
        }
        used += 1;
        let g = pair.slice(i, t)?;
        let test = SlicedTest { phi, axis: i, t };
        match det_pairing(&g, &test, None) {
            Ok(p) => {
                value += p.value * dt;
                mass += p.value.abs() * dt;
                err += p.err * dt;
            }
            Err(Error::Convergence(_)) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if failed as f64 >= MAX_FAILED_LAYERS * used.max(1) as f64 && failed > 0 {
        return Err(Error::SliceIntegrity { failed, total: used });
    }
    let mut r = AdjPairingResult::new(i, j, value, err, AdjRoute::Slicing, alloc::vec![layers as f64]);
    r.failed_layers = failed;
    r.layer_mass = mass;
    if !value.is_finite() {
        return Err(Error::Convergence(format!("slice integral of {} is not finite", f.id)));
    }
    Ok(r)
}
