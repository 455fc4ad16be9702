use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::Aabb;
use crate::cantor::SingularProfile;
use crate::error::{Error, Result};
use crate::linalg::cyclic;

pub type Evaluator<const N: usize, const M: usize> = Arc<dyn Fn([f64; N]) -> [f64; M] + Send + Sync>;
/// Rows are components: `jac[a][k] = ∂_k f_a`.
pub type Jacobian<const N: usize, const M: usize> =
    Arc<dyn Fn([f64; N]) -> [[f64; N]; M] + Send + Sync>;

/// Regularity class of one component.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Smoothness {
    C1,
    /// `W^{1,p}`, `p` possibly infinite.
    Sobolev(f64),
    /// BV with a singular derivative part.
    Bv,
}

impl Smoothness {
    /// Integrability exponent, with `C1` read as `p = ∞` and BV as `p = 1`.
    pub fn exponent(&self) -> f64 {
        match *self {
            Smoothness::C1 => f64::INFINITY,
            Smoothness::Sobolev(p) => p,
            Smoothness::Bv => 1.0,
        }
    }
}

/// Declared location of singular derivative mass (zero-based axes).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum SupportTag {
    Plane { axis: usize, at: f64 },
    Cantor { axis: usize, profile: SingularProfile },
}

impl SupportTag {
    pub fn axis(&self) -> usize {
        match *self {
            SupportTag::Plane { axis, .. } | SupportTag::Cantor { axis, .. } => axis,
        }
    }

    /// Whether the plane `{x_axis = t}` meets the support.
    pub fn meets_plane(&self, axis: usize, t: f64, tol: f64) -> bool {
        match *self {
            SupportTag::Plane { axis: a, at } => a == axis && (at - t).abs() <= tol,
            SupportTag::Cantor { axis: a, profile } => a == axis && profile.support_meets(t - tol, t + tol),
        }
    }

    /// Whether the slab `{a <= x_axis <= b}` meets the support.
    pub fn meets_slab(&self, axis: usize, a: f64, b: f64) -> bool {
        match *self {
            SupportTag::Plane { axis: ax, at } => ax == axis && at >= a && at <= b,
            SupportTag::Cantor { axis: ax, profile } => ax == axis && profile.support_meets(a, b),
        }
    }
}

/// `f_component` contains the additive term `profile(x_axis)`, so
/// `D_axis f_component` has singular part `profile' ⊗ λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SingularTerm {
    pub component: usize,
    pub axis: usize,
    pub profile: SingularProfile,
}

/// Continuous map `R^N ⊃ domain → R^M` with derivative metadata.
#[derive(Clone)]
pub struct VectorMap<const N: usize, const M: usize> {
    pub id: String,
    pub domain: Aabb<N>,
    eval: Evaluator<N, M>,
    jac: Option<Jacobian<N, M>>,
    pub singular: Vec<SingularTerm>,
    pub smoothness: [Smoothness; M],
    pub support: Vec<SupportTag>,
    inverse: Option<Arc<VectorMap<M, N>>>,
}

pub type AnalyticMap = VectorMap<3, 3>;
pub type Map2 = VectorMap<2, 2>;
pub type Surface = VectorMap<2, 3>;
pub type ScalarMap = VectorMap<3, 1>;

impl<const N: usize, const M: usize> core::fmt::Debug for VectorMap<N, M> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("VectorMap")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("singular", &self.singular)
            .field("smoothness", &self.smoothness)
            .field("inverse", &self.inverse.is_some())
            .finish()
    }
}

impl<const N: usize, const M: usize> VectorMap<N, M> {
    pub fn new(
        id: impl Into<String>,
        domain: Aabb<N>,
        eval: impl Fn([f64; N]) -> [f64; M] + Send + Sync + 'static,
    ) -> Self {
        VectorMap {
            id: id.into(),
            domain,
            eval: Arc::new(eval),
            jac: None,
            singular: Vec::new(),
            smoothness: [Smoothness::C1; M],
            support: Vec::new(),
            inverse: None,
        }
    }

    /// Absolutely continuous part of the Jacobian.
    pub fn with_jacobian(mut self, jac: impl Fn([f64; N]) -> [[f64; N]; M] + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_singular(mut self, term: SingularTerm) -> Self {
        self.smoothness[term.component] = Smoothness::Bv;
        self.support.push(SupportTag::Cantor { axis: term.axis, profile: term.profile });
        self.singular.push(term);
        self
    }

    pub fn with_smoothness(mut self, s: [Smoothness; M]) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_support(mut self, tag: SupportTag) -> Self {
        self.support.push(tag);
        self
    }

    pub fn with_inverse(mut self, inv: VectorMap<M, N>) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn without_inverse(mut self) -> Self {
        self.inverse = None;
        self
    }

    pub fn eval(&self, x: [f64; N]) -> [f64; M] {
        (self.eval)(x)
    }

    /// Evaluate, rejecting non-finite output.
    pub fn try_eval(&self, x: [f64; N]) -> Result<[f64; M]> {
        let y = self.eval(x);
        if y.iter().all(|v| v.is_finite()) {
            Ok(y)
        } else {
            Err(Error::Domain(format!("{} is not finite at {:?}", self.id, x)))
        }
    }

    pub fn jacobian_ac(&self, x: [f64; N]) -> Option<[[f64; N]; M]> {
        self.jac.as_ref().map(|j| j(x))
    }

    pub fn has_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    pub fn inverse(&self) -> Option<&VectorMap<M, N>> {
        self.inverse.as_deref()
    }

    pub fn evaluator(&self) -> Evaluator<N, M> {
        self.eval.clone()
    }

    /// Singular terms acting on `D_axis f_component`.
    pub fn singular_terms(&self, component: usize, axis: usize) -> impl Iterator<Item = &SingularTerm> {
        self.singular.iter().filter(move |t| t.component == component && t.axis == axis)
    }

    pub fn component(&self, a: usize) -> VectorMap<N, 1> {
        let eval = self.eval.clone();
        let mut out = VectorMap::new(format!("{}[{}]", self.id, a + 1), self.domain, move |x| [eval(x)[a]]);
        if let Some(j) = self.jac.clone() {
            out = out.with_jacobian(move |x| [j(x)[a]]);
        }
        out.singular = self
            .singular
            .iter()
            .filter(|t| t.component == a)
            .map(|t| SingularTerm { component: 0, ..*t })
            .collect();
        out.smoothness = [self.smoothness[a]];
        out.support = self.support.clone();
        out
    }

    /// The map `x ↦ (f_{comps[0]}, ..., f_{comps[K-1]})`.
    pub fn select<const K: usize>(&self, comps: [usize; K]) -> VectorMap<N, K> {
        let eval = self.eval.clone();
        let names: Vec<String> = comps.iter().map(|a| format!("{}", a + 1)).collect();
        let id = format!("{}[{}]", self.id, names.join(","));
        let mut out = VectorMap::new(id, self.domain, move |x| {
            let y = eval(x);
            core::array::from_fn(|k| y[comps[k]])
        });
        if let Some(j) = self.jac.clone() {
            out = out.with_jacobian(move |x| {
                let full = j(x);
                core::array::from_fn(|k| full[comps[k]])
            });
        }
        out.singular = self
            .singular
            .iter()
            .flat_map(|t| {
                comps
                    .iter()
                    .enumerate()
                    .filter(move |(_, &a)| a == t.component)
                    .map(move |(k, _)| SingularTerm { component: k, ..*t })
            })
            .collect();
        out.smoothness = core::array::from_fn(|k| self.smoothness[comps[k]]);
        out.support = self.support.clone();
        out
    }

    /// Checks the inverse round trip (1e-9 at `samples` random points) and a
    /// modulus-of-continuity probe.
    pub fn validate(&self, seed: u64, samples: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let mut x = [0.0; N];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = rng.gen_range(self.domain.lo[i]..self.domain.hi[i]);
            }
            let y = self.try_eval(x)?;
            let mut xp = x;
            for xi in xp.iter_mut() {
                *xi += 1e-9;
            }
            let yp = self.try_eval(xp)?;
            let jump = (0..M).map(|a| (yp[a] - y[a]).abs()).fold(0.0, f64::max);
            if jump > 1e-4 {
                return Err(Error::Domain(format!("{} jumps by {jump:.3e} at {x:?}", self.id)));
            }
            if let Some(inv) = self.inverse() {
                let back = self.eval(inv.eval(y));
                let err = (0..M).map(|a| (back[a] - y[a]).abs()).fold(0.0, f64::max);
                if err > 1e-9 * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                    return Err(Error::Domain(format!("{}: f(f^-1(y)) off by {err:.3e}", self.id)));
                }
            }
        }
        Ok(())
    }
}

/// `(i', i'')` receiving `(y1, y2)` under `κ_i^t`.
pub fn kappa_axes(axis: usize) -> (usize, usize) {
    cyclic(axis)
}

/// `κ_axis^t(y)`: `κ1 = (t,y1,y2)`, `κ2 = (y2,t,y1)`, `κ3 = (y1,y2,t)`.
pub fn kappa(axis: usize, t: f64, y: [f64; 2]) -> [f64; 3] {
    let (a1, a2) = kappa_axes(axis);
    let mut x = [0.0; 3];
    x[axis] = t;
    x[a1] = y[0];
    x[a2] = y[1];
    x
}

impl<const M: usize> VectorMap<3, M> {
    /// `f ∘ κ_axis^t` on the cross-section of the domain.
    pub fn slice(&self, axis: usize, t: f64) -> Result<VectorMap<2, M>> {
        if axis > 2 {
            return Err(Error::Domain(format!("axis {} out of range", axis + 1)));
        }
        if !(t > self.domain.lo[axis] && t < self.domain.hi[axis]) {
            return Err(Error::Domain(format!("slice t = {t} outside domain along axis {}", axis + 1)));
        }
        let (a1, a2) = kappa_axes(axis);
        let rect = Aabb { lo: [self.domain.lo[a1], self.domain.lo[a2]], hi: [self.domain.hi[a1], self.domain.hi[a2]] };
        let eval = self.eval.clone();
        let mut out = VectorMap::new(format!("{}|x{}={}", self.id, axis + 1, t), rect, move |y| eval(kappa(axis, t, y)));
        if let Some(j) = self.jac.clone() {
            out = out.with_jacobian(move |y| {
                let full = j(kappa(axis, t, y));
                let mut r = [[0.0; 2]; M];
                for a in 0..M {
                    r[a] = [full[a][a1], full[a][a2]];
                }
                r
            });
        }
        let remap = |ax: usize| if ax == a1 { Some(0) } else if ax == a2 { Some(1) } else { None };
        out.singular = self
            .singular
            .iter()
            .filter_map(|s| remap(s.axis).map(|axis| SingularTerm { axis, ..*s }))
            .collect();
        out.support = self
            .support
            .iter()
            .filter_map(|s| match *s {
                SupportTag::Plane { axis, at } => remap(axis).map(|axis| SupportTag::Plane { axis, at }),
                SupportTag::Cantor { axis, profile } => remap(axis).map(|axis| SupportTag::Cantor { axis, profile }),
            })
            .collect();
        out.smoothness = self.smoothness;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::cantor;

    fn shear() -> AnalyticMap {
        let prof = SingularProfile::cantor(1.0);
        VectorMap::new("shear", Aabb { lo: [-1.0; 3], hi: [2.0; 3] }, |x: [f64; 3]| [x[0], x[1], x[2] + cantor(x[0])])
            .with_jacobian(|_| [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            .with_singular(SingularTerm { component: 2, axis: 0, profile: prof })
            .with_inverse(VectorMap::new("inv", Aabb { lo: [-1.0; 3], hi: [2.0; 3] }, |y: [f64; 3]| {
                [y[0], y[1], y[2] - cantor(y[0])]
            }))
    }

    #[test]
    fn kappa_orientation() {
        assert_eq!(kappa(0, 9.0, [1.0, 2.0]), [9.0, 1.0, 2.0]);
        assert_eq!(kappa(1, 9.0, [1.0, 2.0]), [2.0, 9.0, 1.0]);
        assert_eq!(kappa(2, 9.0, [1.0, 2.0]), [1.0, 2.0, 9.0]);
    }

    #[test]
    fn slice_matches_direct_evaluation() {
        let f = shear();
        let s = f.slice(0, 0.5).unwrap();
        let y = [0.3, 0.7];
        assert_eq!(s.eval(y), f.eval([0.5, 0.3, 0.7]));
        assert!(s.singular.is_empty());
        let s3 = f.slice(2, 0.25).unwrap();
        assert_eq!(s3.singular.len(), 1);
        assert_eq!(s3.singular[0].axis, 0);
        assert!(f.slice(2, 5.0).is_err());
    }

    #[test]
    fn validate_inverse() {
        let f = shear();
        f.validate(7, 1000).unwrap();
        let bad = shear().with_inverse(VectorMap::new("bad", f.domain, |y: [f64; 3]| y));
        assert!(bad.validate(7, 100).is_err());
    }
}
