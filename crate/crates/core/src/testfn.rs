//! Smooth compactly supported test functions with analytic gradients.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::Aabb;

/// A test function `φ ∈ D(R^D)` with an analytic gradient.
pub trait TestFunction<const D: usize>: Sync {
    fn eval(&self, x: [f64; D]) -> f64;
    fn grad(&self, x: [f64; D]) -> [f64; D];
    /// Closed box containing the support.
    fn support(&self) -> Aabb<D>;
    /// Points along `axis` where the function is less smooth; quadrature
    /// panels are aligned to them.
    fn breakpoints(&self, axis: usize) -> Vec<f64>;
    /// Exact integral over `R^D`.
    fn integral(&self) -> f64;
}

/// Radial polynomial bump `(1 - |x-c|^2/r^2)^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump<const D: usize> {
    pub center: [f64; D],
    pub radius: f64,
    pub order: u32,
}

pub type Bump2 = Bump<2>;
pub type Bump3 = Bump<3>;

impl<const D: usize> Bump<D> {
    pub fn new(center: [f64; D], radius: f64) -> Result<Self> {
        Self::with_order(center, radius, 3)
    }

    pub fn with_order(center: [f64; D], radius: f64, order: u32) -> Result<Self> {
        if !(radius > 0.0) || order < 2 {
            return Err(Error::Domain(alloc::format!("bump radius {radius}, order {order}")));
        }
        Ok(Bump { center, radius, order })
    }

    fn s2(&self, x: [f64; D]) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let d = x[i] - self.center[i];
            s += d * d;
        }
        s / (self.radius * self.radius)
    }

    /// Bump fits in `domain` with at least `margin` to spare.
    pub fn fits(&self, domain: &Aabb<D>, margin: f64) -> bool {
        (0..D).all(|i| {
            self.center[i] - self.radius - margin >= domain.lo[i]
                && self.center[i] + self.radius + margin <= domain.hi[i]
        })
    }

    /// `∫ φ^p` for the L^p norms of the kernel lemma.
    pub fn power_integral(&self, p: f64) -> f64 {
        radial_integral::<D>(self.order as f64 * p) * self.radius.powi(D as i32)
    }
}

/// `∫_{|x|<1} (1-|x|^2)^k dx` in dimension `D`.
fn radial_integral<const D: usize>(k: f64) -> f64 {
    let pi = core::f64::consts::PI;
    match D {
        1 => libm::tgamma(0.5) * libm::tgamma(k + 1.0) / libm::tgamma(k + 1.5),
        2 => pi / (k + 1.0),
        _ => {
            // 4π ∫ (1-s^2)^k s^2 ds = 2π B(3/2, k+1)
            2.0 * pi * libm::tgamma(1.5) * libm::tgamma(k + 1.0) / libm::tgamma(k + 2.5)
        }
    }
}

impl<const D: usize> TestFunction<D> for Bump<D> {
    fn eval(&self, x: [f64; D]) -> f64 {
        let s2 = self.s2(x);
        if s2 >= 1.0 {
            0.0
        } else {
            (1.0 - s2).powi(self.order as i32)
        }
    }

    fn grad(&self, x: [f64; D]) -> [f64; D] {
        let s2 = self.s2(x);
        let mut g = [0.0; D];
        if s2 >= 1.0 {
            return g;
        }
        let k = self.order as f64;
        let f = -2.0 * k * (1.0 - s2).powi(self.order as i32 - 1) / (self.radius * self.radius);
        for i in 0..D {
            g[i] = f * (x[i] - self.center[i]);
        }
        g
    }

    fn support(&self) -> Aabb<D> {
        Aabb::centered(self.center, self.radius)
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let c = self.center[axis];
        vec![c - self.radius, c, c + self.radius]
    }

    fn integral(&self) -> f64 {
        radial_integral::<D>(self.order as f64) * self.radius.powi(D as i32)
    }
}

/// Quintic smoothstep `t^3(10 - 15t + 6t^2)` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

pub fn smoothstep_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Product cutoff equal to 1 on the box shrunk by `width` and 0 outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCutoff<const D: usize> {
    pub cube: Aabb<D>,
    pub width: f64,
}

impl<const D: usize> BoxCutoff<D> {
    pub fn new(cube: Aabb<D>, width: f64) -> Result<Self> {
        if !(width > 0.0) || (0..D).any(|i| 2.0 * width >= cube.width(i)) {
            return Err(Error::Domain(alloc::format!("cutoff width {width} too large for cube")));
        }
        Ok(BoxCutoff { cube, width })
    }

    fn factor(&self, axis: usize, t: f64) -> (f64, f64) {
        let w = self.width;
        let a = (t - self.cube.lo[axis]) / w;
        let b = (self.cube.hi[axis] - t) / w;
        let v = smoothstep(a) * smoothstep(b);
        let d = (smoothstep_deriv(a) * smoothstep(b) - smoothstep(a) * smoothstep_deriv(b)) / w;
        (v, d)
    }

    /// Analytic bound on `|∇φ|`: `(15/8) sqrt(D) / w`.
    pub fn gradient_bound(&self) -> f64 {
        1.875 * (D as f64).sqrt() / self.width
    }
}

impl<const D: usize> TestFunction<D> for BoxCutoff<D> {
    fn eval(&self, x: [f64; D]) -> f64 {
        (0..D).map(|i| self.factor(i, x[i]).0).product()
    }

    fn grad(&self, x: [f64; D]) -> [f64; D] {
        let mut v = [0.0; D];
        let mut d = [0.0; D];
        for i in 0..D {
            let (a, b) = self.factor(i, x[i]);
            v[i] = a;
            d[i] = b;
        }
        let mut g = [0.0; D];
        for i in 0..D {
            g[i] = d[i];
            for k in 0..D {
                if k != i {
                    g[i] *= v[k];
                }
            }
        }
        g
    }

    fn support(&self) -> Aabb<D> {
        self.cube
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = (self.cube.lo[axis], self.cube.hi[axis]);
        vec![lo, lo + self.width, hi - self.width, hi]
    }

    fn integral(&self) -> f64 {
        (0..D).map(|i| self.cube.width(i) - self.width).product()
    }
}

/// Cutoffs of a cube with widths shrinking towards zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFamily<const D: usize> {
    pub cube: Aabb<D>,
    pub widths: Vec<f64>,
}

impl<const D: usize> CutoffFamily<D> {
    pub fn new(cube: Aabb<D>, widths: Vec<f64>) -> Result<Self> {
        if widths.len() < 2 || widths.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Domain("cutoff widths must strictly decrease".into()));
        }
        for &w in &widths {
            BoxCutoff::new(cube, w)?;
        }
        Ok(CutoffFamily { cube, widths })
    }

    /// Widths `L/64, L/128, L/256` with `L` the shortest side.
    pub fn standard(cube: Aabb<D>) -> Self {
        let l = (0..D).map(|i| cube.width(i)).fold(f64::INFINITY, f64::min);
        CutoffFamily { cube, widths: vec![l / 64.0, l / 128.0, l / 256.0] }
    }

    pub fn member(&self, k: usize) -> BoxCutoff<D> {
        BoxCutoff { cube: self.cube, width: self.widths[k] }
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }
}

/// Richardson limit of order `p` from the last two members of a sequence
/// `v(w)` with error `O(w^p)`. The error estimate compares it with the limit
/// from the previous pair, or with the last member when only two are given.
pub fn richardson(widths: &[f64], values: &[f64], p: i32) -> (f64, f64) {
    let n = values.len();
    if n < 2 {
        return (values.last().copied().unwrap_or(0.0), f64::INFINITY);
    }
    let step = |a: usize| {
        let (w1, w2) = (widths[a].powi(p), widths[a + 1].powi(p));
        values[a + 1] + (values[a + 1] - values[a]) * w2 / (w1 - w2)
    };
    let lim = step(n - 2);
    if n >= 3 {
        (lim, (lim - step(n - 3)).abs())
    } else {
        (lim, (lim - values[n - 1]).abs())
    }
}

pub fn richardson_order1(widths: &[f64], values: &[f64]) -> (f64, f64) {
    richardson(widths, values, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Rule1d;

    fn integrate2(f: &impl TestFunction<2>) -> f64 {
        let rx = Rule1d::composite(&f.breakpoints(0), 16);
        let ry = Rule1d::composite(&f.breakpoints(1), 16);
        let mut s = 0.0;
        for (x, wx) in rx.nodes.iter().zip(&rx.weights) {
            for (y, wy) in ry.nodes.iter().zip(&ry.weights) {
                s += wx * wy * f.eval([*x, *y]);
            }
        }
        s
    }

    #[test]
    fn bump_integrals() {
        let b = Bump2::new([0.3, 0.4], 0.2).unwrap();
        let pi = core::f64::consts::PI;
        assert!((b.integral() - pi * 0.04 / 4.0).abs() < 1e-15);
        assert!((integrate2(&b) - b.integral()).abs() < 1e-6);
        let b3 = Bump3::new([0.0; 3], 1.0).unwrap();
        assert!((b3.integral() - 64.0 * pi / 315.0).abs() < 1e-12);
    }

    #[test]
    fn bump_gradient_matches_difference() {
        let b = Bump3::new([0.1, 0.2, 0.3], 0.5).unwrap();
        let x = [0.25, 0.05, 0.4];
        let g = b.grad(x);
        for i in 0..3 {
            let mut p = x;
            let mut m = x;
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let fd = (b.eval(p) - b.eval(m)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn cutoff_shape() {
        let q = Aabb::<2>::unit();
        let c = BoxCutoff::new(q, 0.1).unwrap();
        assert_eq!(c.eval([0.5, 0.5]), 1.0);
        assert_eq!(c.eval([0.0, 0.5]), 0.0);
        assert!((integrate2(&c) - 0.81).abs() < 1e-10);
        assert!((c.integral() - 0.81).abs() < 1e-15);
        let fam = CutoffFamily::standard(q);
        let (a, b) = (fam.member(0), fam.member(2));
        for t in [0.001, 0.004, 0.01, 0.5] {
            assert!(b.eval([t, 0.5]) >= a.eval([t, 0.5]));
        }
        for t in 0..200 {
            let x = [t as f64 / 200.0, 0.37];
            let g = c.grad(x);
            assert!((g[0] * g[0] + g[1] * g[1]).sqrt() <= c.gradient_bound());
        }
    }

    #[test]
    fn richardson_linear_exact() {
        let w = [0.4, 0.2, 0.1];
        let v: Vec<f64> = w.iter().map(|w| 3.0 - 2.0 * w).collect();
        let (lim, err) = richardson_order1(&w, &v);
        assert!((lim - 3.0).abs() < 1e-12 && err < 1e-12, "{lim} {err}");
    }
}
