//! Logarithmic-kernel potentials `Φ = K ∗ η` with `div Φ = η`.

use alloc::format;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::Aabb;
use crate::testfn::{Bump2, TestFunction};

/// A planar vector field `Φ` together with its divergence `η`.
pub trait DivergenceField: Sync {
    fn phi(&self, y: [f64; 2]) -> [f64; 2];
    fn eta(&self, y: [f64; 2]) -> f64;
    /// Box outside which `η` vanishes; `None` when `η` is not localized.
    fn eta_support(&self) -> Option<Aabb<2>>;
}

/// `Φ(y) = (y1, 0)`, the field whose divergence is 1 everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitDivergence;

impl DivergenceField for UnitDivergence {
    fn phi(&self, y: [f64; 2]) -> [f64; 2] {
        [y[0], 0.0]
    }

    fn eta(&self, _: [f64; 2]) -> f64 {
        1.0
    }

    fn eta_support(&self) -> Option<Aabb<2>> {
        None
    }
}

/// `K ∗ η` for `K(x) = x / (2π|x|²)`, evaluated by the midpoint rule on a
/// cell grid over the support of `η`. Cells near the evaluation point use the
/// exact integral of `K` over the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub eta: Bump2,
    pub radius: f64,
    pub cells: usize,
}

const NEAR: i64 = 2;

// ∫∫ u / (u² + v²) du dv = G(u, v) / 2
fn g_anti(u: f64, v: f64) -> f64 {
    let r2 = u * u + v * v;
    let log = if r2 > 0.0 { v * r2.ln() } else { 0.0 };
    let at = if u != 0.0 { 2.0 * u * (v / u).atan() } else { 0.0 };
    0.5 * (log - 2.0 * v + at)
}

/// `∫_{cell} K(x - y) dy` exactly.
pub fn kernel_cell_integral(x: [f64; 2], cell: &Aabb<2>) -> [f64; 2] {
    let u = [x[0] - cell.hi[0], x[0] - cell.lo[0]];
    let v = [x[1] - cell.hi[1], x[1] - cell.lo[1]];
    let mixed = |f: &dyn Fn(f64, f64) -> f64| f(u[1], v[1]) - f(u[0], v[1]) - f(u[1], v[0]) + f(u[0], v[0]);
    let a = mixed(&|p, q| g_anti(p, q));
    let b = mixed(&|p, q| g_anti(q, p));
    [a / (2.0 * PI), b / (2.0 * PI)]
}

impl KernelField {
    pub fn new(eta: Bump2, radius: f64) -> Result<Self> {
        Self::with_cells(eta, radius, 64)
    }

    pub fn with_cells(eta: Bump2, radius: f64, cells: usize) -> Result<Self> {
        let r = (eta.center[0].powi(2) + eta.center[1].powi(2)).sqrt() + eta.radius;
        if r > radius {
            return Err(Error::Domain(format!("bump support reaches |x| = {r} > R = {radius}")));
        }
        if cells < 4 {
            return Err(Error::Resolution(format!("kernel grid of {cells} cells")));
        }
        Ok(KernelField { eta, radius, cells })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.eta.radius / self.cells as f64
    }

    pub fn eval(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let h = self.spacing();
        let lo = [self.eta.center[0] - self.eta.radius, self.eta.center[1] - self.eta.radius];
        let ix = ((x[0] - lo[0]) / h).floor() as i64;
        let iy = ((x[1] - lo[1]) / h).floor() as i64;
        let mut out = [0.0; 2];
        for i in 0..self.cells {
            for j in 0..self.cells {
                let c = [lo[0] + (i as f64 + 0.5) * h, lo[1] + (j as f64 + 0.5) * h];
                let e = self.eta.eval(c);
                if e == 0.0 {
                    continue;
                }
                let k = if (i as i64 - ix).abs() <= NEAR && (j as i64 - iy).abs() <= NEAR {
                    let cell = Aabb {
                        lo: [lo[0] + i as f64 * h, lo[1] + j as f64 * h],
                        hi: [lo[0] + (i + 1) as f64 * h, lo[1] + (j + 1) as f64 * h],
                    };
                    kernel_cell_integral(x, &cell)
                } else {
                    let d = [x[0] - c[0], x[1] - c[1]];
                    let r2 = d[0] * d[0] + d[1] * d[1];
                    let s = h * h / (2.0 * PI * r2);
                    [d[0] * s, d[1] * s]
                };
                out[0] += e * k[0];
                out[1] += e * k[1];
            }
        }
        if !(out[0].is_finite() && out[1].is_finite()) {
            return Err(Error::Resolution(format!("kernel quadrature at {x:?} is not finite")));
        }
        Ok(out)
    }

    /// Central-difference divergence with step `step`.
    pub fn divergence(&self, x: [f64; 2], step: f64) -> Result<f64> {
        let px = self.eval([x[0] + step, x[1]])?;
        let mx = self.eval([x[0] - step, x[1]])?;
        let py = self.eval([x[0], x[1] + step])?;
        let my = self.eval([x[0], x[1] - step])?;
        Ok((px[0] - mx[0] + py[1] - my[1]) / (2.0 * step))
    }

    /// `‖Φ‖_∞ / (R^{1/2} ‖η‖_{L³})` over the given points.
    pub fn sup_ratio(&self, points: &[[f64; 2]]) -> Result<f64> {
        let mut sup = 0.0f64;
        for &p in points {
            let v = self.eval(p)?;
            sup = sup.max((v[0] * v[0] + v[1] * v[1]).sqrt());
        }
        let l3 = self.eta.power_integral(3.0).cbrt();
        Ok(sup / (self.radius.sqrt() * l3))
    }
}

impl DivergenceField for KernelField {
    fn phi(&self, y: [f64; 2]) -> [f64; 2] {
        self.eval(y).unwrap_or([f64::NAN; 2])
    }

    fn eta(&self, y: [f64; 2]) -> f64 {
        self.eta.eval(y)
    }

    fn eta_support(&self) -> Option<Aabb<2>> {
        Some(self.eta.support())
    }
}

/// Builds the kernel field of `η`, which must be supported in `B(0, R)`.
pub fn kernel_field(eta: Bump2, radius: f64) -> Result<KernelField> {
    KernelField::new(eta, radius)
}
