//! Pairings `⟨D_k f_a, w⟩` of derivative measures with continuous weights.
//!
//! The absolutely continuous part is integrated by tensor Gauss-Legendre on
//! the weight's breakpoints. Singular profile terms are integrated as
//! Riemann-Stieltjes sums on triadic leaves, pruning leaves that carry no
//! increment, times Gauss-Legendre in the remaining axes.

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::cantor::SingularProfile;
use crate::error::{Error, Result};
use crate::field::{gradient_fd, mollify, sample_map, Aabb, Grid, VectorMap};
use crate::quad::Rule1d;

/// A pairing value with the difference between two quadrature levels.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Estimate { value, err }
    }

    pub fn scale(self, s: f64) -> Self {
        Estimate { value: self.value * s, err: self.err * s.abs() }
    }
}

impl core::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, err: self.err + o.err }
    }
}

impl core::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate { value: self.value - o.value, err: self.err + o.err }
    }
}

/// Quadrature resolution: Gauss-Legendre panels per piece and triadic depth
/// of Stieltjes leaves per piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadLevel {
    pub panels: usize,
    pub depth: u32,
}

impl QuadLevel {
    pub const DEFAULT: QuadLevel = QuadLevel { panels: 3, depth: 6 };

    pub fn refined(self) -> Self {
        QuadLevel { panels: 2 * self.panels, depth: self.depth + 1 }
    }
}

/// `∫ f` over the tensor product of one-dimensional rules.
pub fn tensor_integrate<const N: usize>(rules: &[Rule1d; N], f: &dyn Fn([f64; N]) -> f64) -> f64 {
    let mut sum = 0.0;
    tensor_visit(rules, &mut |x, w| sum += w * f(x));
    sum
}

/// Calls `visit(node, weight)` on every node of the tensor rule.
pub fn tensor_visit<const N: usize>(rules: &[Rule1d; N], visit: &mut dyn FnMut([f64; N], f64)) {
    let mut ext = [0usize; N];
    for i in 0..N {
        ext[i] = rules[i].len();
        if ext[i] == 0 {
            return;
        }
    }
    let total: usize = ext.iter().product();
    for n in 0..total {
        let idx = Grid::<N>::unflat(ext, n);
        let mut x = [0.0; N];
        let mut w = 1.0;
        for i in 0..N {
            x[i] = rules[i].nodes[idx[i]];
            w *= rules[i].weights[idx[i]];
        }
        visit(x, w);
    }
}

/// Triadic leaves of `[a, b]` carrying profile increments, as `(midpoint, Δs)`.
pub fn stieltjes_leaves(profile: &SingularProfile, a: f64, b: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
    let d = profile.increment(a, b);
    if d == 0.0 {
        return;
    }
    if depth == 0 {
        out.push((0.5 * (a + b), d));
        return;
    }
    let h = (b - a) / 3.0;
    stieltjes_leaves(profile, a, a + h, depth - 1, out);
    stieltjes_leaves(profile, a + h, b - h, depth - 1, out);
    stieltjes_leaves(profile, b - h, b, depth - 1, out);
}

/// `⟨D_k f_a, w⟩` at one quadrature level. `breaks[i]` must cover the support
/// of `w` along axis `i`.
pub fn derivative_pairing_at<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    a: usize,
    k: usize,
    weight: &dyn Fn([f64; N]) -> f64,
    breaks: &[Vec<f64>; N],
    level: QuadLevel,
) -> Result<f64> {
    if !map.has_jacobian() {
        return Err(Error::InsufficientData(format!("{} has no derivative decomposition", map.id)));
    }
    let rules: [Rule1d; N] = core::array::from_fn(|i| Rule1d::composite(&breaks[i], level.panels));
    let ac = tensor_integrate(&rules, &|x| match map.jacobian_ac(x) {
        Some(j) => j[a][k] * weight(x),
        None => 0.0,
    });
    let mut sing = 0.0;
    for term in map.singular_terms(a, k) {
        let mut leaves = Vec::new();
        for piece in breaks[k].windows(2) {
            stieltjes_leaves(&term.profile, piece[0], piece[1], level.depth, &mut leaves);
        }
        let mut cross = rules.clone();
        for (t, d) in leaves {
            cross[k] = Rule1d { nodes: alloc::vec![t], weights: alloc::vec![1.0] };
            sing += d * tensor_integrate(&cross, weight);
        }
    }
    Ok(ac + sing)
}

/// `⟨D_k f_a, w⟩` at `level` and at the refined level; the error is their
/// difference.
pub fn derivative_pairing<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    a: usize,
    k: usize,
    weight: &dyn Fn([f64; N]) -> f64,
    breaks: &[Vec<f64>; N],
    level: QuadLevel,
) -> Result<Estimate> {
    let coarse = derivative_pairing_at(map, a, k, weight, breaks, level)?;
    let fine = derivative_pairing_at(map, a, k, weight, breaks, level.refined())?;
    Ok(Estimate::new(fine, (fine - coarse).abs()))
}

/// Level differences below this are treated as round-off.
pub const ABS_FLOOR: f64 = 1e-12;

/// One signed term `sign · ⟨D_k f_a, w⟩` of a combined pairing.
pub type PairingTerm<'a, const N: usize> = (usize, usize, f64, &'a dyn Fn([f64; N]) -> f64);

/// `Σ sign ⟨D_k f_a, w⟩`, refining the quadrature level until two
/// consecutive levels agree to `tol` relative to the largest of the value
/// and the sum of term magnitudes.
pub fn combined_pairing<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    terms: &[PairingTerm<'_, N>],
    breaks: &[Vec<f64>; N],
    tol: f64,
    max_refinements: usize,
) -> Result<Estimate> {
    let at = |level: QuadLevel| -> Result<(f64, f64)> {
        let mut v = 0.0;
        let mut scale = 0.0;
        for &(a, k, s, w) in terms {
            let p = derivative_pairing_at(map, a, k, w, breaks, level)?;
            v += s * p;
            scale += p.abs();
        }
        Ok((v, scale))
    };
    let mut level = QuadLevel::DEFAULT;
    let (mut prev, _) = at(level)?;
    for _ in 0..=max_refinements {
        level = level.refined();
        let (v, scale) = at(level)?;
        let err = (v - prev).abs();
        if err <= tol * v.abs().max(scale) || err <= ABS_FLOOR {
            return Ok(Estimate::new(v, err));
        }
        prev = v;
    }
    Err(Error::Convergence(format!("pairing of {} not Cauchy at {:?}", map.id, level)))
}

/// `⟨D_k f_a, w⟩` with `D f` replaced by the finite-difference gradient of
/// the mollified samples on a grid of spacing `eps / 4` over `support`.
pub fn mollified_derivative_pairing<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    a: usize,
    k: usize,
    weight: &dyn Fn([f64; N]) -> f64,
    support: &Aabb<N>,
    eps: f64,
) -> Result<f64> {
    let field = mollified_grid(map, support, eps)?;
    let jac = gradient_fd(&field);
    let h = field.grid.spacing();
    let mut sum = 0.0;
    for (n, j) in jac.values.iter().enumerate() {
        let idx = Grid::<N>::unflat(field.grid.nodes, n);
        let x = field.grid.node(idx);
        let mut w = 1.0;
        for i in 0..N {
            if idx[i] == 0 || idx[i] == field.grid.nodes[i] - 1 {
                w *= 0.5;
            }
            w *= h[i];
        }
        sum += w * j[a][k] * weight(x);
    }
    Ok(sum)
}

/// Samples `map` on a grid of spacing about `eps / 4` covering `support` after
/// mollification with radius `eps`.
pub fn mollified_grid<const N: usize, const M: usize>(
    map: &VectorMap<N, M>,
    support: &Aabb<N>,
    eps: f64,
) -> Result<crate::field::SampledField<N, M>> {
    let h = eps / 4.0;
    let mut cells = [0usize; N];
    let mut bbox = support.expand(eps);
    for i in 0..N {
        cells[i] = (bbox.width(i) / h).ceil() as usize;
        bbox.hi[i] = bbox.lo[i] + cells[i] as f64 * h;
    }
    if !map.domain.contains_box(&bbox) {
        return Err(Error::Domain(format!("eps collar around {:?} leaves the domain of {}", support, map.id)));
    }
    let grid = Grid::free(bbox, cells)?;
    mollify(&sample_map(map, &grid)?, eps)
}

/// Riemann-Stieltjes sum `Σ u(mid) Δv` over `n` equal cells of `[a, b]`.
pub fn stieltjes_line(u: &dyn Fn(f64) -> f64, v: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut prev = v(a);
    let mut sum = 0.0;
    for c in 0..n {
        let t1 = if c + 1 == n { b } else { a + h * (c + 1) as f64 };
        let next = v(t1);
        sum += u(a + h * (c as f64 + 0.5)) * (next - prev);
        prev = next;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::cantor;
    use crate::gallery;
    use crate::testfn::{Bump, TestFunction};

    #[test]
    fn linear_pairing_is_constant_times_integral() {
        let f = gallery::linear([[1.0, 2.0, 0.5], [0.0, 3.0, 1.0], [4.0, 0.0, 2.0]]);
        let phi = Bump::<3>::new([0.5; 3], 0.3).unwrap();
        let breaks = core::array::from_fn(|i| phi.breakpoints(i));
        let e = derivative_pairing(&f, 0, 1, &|x| phi.eval(x), &breaks, QuadLevel::DEFAULT).unwrap();
        assert!((e.value - 2.0 * phi.integral()).abs() < 1e-6 * phi.integral(), "{e:?}");
    }

    #[test]
    fn cantor_pairing_matches_stieltjes_oracle() {
        // ⟨D_1 f_3, ψ(x1)χ(x2,x3)⟩ for f3 = x3 + c(x1): ∫ψ dc · ∫χ
        let f = gallery::cantor_shear(0);
        let psi = |t: f64| (t * (1.0 - t)).max(0.0);
        let breaks = [alloc::vec![0.0, 1.0], alloc::vec![0.0, 1.0], alloc::vec![0.0, 1.0]];
        let e = derivative_pairing(&f, 2, 0, &|x| psi(x[0]), &breaks, QuadLevel::DEFAULT).unwrap();
        let oracle = stieltjes_line(&psi, &cantor, 0.0, 1.0, 1 << 16);
        assert!((e.value - oracle).abs() < 1e-6, "{} {}", e.value, oracle);
        assert!(e.err < 1e-5);
    }

    #[test]
    fn mollified_matches_analytic_on_smooth_map() {
        let f = gallery::sine_shear(0.3);
        let phi = Bump::<3>::new([0.5; 3], 0.25).unwrap();
        let breaks = core::array::from_fn(|i| phi.breakpoints(i));
        let exact = derivative_pairing(&f, 2, 0, &|x| phi.eval(x), &breaks, QuadLevel::DEFAULT).unwrap();
        let m = mollified_derivative_pairing(&f, 2, 0, &|x| phi.eval(x), &phi.support(), 0.05).unwrap();
        assert!((m - exact.value).abs() < 0.02 * phi.integral(), "{m} {}", exact.value);
    }

    #[test]
    fn stieltjes_line_exact_for_linear() {
        let v = stieltjes_line(&|t| t, &|t| 2.0 * t, 0.0, 1.0, 7);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
