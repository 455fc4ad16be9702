//! Distributional adjugates of continuous maps `R^3 → R^3`.
//!
//! Indices are zero-based throughout; `(i', i'')` come from
//! [`cyclic`](crate::linalg::cyclic). The integration-by-parts form is
//! `⟨Adj_ij Df, φ⟩ = ⟨D_i' f_j'', f_j' D_i'' φ⟩ - ⟨D_i'' f_j'', f_j' D_i' φ⟩`.

mod slice;

use alloc::format;
use alloc::vec::Vec;

pub use slice::{pairing_slice, SlicedTest};

use crate::error::{Error, Result};
use crate::field::{gradient_fd, Aabb, AnalyticMap, Grid};
use crate::linalg::{cofactor_adjugate, cyclic, Mat3};
use crate::pairing::{
    combined_pairing, mollified_derivative_pairing, mollified_grid, stieltjes_leaves, tensor_visit, Estimate, PairingTerm,
    QuadLevel, ABS_FLOOR,
};
use crate::quad::Rule1d;
use crate::testfn::{richardson, CutoffFamily, TestFunction};

/// Relative Cauchy tolerance of parts pairings.
pub const PARTS_TOL: f64 = 2e-3;
/// Relative tolerance of the mollified extrapolation, against the largest entry.
pub const MOLLIFIED_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum AdjRoute {
    Slicing,
    Parts,
    Mollified,
}

/// One entry `⟨Adj_ij Df, φ⟩` with the schedule that produced it: eps values
/// for mollified routes, the layer count for slicing, empty otherwise.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AdjPairingResult {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub err: f64,
    pub route: AdjRoute,
    pub schedule: Vec<f64>,
    /// Slicing only: layers whose 2D pairing failed, and `Σ |layer| dt`.
    pub failed_layers: usize,
    pub layer_mass: f64,
}

impl AdjPairingResult {
    fn new(i: usize, j: usize, value: f64, err: f64, route: AdjRoute, schedule: Vec<f64>) -> Self {
        AdjPairingResult { i, j, value, err, route, schedule, failed_layers: 0, layer_mass: 0.0 }
    }
}

/// Transposed cofactor matrix, so that `A adj(A) = det(A) I`.
pub fn adj_pointwise(a: Mat3) -> Mat3 {
    cofactor_adjugate(a)
}

fn check_entry(i: usize, j: usize) -> Result<()> {
    if i > 2 || j > 2 {
        return Err(Error::Domain(format!("adjugate entry ({}, {}) out of range", i + 1, j + 1)));
    }
    Ok(())
}

/// Integration-by-parts pairing. Without `eps` the derivative decomposition
/// of `f` is used; with `eps`, `D f_j''` comes from mollified samples at
/// `eps`, `eps/2`, `eps/4`.
pub fn pairing_parts(
    f: &AnalyticMap,
    i: usize,
    j: usize,
    phi: &dyn TestFunction<3>,
    eps: Option<f64>,
) -> Result<AdjPairingResult> {
    check_entry(i, j)?;
    let (i1, i2) = cyclic(i);
    let (j1, j2) = cyclic(j);
    let w1 = |x: [f64; 3]| f.eval(x)[j1] * phi.grad(x)[i2];
    let w2 = |x: [f64; 3]| f.eval(x)[j1] * phi.grad(x)[i1];
    match eps {
        None => {
            let breaks = [phi.breakpoints(0), phi.breakpoints(1), phi.breakpoints(2)];
            let terms: [PairingTerm<'_, 3>; 2] = [(j2, i1, 1.0, &w1), (j2, i2, -1.0, &w2)];
            let e = combined_pairing(f, &terms, &breaks, PARTS_TOL, 2)?;
            Ok(AdjPairingResult::new(i, j, e.value, e.err, AdjRoute::Parts, Vec::new()))
        }
        Some(eps) => {
            let support = phi.support();
            let schedule: Vec<f64> = (0..3).map(|n| eps / (1u32 << n) as f64).collect();
            let mut vals = Vec::with_capacity(3);
            for &e in &schedule {
                vals.push(
                    mollified_derivative_pairing(f, j2, i1, &w1, &support, e)?
                        - mollified_derivative_pairing(f, j2, i2, &w2, &support, e)?,
                );
            }
            let d1 = (vals[1] - vals[0]).abs();
            let d2 = (vals[2] - vals[1]).abs();
            if d2 > d1 && d2 > PARTS_TOL * vals[2].abs() {
                return Err(Error::Convergence(format!("eps sequence {vals:?} is not Cauchy")));
            }
            Ok(AdjPairingResult::new(i, j, vals[2], d2, AdjRoute::Parts, schedule))
        }
    }
}

// Both parts terms of every entry at one level, from a single pass over the
// quadrature nodes.
fn parts_terms_at(f: &AnalyticMap, phi: &dyn TestFunction<3>, breaks: &[Vec<f64>; 3], level: QuadLevel) -> [[[f64; 2]; 3]; 3] {
    let rules: [Rule1d; 3] = core::array::from_fn(|i| Rule1d::composite(&breaks[i], level.panels));
    let mut t = [[[0.0; 2]; 3]; 3];
    tensor_visit(&rules, &mut |x, w| {
        let Some(jac) = f.jacobian_ac(x) else { return };
        let (fx, g) = (f.eval(x), phi.grad(x));
        for (i, row) in t.iter_mut().enumerate() {
            let (i1, i2) = cyclic(i);
            for (j, e) in row.iter_mut().enumerate() {
                let (j1, j2) = cyclic(j);
                e[0] += w * jac[j2][i1] * fx[j1] * g[i2];
                e[1] += w * jac[j2][i2] * fx[j1] * g[i1];
            }
        }
    });
    for term in &f.singular {
        let (a, k) = (term.component, term.axis);
        let mut leaves = Vec::new();
        for piece in breaks[k].windows(2) {
            stieltjes_leaves(&term.profile, piece[0], piece[1], level.depth, &mut leaves);
        }
        let j = (0..3).find(|&j| cyclic(j).1 == a).unwrap();
        let j1 = cyclic(j).0;
        let mut cross = rules.clone();
        for (s, d) in leaves {
            cross[k] = Rule1d { nodes: alloc::vec![s], weights: alloc::vec![1.0] };
            tensor_visit(&cross, &mut |x, w| {
                let (fx, g) = (f.eval(x), phi.grad(x));
                for (i, row) in t.iter_mut().enumerate() {
                    let (i1, i2) = cyclic(i);
                    if i1 == k {
                        row[j][0] += d * w * fx[j1] * g[i2];
                    }
                    if i2 == k {
                        row[j][1] += d * w * fx[j1] * g[i1];
                    }
                }
            });
        }
    }
    t
}

/// [`pairing_parts`] without `eps` for all nine entries at once. Every entry
/// shares the quadrature level, refined until all of them are Cauchy.
pub fn pairing_parts_all(f: &AnalyticMap, phi: &dyn TestFunction<3>) -> Result<[[Estimate; 3]; 3]> {
    if !f.has_jacobian() {
        return Err(Error::InsufficientData(format!("{} has no derivative decomposition", f.id)));
    }
    let breaks = [phi.breakpoints(0), phi.breakpoints(1), phi.breakpoints(2)];
    let mut level = QuadLevel::DEFAULT;
    let mut prev = parts_terms_at(f, phi, &breaks, level);
    for _ in 0..=2 {
        level = level.refined();
        let t = parts_terms_at(f, phi, &breaks, level);
        let mut out = [[Estimate::new(0.0, 0.0); 3]; 3];
        let mut ok = true;
        for i in 0..3 {
            for j in 0..3 {
                let v = t[i][j][0] - t[i][j][1];
                let err = (v - (prev[i][j][0] - prev[i][j][1])).abs();
                let scale = t[i][j][0].abs() + t[i][j][1].abs();
                ok &= err <= PARTS_TOL * v.abs().max(scale) || err <= ABS_FLOOR;
                out[i][j] = Estimate::new(v, err);
            }
        }
        if ok {
            return Ok(out);
        }
        prev = t;
    }
    Err(Error::Convergence(format!("parts pairings of {} not Cauchy at {:?}", f.id, level)))
}

/// `∫ adj(∇f_eps) φ` for every entry, from finite differences of the
/// mollified samples on a grid of spacing `eps/4`.
pub fn mollified_adjugate(f: &AnalyticMap, phi: &dyn TestFunction<3>, eps: f64) -> Result<Mat3> {
    let field = mollified_grid(f, &phi.support(), eps)?;
    let jac = gradient_fd(&field);
    let h = field.grid.spacing();
    let mut out = [[0.0; 3]; 3];
    for (n, jm) in jac.values.iter().enumerate() {
        let idx = Grid::<3>::unflat(field.grid.nodes, n);
        let x = field.grid.node(idx);
        let p = phi.eval(x);
        if p == 0.0 {
            continue;
        }
        let mut w = p;
        for a in 0..3 {
            if idx[a] == 0 || idx[a] == field.grid.nodes[a] - 1 {
                w *= 0.5;
            }
            w *= h[a];
        }
        let adj = cofactor_adjugate(*jm);
        for (row, arow) in out.iter_mut().zip(adj.iter()) {
            for (o, v) in row.iter_mut().zip(arow.iter()) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

/// Mollified pairings for all entries over a decreasing eps schedule,
/// extrapolated with order-2 Richardson.
pub fn pairing_mollified_all(f: &AnalyticMap, phi: &dyn TestFunction<3>, eps: &[f64]) -> Result<[[AdjPairingResult; 3]; 3]> {
    if eps.len() < 2 || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain("eps schedule must strictly decrease".into()));
    }
    let mats: Vec<Mat3> = eps.iter().map(|&e| mollified_adjugate(f, phi, e)).collect::<Result<_>>()?;
    let scale = mats.last().unwrap().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out: [[Option<AdjPairingResult>; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            let vals: Vec<f64> = mats.iter().map(|m| m[i][j]).collect();
            let (lim, err) = richardson(eps, &vals, 2);
            if err > MOLLIFIED_TOL * scale.max(lim.abs()) {
                return Err(Error::Convergence(format!(
                    "mollified entry ({}, {}) of {}: {vals:?}",
                    i + 1,
                    j + 1,
                    f.id
                )));
            }
            out[i][j] = Some(AdjPairingResult::new(i, j, lim, err, AdjRoute::Mollified, eps.to_vec()));
        }
    }
    Ok(out.map(|row| row.map(|e| e.unwrap())))
}

pub fn pairing_mollified(
    f: &AnalyticMap,
    i: usize,
    j: usize,
    phi: &dyn TestFunction<3>,
    eps: &[f64],
) -> Result<AdjPairingResult> {
    check_entry(i, j)?;
    let mut all = pairing_mollified_all(f, phi, eps)?;
    Ok(core::mem::replace(&mut all[i][j], AdjPairingResult::new(i, j, 0.0, 0.0, AdjRoute::Mollified, Vec::new())))
}

/// `Adj Df(Q)` entrywise, with Richardson error estimates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AdjCube {
    pub cube: Aabb<3>,
    pub value: Mat3,
    pub err: Mat3,
    pub widths: Vec<f64>,
}

/// Parts pairings against each cutoff member, extrapolated to zero width.
pub fn adj_cube(f: &AnalyticMap, q: &Aabb<3>, cutoffs: &CutoffFamily<3>) -> Result<AdjCube> {
    crate::verify::screen_cube(f, q)?;
    if cutoffs.cube != *q {
        return Err(Error::Domain("cutoff family belongs to another cube".into()));
    }
    let parts: Vec<[[Estimate; 3]; 3]> =
        (0..cutoffs.len()).map(|k| pairing_parts_all(f, &cutoffs.member(k))).collect::<Result<_>>()?;
    let mut value = [[0.0; 3]; 3];
    let mut err = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut vals = Vec::with_capacity(cutoffs.len());
            let mut qerr = 0.0f64;
            for p in &parts {
                vals.push(p[i][j].value);
                qerr = qerr.max(p[i][j].err);
            }
            let (lim, e) = richardson(&cutoffs.widths, &vals, 1);
            value[i][j] = lim;
            err[i][j] = e + qerr;
        }
    }
    Ok(AdjCube { cube: *q, value, err, widths: cutoffs.widths.clone() })
}

// ∫_{x_face = lo} f_a d_{x_d} f_b - ∫_{x_face = hi} ..., integrated over the
// free axis, for every pair (a, b)
fn face_terms(f: &AnalyticMap, q: &Aabb<3>, face: usize, d: usize, n: usize) -> Mat3 {
    let free = 3 - face - d;
    let hd = q.width(d) / n as f64;
    let hf = q.width(free) / n as f64;
    let mut total = [[0.0; 3]; 3];
    let mut nodes = Vec::with_capacity(n + 1);
    let mut mids = Vec::with_capacity(n);
    for (side, sign) in [(q.lo[face], 1.0), (q.hi[face], -1.0)] {
        for m in 0..n {
            let mut x = [0.0; 3];
            x[face] = side;
            x[free] = q.lo[free] + (m as f64 + 0.5) * hf;
            nodes.clear();
            mids.clear();
            for c in 0..=n {
                x[d] = if c == n { q.hi[d] } else { q.lo[d] + c as f64 * hd };
                nodes.push(f.eval(x));
            }
            for c in 0..n {
                x[d] = q.lo[d] + (c as f64 + 0.5) * hd;
                mids.push(f.eval(x));
            }
            for a in 0..3 {
                for b in 0..3 {
                    let line: f64 = (0..n).map(|c| mids[c][a] * (nodes[c + 1][b] - nodes[c][b])).sum();
                    total[a][b] += sign * line * hf;
                }
            }
        }
    }
    total
}

/// `Adj Df(Q)` as the zero-width limit of the parts pairing: Stieltjes sums
/// `∫ f_j' d f_j''` along `n × n` lines on the faces of `Q`.
pub fn adj_cube_flux(f: &AnalyticMap, q: &Aabb<3>, n: usize) -> Result<Mat3> {
    if !f.domain.contains_box(q) {
        return Err(Error::Domain(format!("cube {q:?} leaves the domain of {}", f.id)));
    }
    if n == 0 {
        return Err(Error::Resolution("flux needs at least one line per face".into()));
    }
    let mut terms: [[Option<Mat3>; 3]; 3] = [[None; 3]; 3];
    let mut term = |face: usize, d: usize| *terms[face][d].get_or_insert_with(|| face_terms(f, q, face, d, n));
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        let (i1, i2) = cyclic(i);
        let t1 = term(i2, i1);
        let t2 = term(i1, i2);
        for j in 0..3 {
            let (j1, j2) = cyclic(j);
            out[i][j] = t1[j1][j2] - t2[j1][j2];
        }
    }
    Ok(out)
}
