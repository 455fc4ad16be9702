use alloc::string::String;
use alloc::vec::Vec;

use crate::area::{finite_area_condition, FiniteAreaReport};
use crate::field::{Aabb, AnalyticMap, Smoothness};

/// `1/p_i + 1/p_j` for one pair of components (one-based), with `1/∞ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    pub sum: f64,
    pub holds: bool,
}

/// The exponent condition over all pairs of distinct components.
pub fn exponent_pairs(p: [f64; 3]) -> Vec<PairCheck> {
    let inv = p.map(|v| if v.is_infinite() { 0.0 } else { 1.0 / v });
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| {
            let sum = inv[i] + inv[j];
            PairCheck { i: i + 1, j: j + 1, sum, holds: sum <= 1.0 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HypothesisReport {
    pub map: String,
    pub exponents: [f64; 3],
    pub pairs: Vec<PairCheck>,
    /// Every pair satisfies `1/p_i + 1/p_j <= 1`.
    pub exponent_condition: bool,
    pub c1_components: usize,
    /// At least two components are `C^1`.
    pub smooth_condition: bool,
    /// Finite-area evidence on slices; not a proof.
    pub area: Option<FiniteAreaReport>,
}

/// Evaluates both antecedents from the smoothness metadata and, when
/// `layers > 0`, gathers finite-area evidence on `region`.
pub fn hypothesis_check(f: &AnalyticMap, region: &Aabb<3>, layers: usize, schedule: &[usize]) -> HypothesisReport {
    let exponents = f.smoothness.map(|s| s.exponent());
    let pairs = exponent_pairs(exponents);
    let c1_components = f.smoothness.iter().filter(|s| **s == Smoothness::C1).count();
    HypothesisReport {
        map: f.id.clone(),
        exponents,
        exponent_condition: pairs.iter().all(|p| p.holds),
        pairs,
        c1_components,
        smooth_condition: c1_components >= 2,
        area: (layers > 0).then(|| finite_area_condition(f, region, layers, schedule)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn exponent_examples() {
        assert!(exponent_pairs([f64::INFINITY, f64::INFINITY, 1.0]).iter().all(|p| p.holds));
        let p = exponent_pairs([2.0, 2.0, 1.0]);
        assert_eq!(p.iter().map(|c| c.holds).collect::<Vec<_>>(), alloc::vec![true, false, false]);
        assert_eq!(p[1].sum, 1.5);
    }

    #[test]
    fn cantor_shear_metadata() {
        let r = hypothesis_check(&gallery::cantor_shear(0), &Aabb::unit(), 0, &[]);
        assert_eq!(r.c1_components, 2);
        assert!(r.smooth_condition && r.exponent_condition && r.area.is_none());
        let s = gallery::with_exponents(gallery::identity(), [2.0, 2.0, 1.0]);
        let r = hypothesis_check(&s, &Aabb::unit(), 0, &[]);
        assert!(!r.exponent_condition && !r.smooth_condition);
    }
}
