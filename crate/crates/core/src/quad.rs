//! Composite Gauss-Legendre rules and Stieltjes partitions on breakpoint lists.

use alloc::vec::Vec;

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, Default)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Five-point Gauss-Legendre on `panels` equal panels of every piece
    /// between consecutive breakpoints.
    pub fn composite(breakpoints: &[f64], panels: usize) -> Self {
        let mut rule = Rule1d::default();
        for piece in breakpoints.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if b <= a {
                continue;
            }
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + h * p as f64;
                let mid = lo + 0.5 * h;
                for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
                    rule.nodes.push(mid + 0.5 * h * x);
                    rule.weights.push(0.5 * h * w);
                }
            }
        }
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Cell edges for Riemann-Stieltjes sums: every piece is split into `cells`
/// equal cells.
pub fn stieltjes_edges(breakpoints: &[f64], cells: usize) -> Vec<f64> {
    let mut edges = Vec::new();
    for piece in breakpoints.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / cells as f64;
        for c in 0..cells {
            let e = a + h * c as f64;
            if edges.last().map_or(true, |&l: &f64| e > l) {
                edges.push(e);
            }
        }
    }
    if let Some(&b) = breakpoints.last() {
        edges.push(b);
    }
    edges
}

/// Sorted, de-duplicated breakpoints clipped to `[lo, hi]`.
pub fn normalize_breakpoints(mut points: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    points.push(lo);
    points.push(hi);
    points.retain(|p| *p >= lo && *p <= hi);
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_integrates_polynomials_exactly() {
        let rule = Rule1d::composite(&[0.0, 0.3, 1.0], 2);
        let v = rule.integrate(|x| x.powi(9));
        assert!((v - 0.1).abs() < 1e-14);
        assert_eq!(rule.len(), 20);
    }

    #[test]
    fn stieltjes_edges_cover_pieces() {
        let e = stieltjes_edges(&[0.0, 0.5, 1.0], 4);
        assert_eq!(e.len(), 9);
        assert_eq!(e[0], 0.0);
        assert_eq!(e[4], 0.5);
        assert_eq!(e[8], 1.0);
    }
}
