//! The Cantor function and the middle-thirds Cantor set.

use alloc::vec::Vec;
use num_traits::Float;

/// Ternary digits consumed by [`cantor`]; the truncation error is below `2^-64`.
pub const CANTOR_DIGITS: usize = 64;

/// Cantor function `c` on `R`, extended by 0 left of 0 and by 1 right of 1.
///
/// Evaluated from the ternary expansion of `x`: digits 0/2 become binary
/// digits 0/1 and the first digit 1 terminates the expansion.
pub fn cantor(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut rest = x;
    let mut value = 0.0;
    let mut weight = 0.5;
    for _ in 0..CANTOR_DIGITS {
        rest *= 3.0;
        let digit = rest.floor();
        rest -= digit;
        if digit >= 2.0 {
            value += weight;
        } else if digit >= 1.0 {
            value += weight;
            break;
        }
        if rest == 0.0 {
            break;
        }
        weight *= 0.5;
    }
    value
}

/// Whether `x` lies in the closed level-`depth` approximation of the Cantor set
/// (the union of the `2^depth` retained intervals of length `3^-depth`).
pub fn in_cantor_level(x: f64, depth: usize) -> bool {
    if !(0.0..=1.0).contains(&x) {
        return false;
    }
    let mut rest = x;
    for _ in 0..depth {
        rest *= 3.0;
        if rest <= 1.0 {
            continue;
        }
        if rest >= 2.0 {
            rest -= 2.0;
            continue;
        }
        return false;
    }
    true
}

/// Membership test used for declared singular support; depth 40 resolves
/// points to about `1e-19`.
pub fn in_cantor_set(x: f64) -> bool {
    in_cantor_level(x, 40)
}

/// Left endpoints (as integer multiples of `3^-depth`) of the retained intervals.
pub fn level_intervals(depth: u32) -> Vec<u64> {
    let mut out = alloc::vec![0u64];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(out.len() * 2);
        for &k in &out {
            next.push(3 * k);
            next.push(3 * k + 2);
        }
        out = next;
    }
    out
}

/// A continuous monotone profile whose derivative is a singular measure.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum SingularProfile {
    /// `scale * c((t - offset) / width)`.
    Cantor { scale: f64, offset: f64, width: f64 },
}

impl SingularProfile {
    pub fn cantor(scale: f64) -> Self {
        SingularProfile::Cantor { scale, offset: 0.0, width: 1.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            SingularProfile::Cantor { scale, offset, width } => scale * cantor((t - offset) / width),
        }
    }

    /// Signed mass of `[a, b]`.
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        self.eval(b) - self.eval(a)
    }

    /// Total variation on `[a, b]` (the profile is monotone).
    pub fn variation(&self, a: f64, b: f64) -> f64 {
        self.increment(a, b).abs()
    }

    /// Whether `t` lies in the support of the derivative measure.
    pub fn in_support(&self, t: f64) -> bool {
        match *self {
            SingularProfile::Cantor { offset, width, .. } => in_cantor_set((t - offset) / width),
        }
    }

    /// Whether the support meets the closed interval `[a, b]`.
    pub fn support_meets(&self, a: f64, b: f64) -> bool {
        // a Cantor interval carries mass iff it meets the set
        self.variation(a, b) > 0.0 || self.in_support(a) || self.in_support(b)
    }
}
