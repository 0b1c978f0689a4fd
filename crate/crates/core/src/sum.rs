//! Compensated summation.
//!
//! Every reduction in the crate (convolutions, spatial integrals, moment
//! sums) goes through [`Neumaier`] in a fixed order, so results are
//! reproducible bit-for-bit and the identity checks at 1e-12 are not
//! swamped by accumulated rounding.

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for Neumaier {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of an iterator, in iteration order.
#[inline]
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Neumaier::new();
    acc.extend(values);
    acc.value()
}

/// Compensated dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// `a + b` rounded toward −∞.
///
/// Used where a running sum must never overshoot the exact sum of its
/// terms (capped partial sums in the weight-sequence constructions).
#[inline]
pub fn add_round_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    // TwoSum: err is the exact rounding error a + b − s.
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(values), 2.0);
        let naive: f64 = values.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn round_down_never_exceeds_exact_sum() {
        // 1 + 2^-60 is not representable; nearest is 1, which is below.
        assert_eq!(add_round_down(1.0, 2f64.powi(-60)), 1.0);
        // 1 − 2^-60 rounds to nearest 1.0, which overshoots; must step down.
        let r = add_round_down(1.0, -(2f64.powi(-60)));
        assert!(r < 1.0);
        assert_eq!(r, 1.0f64.next_down());
        assert_eq!(add_round_down(0.25, 0.5), 0.75);
    }
}
