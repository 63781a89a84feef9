//! Scalar abstraction shared by every weighted computation in the crate.

use std::fmt::Debug;
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A weight scalar: an ordered field that can be built from counts and
/// probed as `f64` for reporting.
///
/// Implemented for `f32`, `f64` and `Ratio<i64>`. Integer types are not
/// fields (average linkage and the greedy scores divide), so they are not
/// accepted; use the rational type for exact arithmetic.
pub trait Weight:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as weight")
    }

    /// Converts a configuration constant. Rationals use a continued-fraction
    /// approximation.
    fn from_real(x: f64) -> Self {
        Self::from_f64(x).expect("finite real representable as weight")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Weight for f32 {}
impl Weight for f64 {}
impl Weight for Ratio<i64> {}

/// Pairwise (cascade) summation. Keeps the float error at O(log n · ε)
/// instead of O(n · ε); exact types are unaffected.
pub fn pairwise_sum<W: Weight>(terms: &[W]) -> W {
    const BLOCK: usize = 32;
    if terms.len() <= BLOCK {
        return terms.iter().copied().fold(W::zero(), |a, b| a + b);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_exact_rational() {
        let terms: Vec<Ratio<i64>> = (1..25).map(|i| Ratio::new(1, i)).collect();
        let seq = terms.iter().copied().fold(Ratio::from_integer(0), |a, b| a + b);
        assert_eq!(pairwise_sum(&terms), seq);
    }

    #[test]
    fn pairwise_sum_is_tighter_than_naive_on_floats() {
        let terms = vec![0.1_f64; 1 << 16];
        let exact = 6553.6_f64;
        assert!((pairwise_sum(&terms) - exact).abs() <= 1e-9);
    }
}
