use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Scalar type used throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Pairwise (cascade) summation; error grows like log n instead of n.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub(crate) fn pairwise_sum_by<T: Real>(n: usize, f: impl Fn(usize) -> T + Copy) -> T {
    fn rec<T: Real>(lo: usize, hi: usize, f: impl Fn(usize) -> T + Copy) -> T {
        if hi - lo <= 64 {
            let mut acc = T::zero();
            for i in lo..hi {
                acc = acc + f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_small_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(pairwise_sum_by(1000, |i| (i + 1) as f64), 500500.0);
    }

    #[test]
    fn pairwise_beats_naive_in_f32() {
        let xs = vec![0.1f32; 1 << 20];
        let naive: f32 = xs.iter().fold(0.0, |a, &b| a + b);
        let exact = 0.1f64 * (1 << 20) as f64;
        let pw = pairwise_sum(&xs) as f64;
        assert!((pw - exact).abs() < (naive as f64 - exact).abs());
    }
}
