//! Scalar abstraction for ratios and percentages.

use std::fmt::Debug;

use num_rational::Ratio;

/// Field-like scalar used for ratios: f32, f64 or an exact rational.
pub trait Scalar: num_traits::Num + Copy + PartialOrd + Debug + Send + Sync {
    fn from_count(n: u64) -> Self;
    fn to_f64(self) -> f64;

    /// `part / whole * 100`, or zero when `whole` is zero.
    fn percent(part: u64, whole: u64) -> Self {
        if whole == 0 {
            return Self::zero();
        }
        Self::from_count(100) * Self::from_count(part) / Self::from_count(whole)
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64 range"))
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}
