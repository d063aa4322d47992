use thiserror::Error;

use crate::{Cost, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RatioError {
    #[error("solution cost {cost} is below lower bound {lower_bound}")]
    InconsistentBounds { lower_bound: Cost, cost: Cost },
    #[error("lower bound 0 with positive solution cost {cost}")]
    DegenerateLowerBound { cost: Cost },
}

/// Relative optimality gap `(cost - lower_bound) / lower_bound`.
///
/// A zero lower bound is accepted only for a zero-cost solution, whose ratio
/// is zero.
pub fn suboptimality_ratio<T: Scalar>(lower_bound: Cost, cost: Cost) -> Result<T, RatioError> {
    if cost < lower_bound {
        return Err(RatioError::InconsistentBounds { lower_bound, cost });
    }
    if lower_bound == 0 {
        return if cost == 0 { Ok(T::zero()) } else { Err(RatioError::DegenerateLowerBound { cost }) };
    }
    Ok(T::from_count(cost - lower_bound) / T::from_count(lower_bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExactRatio;
    use proptest::prelude::*;

    #[test]
    fn forty_percent() {
        assert_eq!(suboptimality_ratio::<ExactRatio>(100, 140), Ok(ExactRatio::new(2, 5)));
        assert!((suboptimality_ratio::<f64>(100, 140).unwrap() - 0.40).abs() < 1e-12);
        assert!((suboptimality_ratio::<f32>(100, 140).unwrap() - 0.40).abs() < 1e-6);
    }

    #[test]
    fn edge_cases() {
        assert_eq!(suboptimality_ratio::<f64>(37, 37), Ok(0.0));
        assert_eq!(suboptimality_ratio::<f64>(0, 0), Ok(0.0));
        assert_eq!(
            suboptimality_ratio::<f64>(100, 99),
            Err(RatioError::InconsistentBounds { lower_bound: 100, cost: 99 })
        );
        assert_eq!(suboptimality_ratio::<f64>(0, 3), Err(RatioError::DegenerateLowerBound { cost: 3 }));
    }

    proptest! {
        #[test]
        fn zero_iff_closed(lb in 1u64..10_000, gap in 0u64..10_000) {
            let r: ExactRatio = suboptimality_ratio(lb, lb + gap).unwrap();
            prop_assert_eq!(r == ExactRatio::from_integer(0), gap == 0);
            prop_assert!(r >= ExactRatio::from_integer(0));
        }
    }
}
