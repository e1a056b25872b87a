use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of a set of position errors in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub average_m: f64,
    /// Population (n) standard deviation; `rms² = average² + stddev²`.
    pub stddev_m: f64,
    /// Sample (n - 1) standard deviation, zero for a single value.
    pub sample_stddev_m: f64,
    pub rms_m: f64,
    /// Nearest-rank 95th percentile.
    pub p95_m: f64,
    pub max_m: f64,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::EmptyFixSet);
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("non-finite position error".into()));
        }
        let n = errors.len() as f64;
        let average = errors.iter().sum::<f64>() / n;
        let ss: f64 = errors.iter().map(|e| (e - average).powi(2)).sum();
        let mean_sq = errors.iter().map(|e| e * e).sum::<f64>() / n;
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(ErrorStats {
            count: errors.len(),
            average_m: average,
            stddev_m: (ss / n).sqrt(),
            sample_stddev_m: if errors.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 },
            rms_m: mean_sq.sqrt(),
            p95_m: nearest_rank(&sorted, 95.0),
            max_m: sorted[sorted.len() - 1],
        })
    }
}

/// Nearest-rank percentile of an ascending, non-empty slice.
pub fn nearest_rank(sorted: &[f64], percent: f64) -> f64 {
    let n = sorted.len();
    let rank = ((percent / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_errors() {
        let s = ErrorStats::from_errors(&[3.0; 10]).unwrap();
        assert_eq!((s.average_m, s.stddev_m, s.p95_m, s.max_m), (3.0, 0.0, 3.0, 3.0));
        assert_relative_eq!(s.rms_m, 3.0);
    }

    #[test]
    fn p95_of_one_to_hundred() {
        let e: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = ErrorStats::from_errors(&e).unwrap();
        // brute force: smallest value with at least 95% of the set at or below it
        let brute = e.iter().copied().find(|&x| e.iter().filter(|&&y| y <= x).count() * 100 >= 95 * e.len()).unwrap();
        assert_eq!(s.p95_m, brute);
        assert_eq!(s.p95_m, 95.0);
        assert_eq!(s.max_m, 100.0);
    }

    #[test]
    fn population_identity_on_a_table_row() {
        // average 3.7 m with population stddev 1.2 m
        let e = [2.5, 4.9, 2.5, 4.9];
        let s = ErrorStats::from_errors(&e).unwrap();
        assert_relative_eq!(s.average_m, 3.7, epsilon = 1e-12);
        assert_relative_eq!(s.stddev_m, 1.2, epsilon = 1e-12);
        assert_relative_eq!(s.rms_m, (3.7f64 * 3.7 + 1.2 * 1.2).sqrt(), epsilon = 1e-12);
        assert!(s.sample_stddev_m > s.stddev_m);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(ErrorStats::from_errors(&[]), Err(Error::EmptyFixSet)));
    }

    proptest! {
        #[test]
        fn rms_identity_and_ordering(e in proptest::collection::vec(0.0f64..1000.0, 1..200)) {
            let s = ErrorStats::from_errors(&e).unwrap();
            let lhs = s.rms_m * s.rms_m;
            let rhs = s.average_m * s.average_m + s.stddev_m * s.stddev_m;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1e-12));
            prop_assert!(s.p95_m <= s.max_m);
            prop_assert!(s.average_m <= s.max_m + 1e-9);
        }
    }
}
