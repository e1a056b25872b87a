use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear map over sorted knots, clamped outside the knot range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("piecewise-linear map needs at least one knot".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidParameter("piecewise-linear knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("piecewise-linear knots must have strictly increasing x".into()));
        }
        Ok(PiecewiseLinear { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if x >= last.0 {
            return last.1;
        }
        let i = k.partition_point(|&(kx, _)| kx <= x);
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.knots.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseLinear {
    type Error = Error;
    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        PiecewiseLinear::new(knots)
    }
}

impl From<PiecewiseLinear> for Vec<(f64, f64)> {
    fn from(p: PiecewiseLinear) -> Self {
        p.knots
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolates_and_clamps() {
        let m = PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 1.0), (3.0, 5.0)]).unwrap();
        assert_eq!(m.eval(-1.0), 1.0);
        assert_eq!(m.eval(0.5), 1.0);
        assert_eq!(m.eval(2.0), 3.0);
        assert_eq!(m.eval(3.0), 5.0);
        assert_eq!(m.eval(10.0), 5.0);
        assert!(m.is_non_decreasing());
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PiecewiseLinear::new(vec![]).is_err());
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (1.0, 2.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, f64::NAN)]).is_err());
        let parsed: std::result::Result<PiecewiseLinear, _> = serde_json::from_str("[[2.0, 1.0], [1.0, 1.0]]");
        assert!(parsed.is_err());
    }

    proptest! {
        #[test]
        fn monotone_knots_give_monotone_map(
            ys in proptest::collection::vec(0.0f64..10.0, 2..8),
            a in -1.0f64..10.0, b in -1.0f64..10.0,
        ) {
            let mut acc = 0.0;
            let knots: Vec<_> = ys.iter().enumerate().map(|(i, y)| { acc += y; (i as f64, acc) }).collect();
            let m = PiecewiseLinear::new(knots).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.eval(lo) <= m.eval(hi) + 1e-12);
        }
    }
}
