//! Time offsets and the additive clock-error chain.
//!
//! Every offset is an exact signed nanosecond count. Seconds are the semantic
//! unit; conversions to and from floating point round to the nearest
//! nanosecond.
//!
//! The system clock error of a simulator is the sum of three components:
//!
//! | Component   | Meaning                                            |
//! |-------------|----------------------------------------------------|
//! | `delta_sim` | delay inside the signal simulation process         |
//! | `delta_ntp` | sync error between reference server and simulator  |
//! | `delta_ref` | reference timing receiver error against GPS time   |

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const NANOS_PER_SEC: i64 = 1_000_000_000;
pub const NANOS_PER_MILLI: i64 = 1_000_000;
pub const NANOS_PER_MICRO: i64 = 1_000;

/// Signed time offset (or duration) at nanosecond resolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeOffset(i64);

impl TimeOffset {
    pub const ZERO: TimeOffset = TimeOffset(0);
    pub const MAX: TimeOffset = TimeOffset(i64::MAX);

    pub const fn from_nanos(ns: i64) -> Self {
        TimeOffset(ns)
    }

    pub const fn from_micros(us: i64) -> Self {
        TimeOffset(us * NANOS_PER_MICRO)
    }

    pub const fn from_millis(ms: i64) -> Self {
        TimeOffset(ms * NANOS_PER_MILLI)
    }

    pub const fn from_secs(s: i64) -> Self {
        TimeOffset(s * NANOS_PER_SEC)
    }

    /// Rounds to the nearest nanosecond.
    pub fn from_secs_f64(s: f64) -> Self {
        TimeOffset((s * NANOS_PER_SEC as f64).round() as i64)
    }

    pub fn from_millis_f64(ms: f64) -> Self {
        TimeOffset((ms * NANOS_PER_MILLI as f64).round() as i64)
    }

    pub const fn as_nanos(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }

    pub fn as_millis_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_MILLI as f64
    }

    pub const fn abs(self) -> Self {
        TimeOffset(self.0.abs())
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn checked_add(self, rhs: TimeOffset) -> Option<TimeOffset> {
        self.0.checked_add(rhs.0).map(TimeOffset)
    }

    /// Smallest multiple of `step` that is `>= self`. `step` must be positive.
    pub fn ceil_to(self, step: TimeOffset) -> TimeOffset {
        debug_assert!(step.0 > 0);
        let q = self.0.div_euclid(step.0);
        let r = self.0.rem_euclid(step.0);
        TimeOffset(if r == 0 { q * step.0 } else { (q + 1) * step.0 })
    }
}

impl Add for TimeOffset {
    type Output = TimeOffset;
    fn add(self, rhs: TimeOffset) -> TimeOffset {
        TimeOffset(self.0 + rhs.0)
    }
}

impl AddAssign for TimeOffset {
    fn add_assign(&mut self, rhs: TimeOffset) {
        self.0 += rhs.0;
    }
}

impl Sub for TimeOffset {
    type Output = TimeOffset;
    fn sub(self, rhs: TimeOffset) -> TimeOffset {
        TimeOffset(self.0 - rhs.0)
    }
}

impl SubAssign for TimeOffset {
    fn sub_assign(&mut self, rhs: TimeOffset) {
        self.0 -= rhs.0;
    }
}

impl Neg for TimeOffset {
    type Output = TimeOffset;
    fn neg(self) -> TimeOffset {
        TimeOffset(-self.0)
    }
}

impl Mul<i64> for TimeOffset {
    type Output = TimeOffset;
    fn mul(self, rhs: i64) -> TimeOffset {
        TimeOffset(self.0 * rhs)
    }
}

impl Sum for TimeOffset {
    fn sum<I: Iterator<Item = TimeOffset>>(iter: I) -> TimeOffset {
        iter.fold(TimeOffset::ZERO, Add::add)
    }
}

impl fmt::Display for TimeOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ms", self.as_millis_f64())
    }
}

/// The three additive clock error components of one simulator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockChain {
    pub delta_sim: TimeOffset,
    pub delta_ntp: TimeOffset,
    pub delta_ref: TimeOffset,
}

impl ClockChain {
    pub fn new(delta_sim: TimeOffset, delta_ntp: TimeOffset, delta_ref: TimeOffset) -> Self {
        ClockChain { delta_sim, delta_ntp, delta_ref }
    }

    pub fn total(&self) -> TimeOffset {
        compose_clock_error(self)
    }
}

/// Simulated-satellite time minus GPS time: the exact sum of the chain.
pub fn compose_clock_error(chain: &ClockChain) -> TimeOffset {
    chain.delta_sim + chain.delta_ntp + chain.delta_ref
}

/// Maximum tolerated system clock error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TimeOffset")]
pub struct ErrorBudget {
    limit: TimeOffset,
}

impl ErrorBudget {
    pub fn new(limit: TimeOffset) -> Result<Self, Error> {
        if limit <= TimeOffset::ZERO {
            return Err(Error::InvalidParameter(format!("error budget must be positive, got {limit}")));
        }
        Ok(ErrorBudget { limit })
    }

    pub fn limit(&self) -> TimeOffset {
        self.limit
    }
}

impl TryFrom<TimeOffset> for ErrorBudget {
    type Error = Error;
    fn try_from(limit: TimeOffset) -> Result<Self, Error> {
        ErrorBudget::new(limit)
    }
}

impl Default for ErrorBudget {
    /// 50 ms: fast reacquisition and position accuracy stay close to the
    /// zero-error case within this bound.
    fn default() -> Self {
        ErrorBudget { limit: TimeOffset::from_millis(50) }
    }
}

/// `|error| <= limit`, inclusive on both signs.
pub fn within_budget(error: TimeOffset, budget: &ErrorBudget) -> bool {
    error.abs() <= budget.limit
}

/// Serde adapter: a `TimeOffset` written as floating-point seconds.
pub mod secs {
    use super::TimeOffset;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &TimeOffset, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(t.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TimeOffset, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(serde::de::Error::custom("duration must be finite"));
        }
        Ok(TimeOffset::from_secs_f64(v))
    }
}

/// Serde adapter: a `TimeOffset` written as floating-point milliseconds.
pub mod millis {
    use super::TimeOffset;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &TimeOffset, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(t.as_millis_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TimeOffset, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(serde::de::Error::custom("offset must be finite"));
        }
        Ok(TimeOffset::from_millis_f64(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(v: i64) -> TimeOffset {
        TimeOffset::from_millis(v)
    }

    #[test]
    fn compose_examples() {
        assert_eq!(ClockChain::default().total(), TimeOffset::ZERO);

        let chain = ClockChain::new(ms(30), ms(20), TimeOffset::from_nanos(200));
        assert_eq!(chain.total(), TimeOffset::from_nanos(50_000_200));
        assert!((chain.total().as_millis_f64() - 50.0002).abs() < 1e-12);

        let chain = ClockChain::new(ms(-5), ms(3), ms(1));
        assert_eq!(compose_clock_error(&chain), ms(-1));
    }

    #[test]
    fn budget_examples() {
        let b = ErrorBudget::default();
        assert_eq!(b.limit(), ms(50));
        assert!(within_budget(ms(49), &b));
        assert!(within_budget(ms(-50), &b));
        assert!(within_budget(ms(50), &b));
        assert!(!within_budget(ms(75), &b));
        assert!(!within_budget(TimeOffset::from_nanos(50_000_001), &b));
    }

    #[test]
    fn budget_rejects_non_positive() {
        assert!(ErrorBudget::new(TimeOffset::ZERO).is_err());
        assert!(ErrorBudget::new(ms(-1)).is_err());
        let parsed: Result<ErrorBudget, _> = serde_json::from_str("-5");
        assert!(parsed.is_err());
    }

    #[test]
    fn range_covers_a_million_seconds() {
        let big = TimeOffset::from_secs(1_000_000);
        assert_eq!((big + big - big).as_nanos(), 1_000_000 * NANOS_PER_SEC);
        assert_eq!((-big).as_secs_f64(), -1.0e6);
    }

    #[test]
    fn ceil_to_quantizes_up() {
        let dt = ms(100);
        assert_eq!(ms(400).ceil_to(dt), ms(400));
        assert_eq!(ms(401).ceil_to(dt), ms(500));
        assert_eq!(TimeOffset::ZERO.ceil_to(dt), TimeOffset::ZERO);
    }

    #[test]
    fn float_conversion_rounds_to_nearest_nanosecond() {
        assert_eq!(TimeOffset::from_secs_f64(1.5e-9).as_nanos(), 2);
        assert_eq!(TimeOffset::from_millis_f64(0.25).as_nanos(), 250_000);
    }

    fn offset() -> impl Strategy<Value = TimeOffset> {
        (-1_000_000_000_000_000i64..1_000_000_000_000_000).prop_map(TimeOffset::from_nanos)
    }

    proptest! {
        #[test]
        fn addition_is_exact_and_commutative(a in offset(), b in offset(), c in offset()) {
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a + b, b + a);
        }

        #[test]
        fn compose_is_linear(a in offset(), b in offset(), c in offset(), x in offset()) {
            let base = ClockChain::new(a, b, c).total();
            prop_assert_eq!(ClockChain::new(a + x, b, c).total(), base + x);
            prop_assert_eq!(ClockChain::new(a, b + x, c).total(), base + x);
            prop_assert_eq!(ClockChain::new(a, b, c + x).total(), base + x);
        }

        #[test]
        fn compose_is_permutation_invariant(a in offset(), b in offset(), c in offset()) {
            let t = ClockChain::new(a, b, c).total();
            prop_assert_eq!(ClockChain::new(a, c, b).total(), t);
            prop_assert_eq!(ClockChain::new(b, a, c).total(), t);
            prop_assert_eq!(ClockChain::new(b, c, a).total(), t);
            prop_assert_eq!(ClockChain::new(c, a, b).total(), t);
            prop_assert_eq!(ClockChain::new(c, b, a).total(), t);
        }

        #[test]
        fn budget_is_sign_symmetric(e in offset(), lim in 1i64..10_000_000_000) {
            let b = ErrorBudget::new(TimeOffset::from_nanos(lim)).unwrap();
            prop_assert_eq!(within_budget(e, &b), within_budget(-e, &b));
        }
    }
}
