//! Integer-microsecond time arithmetic.
//!
//! Every span and instant in the engine is a whole number of microseconds,
//! so millisecond inputs with up to three decimal places (0.3 ms, 1.5 ms)
//! are represented exactly and all scheduling arithmetic stays exact.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

/// A non-negative time span or absolute instant, in whole microseconds.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Duration(u64);

impl Duration {
    pub const ZERO: Duration = Duration(0);
    /// Largest representable instant; used as "unconstrained" sentinel.
    pub const MAX: Duration = Duration(u64::MAX);

    pub const fn from_us(us: u64) -> Self {
        Duration(us)
    }

    pub const fn from_ms(ms: u64) -> Self {
        Duration(ms * 1_000)
    }

    /// Converts a millisecond value that may carry sub-millisecond digits,
    /// rounding to the nearest microsecond (0.3 ms becomes exactly 300 us).
    pub fn from_ms_f64(ms: f64) -> Self {
        assert!(
            ms.is_finite() && ms >= 0.0,
            "time values must be finite and non-negative, got {ms}"
        );
        Duration((ms * 1_000.0).round() as u64)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_add(self, rhs: Duration) -> Duration {
        Duration(self.0.saturating_add(rhs.0))
    }

    pub fn saturating_sub(self, rhs: Duration) -> Duration {
        Duration(self.0.saturating_sub(rhs.0))
    }

    /// `ceil(self / rhs)`, the release-count bound of the response-time
    /// iteration. `rhs` must be nonzero.
    pub fn div_ceil(self, rhs: Duration) -> u64 {
        assert!(!rhs.is_zero(), "division by zero duration");
        self.0.div_ceil(rhs.0)
    }

}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Duration) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

impl SubAssign for Duration {
    fn sub_assign(&mut self, rhs: Duration) {
        self.0 -= rhs.0;
    }
}

impl std::ops::Mul<u64> for Duration {
    type Output = Duration;
    fn mul(self, k: u64) -> Duration {
        Duration(self.0 * k)
    }
}

impl Sum for Duration {
    fn sum<I: Iterator<Item = Duration>>(iter: I) -> Duration {
        iter.fold(Duration::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_milliseconds_are_exact() {
        assert_eq!(Duration::from_ms_f64(0.3).as_us(), 300);
        assert_eq!(Duration::from_ms_f64(1.5).as_us(), 1_500);
        assert_eq!(Duration::from_ms_f64(79.3).as_us(), 79_300);
        assert_eq!(Duration::from_ms_f64(2293.5).as_us(), 2_293_500);
    }

    #[test]
    fn div_ceil_rounds_up() {
        let t = Duration::from_ms(1600);
        assert_eq!(Duration::from_us(1).div_ceil(t), 1);
        assert_eq!(t.div_ceil(t), 1);
        assert_eq!((t + Duration::from_us(1)).div_ceil(t), 2);
        assert_eq!(Duration::ZERO.div_ceil(t), 0);
    }
}
