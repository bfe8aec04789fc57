use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// Virtual simulation time in integer nanoseconds.
///
/// Integer ticks keep event ordering exact; every period in this model
/// (2 ms TTI, 10 ms frame, 20 ms Iub latency) is a whole number of
/// nanoseconds, so same-instant events compare equal instead of drifting
/// apart in floating point.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimTime((s * 1e9).round() as u64)
    }

    pub fn from_millis_f64(ms: f64) -> Self {
        SimTime((ms * 1e6).round() as u64)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Whole number of `other` periods in `self`; used for config checks
    /// like "the frame length is a multiple of the TTI".
    pub fn is_multiple_of(self, other: SimTime) -> bool {
        other.0 != 0 && self.0 % other.0 == 0
    }

    pub const fn mul(self, k: u64) -> SimTime {
        SimTime(self.0 * k)
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Debug for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.as_secs_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(SimTime::from_millis(20).as_nanos(), 20_000_000);
        assert_eq!(SimTime::from_secs_f64(0.002).as_nanos(), 2_000_000);
        assert_eq!(SimTime::from_millis_f64(0.5).as_nanos(), 500_000);
        assert!((SimTime::from_secs(3).as_secs_f64() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn multiples() {
        let tti = SimTime::from_millis(2);
        let frame = SimTime::from_millis(10);
        assert!(frame.is_multiple_of(tti));
        assert!(!SimTime::from_millis(3).is_multiple_of(tti));
        assert!(!frame.is_multiple_of(SimTime::ZERO));
    }
}
