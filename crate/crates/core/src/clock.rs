//! Monotonic time source abstraction.
//!
//! GP cost accounting needs wall-clock measurements, but the core crate
//! cannot depend on `std::time::Instant`. Callers inject a [`Clock`];
//! hosted code uses [`StdClock`], embedded or deterministic callers use
//! [`NullClock`] (all durations collapse to zero).

use core::time::Duration;

/// Monotonic clock. `now()` values are only meaningful as differences.
pub trait Clock {
    fn now(&self) -> Duration;

    /// Elapsed time since `start`, saturating at zero.
    fn since(&self, start: Duration) -> Duration {
        self.now().saturating_sub(start)
    }
}

/// Clock that always reads zero. Timing-derived metrics become zero;
/// everything else is unaffected.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

/// Monotonic clock backed by [`std::time::Instant`].
#[cfg(feature = "std")]
#[derive(Debug, Clone)]
pub struct StdClock {
    origin: std::time::Instant,
}

#[cfg(feature = "std")]
impl StdClock {
    pub fn new() -> Self {
        Self {
            origin: std::time::Instant::now(),
        }
    }
}

#[cfg(feature = "std")]
impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(feature = "std")]
impl Clock for StdClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_clock_is_frozen() {
        let c = NullClock;
        let t0 = c.now();
        assert_eq!(t0, Duration::ZERO);
        assert_eq!(c.since(t0), Duration::ZERO);
    }

    #[cfg(feature = "std")]
    #[test]
    fn std_clock_is_monotonic() {
        let c = StdClock::new();
        let a = c.now();
        let b = c.now();
        assert!(b >= a);
    }
}
