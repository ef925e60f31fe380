use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::scalar::Real;

/// Exact non-negative rational used for all clock arithmetic.
pub type Rational = Ratio<u64>;

/// Fixed-step simulation clock. Elapsed time is always computed as
/// `frame_index × delta_time × time_scale` in exact arithmetic, never by
/// accumulating floating-point increments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimClock {
    frame_index: u64,
    delta_time: Rational,
    time_scale: Rational,
}

impl Default for SimClock {
    fn default() -> Self {
        SimClock::new(Rational::new(1, 30), Rational::from_integer(1))
    }
}

impl SimClock {
    /// # Panics
    /// If `delta_time` or `time_scale` is zero.
    pub fn new(delta_time: Rational, time_scale: Rational) -> SimClock {
        assert!(*delta_time.numer() > 0, "delta_time must be positive");
        assert!(*time_scale.numer() > 0, "time_scale must be positive");
        SimClock { frame_index: 0, delta_time, time_scale }
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn delta_time(&self) -> Rational {
        self.delta_time
    }

    pub fn time_scale(&self) -> Rational {
        self.time_scale
    }

    /// Simulated seconds covered by one frame (`delta_time × time_scale`).
    pub fn step_seconds(&self) -> Rational {
        self.delta_time * self.time_scale
    }

    /// Exact simulated time since frame 0.
    pub fn sim_time(&self) -> Ratio<u128> {
        let step = self.step_seconds();
        Ratio::new(
            u128::from(self.frame_index) * u128::from(*step.numer()),
            u128::from(*step.denom()),
        )
    }

    pub fn sim_seconds<S: Real>(&self) -> S {
        let t = self.sim_time();
        S::lit(t.numer().to_f64().unwrap_or(f64::INFINITY) / t.denom().to_f64().unwrap_or(1.0))
    }

    pub fn step_seconds_as<S: Real>(&self) -> S {
        let step = self.step_seconds();
        S::lit(*step.numer() as f64 / *step.denom() as f64)
    }

    pub(crate) fn tick(&mut self) -> u64 {
        self.frame_index += 1;
        self.frame_index
    }

    pub(crate) fn rewind(&mut self) {
        self.frame_index = 0;
    }
}
