//! Trickle timer driving DIO emission.
//!
//! One timer event per interval: at the firing point `t` the node transmits
//! if fewer than `k` consistent DIOs were heard, and the next interval (twice
//! as long, capped at `i_min * 2^doublings`) is laid out right after the
//! current one ends.

use rand::Rng;

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrickleParams {
    pub i_min: SimTime,
    pub i_max_doublings: u32,
    pub k: u32,
}

impl TrickleParams {
    pub fn i_max(&self) -> SimTime {
        SimTime::from_micros(self.i_min.as_micros().saturating_mul(1u64 << self.i_max_doublings.min(40)))
    }
}

impl Default for TrickleParams {
    fn default() -> Self {
        TrickleParams { i_min: SimTime::from_secs(4), i_max_doublings: 8, k: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrickleState {
    pub params: TrickleParams,
    pub interval: SimTime,
    pub interval_start: SimTime,
    /// Absolute firing time inside the current interval.
    pub t: SimTime,
    pub counter: u32,
}

fn draw_t<R: Rng + ?Sized>(start: SimTime, interval: SimTime, rng: &mut R) -> SimTime {
    let i = interval.as_micros();
    let half = i / 2;
    let offset = if i > half { rng.random_range(half..i) } else { half };
    start + SimTime::from_micros(offset)
}

impl TrickleState {
    pub fn start<R: Rng + ?Sized>(params: TrickleParams, now: SimTime, rng: &mut R) -> Self {
        TrickleState {
            params,
            interval: params.i_min,
            interval_start: now,
            t: draw_t(now, params.i_min, rng),
            counter: 0,
        }
    }

    pub fn hear_consistent(&mut self) {
        self.counter = self.counter.saturating_add(1);
    }

    /// Evaluates the firing point. Returns whether to transmit and the state
    /// for the following interval.
    pub fn step<R: Rng + ?Sized>(&self, now: SimTime, rng: &mut R) -> (bool, TrickleState) {
        debug_assert!(now >= self.t, "trickle stepped before its firing point");
        let fire = self.counter < self.params.k;
        let next_start = self.interval_start + self.interval;
        let doubled = SimTime::from_micros(self.interval.as_micros().saturating_mul(2));
        let interval = doubled.min(self.params.i_max());
        let next = TrickleState {
            params: self.params,
            interval,
            interval_start: next_start,
            t: draw_t(next_start, interval, rng),
            counter: 0,
        };
        (fire, next)
    }

    /// Inconsistency: back to `i_min` starting now.
    pub fn reset<R: Rng + ?Sized>(&self, now: SimTime, rng: &mut R) -> TrickleState {
        TrickleState::start(self.params, now, rng)
    }
}
