//! Window-based fluid model of the PC5 sidelink.
//!
//! Each accounting window admits the first `floor(capacity * window)`
//! packets offered to it; the rest are lost to contention. Admitted packets
//! reach the receiver after a delay drawn uniformly from
//! `[delay_min, delay_max]` by a ChaCha8 generator seeded from the
//! scenario, and each transmitter's packets arrive in the order they were
//! sent. The per-window busy fraction is exported as the channel busy
//! ratio and has no effect on any sender.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::messages::{Origin, Packet};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    /// Packets per second the medium can carry.
    pub airtime_capacity: f64,
    pub delay_min: SimTime,
    pub delay_max: SimTime,
    pub window: SimTime,
    pub seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            airtime_capacity: 4000.0,
            delay_min: SimTime::from_millis(25),
            delay_max: SimTime::from_millis(45),
            window: SimTime::from_millis(100),
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("delay_min {min} exceeds delay_max {max}")]
    DelayBounds { min: SimTime, max: SimTime },
    #[error("airtime capacity must be positive, got {0}")]
    Capacity(f64),
    #[error("accounting window must be positive")]
    Window,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.delay_min > self.delay_max {
            return Err(ChannelError::DelayBounds {
                min: self.delay_min,
                max: self.delay_max,
            });
        }
        if !self.airtime_capacity.is_finite() || self.airtime_capacity <= 0.0 {
            return Err(ChannelError::Capacity(self.airtime_capacity));
        }
        if self.window == SimTime::ZERO {
            return Err(ChannelError::Window);
        }
        Ok(())
    }

    /// Packets per window the medium can carry, `capacity * window`.
    pub fn window_capacity(&self) -> f64 {
        self.airtime_capacity * self.window.as_secs_f64()
    }

    pub fn admitted_per_window(&self) -> u64 {
        (self.window_capacity() + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelWindowStats {
    pub window_start: SimTime,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub busy_fraction: f64,
}

/// `min(1, offered / (capacity * window))`.
pub fn channel_busy_ratio(offered: u64, params: &ChannelParams) -> f64 {
    (offered as f64 / params.window_capacity()).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transmission {
    Delivered(SimTime),
    Dropped,
}

pub struct Channel {
    params: ChannelParams,
    rng: ChaCha8Rng,
    window_index: u64,
    offered: u64,
    delivered: u64,
    last_arrival: [SimTime; 2],
    stats: Vec<ChannelWindowStats>,
}

fn lane(origin: Origin) -> usize {
    match origin {
        Origin::Legit => 0,
        Origin::Attacker => 1,
    }
}

impl Channel {
    pub fn new(params: ChannelParams) -> Result<Self, ChannelError> {
        params.validate()?;
        Ok(Channel {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            params,
            window_index: 0,
            offered: 0,
            delivered: 0,
            last_arrival: [SimTime::ZERO; 2],
            stats: Vec::new(),
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    fn close_windows_before(&mut self, index: u64) {
        while self.window_index < index {
            let window_start = SimTime::from_micros(self.window_index * self.params.window.as_micros());
            self.stats.push(ChannelWindowStats {
                window_start,
                offered: self.offered,
                delivered: self.delivered,
                dropped: self.offered - self.delivered,
                busy_fraction: channel_busy_ratio(self.offered, &self.params),
            });
            self.window_index += 1;
            self.offered = 0;
            self.delivered = 0;
        }
    }

    /// Offers `packet` to the medium at time `t`. Calls must be made in
    /// non-decreasing `t`.
    pub fn transmit(&mut self, packet: &Packet, t: SimTime) -> Transmission {
        let index = t.as_micros() / self.params.window.as_micros();
        debug_assert!(index >= self.window_index, "transmit called out of order");
        self.close_windows_before(index);
        self.offered += 1;
        if self.delivered >= self.params.admitted_per_window() {
            return Transmission::Dropped;
        }
        self.delivered += 1;
        let delay = self
            .rng
            .random_range(self.params.delay_min.as_micros()..=self.params.delay_max.as_micros());
        let slot = &mut self.last_arrival[lane(packet.origin)];
        let at = (t + SimTime::from_micros(delay)).max(*slot);
        *slot = at;
        Transmission::Delivered(at)
    }

    /// Closes every window that starts before `run_end` and returns the
    /// per-window statistics.
    pub fn finish(mut self, run_end: SimTime) -> Vec<ChannelWindowStats> {
        let w = self.params.window.as_micros();
        let last = run_end.as_micros().div_ceil(w).max(self.window_index + 1);
        self.close_windows_before(last);
        self.stats
    }
}
