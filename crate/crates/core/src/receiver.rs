//! Receiver-side message queue.
//!
//! A bounded FIFO with tail drop feeding a single server. Serving a message
//! of `S` payload bytes takes `max(t_base + c_byte * S, 1 / lambda_pc5)`:
//! the per-message processing cost grows with payload size, and the PC5
//! interface never hands over more than `lambda_pc5` messages per second.
//! Large payloads therefore push the effective dispatch rate below
//! `lambda_pc5`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::messages::Packet;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct QueueParams {
    pub capacity_msgs: usize,
    pub t_base: SimTime,
    /// Processing cost per payload byte, in microseconds.
    pub c_byte_us: f64,
    /// Nominal service bound, messages per second.
    pub lambda_pc5: f64,
}

impl Default for QueueParams {
    fn default() -> Self {
        QueueParams {
            capacity_msgs: 16384,
            t_base: SimTime::from_micros(216),
            c_byte_us: 3.2,
            lambda_pc5: 1990.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QueueError {
    #[error("capacity_msgs must be positive")]
    Capacity,
    #[error("t_base must be positive")]
    BaseCost,
    #[error("c_byte must be finite and non-negative, got {0}")]
    ByteCost(f64),
    #[error("lambda_pc5 must be positive and finite, got {0}")]
    Lambda(f64),
}

impl QueueParams {
    pub fn validate(&self) -> Result<(), QueueError> {
        if self.capacity_msgs == 0 {
            return Err(QueueError::Capacity);
        }
        if self.t_base == SimTime::ZERO {
            return Err(QueueError::BaseCost);
        }
        if !self.c_byte_us.is_finite() || self.c_byte_us < 0.0 {
            return Err(QueueError::ByteCost(self.c_byte_us));
        }
        if !self.lambda_pc5.is_finite() || self.lambda_pc5 <= 0.0 {
            return Err(QueueError::Lambda(self.lambda_pc5));
        }
        Ok(())
    }

    /// Shortest service interval the PC5 bound allows, `1 / lambda_pc5`
    /// rounded up to the next microsecond.
    pub fn min_service_interval(&self) -> SimTime {
        SimTime::from_micros((1e6 / self.lambda_pc5 - 1e-9).ceil() as u64)
    }
}

/// `t_base + c_byte * size`.
pub fn processing_time(size: usize, params: &QueueParams) -> SimTime {
    params.t_base + SimTime::from_micros((params.c_byte_us * size as f64).round() as u64)
}

/// Time the server is occupied by a message of `size` bytes.
pub fn service_time(size: usize, params: &QueueParams) -> SimTime {
    processing_time(size, params).max(params.min_service_interval())
}

/// Effective dispatch rate for a stream of `size`-byte messages, msg/s.
pub fn effective_dispatch_rate(size: usize, params: &QueueParams) -> f64 {
    1e6 / service_time(size, params).as_micros() as f64
}

/// Clamped discrete queue balance: `max(0, min(capacity, q + arrivals - departures))`.
pub fn step_balance(q: u64, arrivals: u64, departures: u64, capacity: Option<u64>) -> u64 {
    let raw = (q + arrivals).saturating_sub(departures);
    match capacity {
        Some(cap) => raw.min(cap),
        None => raw,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Accepted,
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub packet: Packet,
    pub enqueued_at: SimTime,
    pub started_at: SimTime,
    pub completed_at: SimTime,
}

/// Queue contents and counters. `arrivals_total` counts every offered
/// message, and `dispatched_total` is incremented when a message leaves
/// the FIFO for the server, so
/// `arrivals_total == dispatched_total + dropped_total + len()` always.
#[derive(Debug)]
pub struct ReceiverQueue {
    params: QueueParams,
    queued: VecDeque<(Packet, SimTime)>,
    pub arrivals_total: u64,
    pub dispatched_total: u64,
    pub dropped_total: u64,
    busy_until: SimTime,
}

impl ReceiverQueue {
    pub fn new(params: QueueParams) -> Result<Self, QueueError> {
        params.validate()?;
        Ok(ReceiverQueue {
            queued: VecDeque::with_capacity(params.capacity_msgs.min(1 << 16)),
            params,
            arrivals_total: 0,
            dispatched_total: 0,
            dropped_total: 0,
            busy_until: SimTime::ZERO,
        })
    }

    pub fn params(&self) -> &QueueParams {
        &self.params
    }

    /// Current number of unprocessed messages waiting for the server.
    pub fn len(&self) -> usize {
        self.queued.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queued.is_empty()
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn is_busy(&self, t: SimTime) -> bool {
        t < self.busy_until
    }

    pub fn enqueue(&mut self, packet: Packet, t: SimTime) -> Admission {
        self.arrivals_total += 1;
        if self.queued.len() >= self.params.capacity_msgs {
            self.dropped_total += 1;
            return Admission::Dropped;
        }
        self.queued.push_back((packet, t));
        Admission::Accepted
    }

    /// Moves the head of the FIFO into service at `t`. `None` when idle.
    pub fn dispatch_next(&mut self, t: SimTime) -> Option<Dispatch> {
        debug_assert!(t >= self.busy_until, "server still busy");
        let (packet, enqueued_at) = self.queued.pop_front()?;
        let completed_at = t + service_time(packet.size(), &self.params);
        self.busy_until = completed_at;
        self.dispatched_total += 1;
        Some(Dispatch {
            packet,
            enqueued_at,
            started_at: t,
            completed_at,
        })
    }

    pub fn conserves(&self) -> bool {
        self.arrivals_total == self.dispatched_total + self.dropped_total + self.queued.len() as u64
    }
}
