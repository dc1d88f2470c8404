//! One-dimensional constant-velocity motion for the two-vehicle approach.
//!
//! Positions are integer nanometres and speeds integer millimetres per
//! second, so `speed * dt` in microseconds is an exact displacement in
//! nanometres and repeated small steps never drift from one large step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleId {
    /// Follower, approaching from behind.
    A,
    /// Lead vehicle.
    B,
    /// Adversarial node injecting flood traffic.
    Attacker,
}

impl VehicleId {
    pub fn code(self) -> u8 {
        match self {
            VehicleId::A => b'A',
            VehicleId::B => b'B',
            VehicleId::Attacker => b'X',
        }
    }

    pub fn from_code(code: u8) -> Option<VehicleId> {
        match code {
            b'A' => Some(VehicleId::A),
            b'B' => Some(VehicleId::B),
            b'X' => Some(VehicleId::Attacker),
            _ => None,
        }
    }
}

const NM_PER_M: f64 = 1e9;
const MM_PER_M: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VehicleState {
    pub id: VehicleId,
    position_nm: i64,
    speed_mm_s: u64,
    pub braking: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("follower is {0:.3} m ahead of the lead vehicle")]
    PassedLead(f64),
    #[error("speed must be finite and non-negative, got {0}")]
    InvalidSpeed(f64),
}

impl VehicleState {
    pub fn new(id: VehicleId, position_m: f64, speed_mps: f64) -> Result<Self, KinematicsError> {
        if !speed_mps.is_finite() || speed_mps < 0.0 {
            return Err(KinematicsError::InvalidSpeed(speed_mps));
        }
        Ok(VehicleState {
            id,
            position_nm: (position_m * NM_PER_M).round() as i64,
            speed_mm_s: (speed_mps * MM_PER_M).round() as u64,
            braking: false,
        })
    }

    pub fn from_raw(id: VehicleId, position_nm: i64, speed_mm_s: u64) -> Self {
        VehicleState {
            id,
            position_nm,
            speed_mm_s,
            braking: false,
        }
    }

    pub fn position_m(&self) -> f64 {
        self.position_nm as f64 / NM_PER_M
    }

    pub fn position_nm(&self) -> i64 {
        self.position_nm
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_mm_s as f64 / MM_PER_M
    }

    pub fn speed_mm_s(&self) -> u64 {
        self.speed_mm_s
    }

    /// Constant-velocity step; speed and braking flag are unchanged.
    pub fn advance(&self, dt: SimTime) -> VehicleState {
        let moved = self.speed_mm_s as i64 * dt.as_micros() as i64;
        VehicleState {
            position_nm: self.position_nm + moved,
            ..*self
        }
    }
}

/// Distance from follower `a` to lead `b` in metres.
pub fn gap(a: &VehicleState, b: &VehicleState) -> Result<f64, KinematicsError> {
    let d = b.position_nm - a.position_nm;
    if d < 0 {
        return Err(KinematicsError::PassedLead(-d as f64 / NM_PER_M));
    }
    Ok(d as f64 / NM_PER_M)
}

/// Instant after which the time-to-collision stays strictly below
/// `threshold_s`, for a follower closing on a lead from initial gap `d0_m`.
/// `None` when the vehicles never close.
pub fn ground_truth_ttc_crossing(
    d0_m: f64,
    v_a: f64,
    v_b: f64,
    threshold_s: f64,
) -> Option<SimTime> {
    assert!(threshold_s > 0.0, "threshold must be positive");
    let closing = v_a - v_b;
    if closing <= 0.0 {
        return None;
    }
    let t = (d0_m - threshold_s * closing) / closing;
    Some(SimTime::from_secs_f64(t.max(0.0)))
}

/// Ground-truth state of a vehicle at absolute time `t`, given its state
/// at time zero.
#[derive(Debug, Clone, Copy)]
pub struct Track {
    pub initial: VehicleState,
}

impl Track {
    pub fn new(initial: VehicleState) -> Self {
        Track { initial }
    }

    pub fn at(&self, t: SimTime) -> VehicleState {
        self.initial.advance(t)
    }
}
