//! Forward collision warning application.
//!
//! Each processed BSM from the watched vehicle yields a time-to-collision
//! estimate from the message's reported position and speed against the
//! host's own true state. The warning latches the first time the estimate
//! drops strictly below the threshold.

use serde::{Deserialize, Serialize};

use crate::kinematics::{VehicleId, VehicleState};
use crate::messages::Bsm;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcwConfig {
    #[serde(rename = "ttc_threshold_s")]
    pub ttc_threshold: f64,
    #[serde(rename = "critical_zone_m")]
    pub critical_zone: f64,
    /// Allowed lag between ground-truth crossing and the warning for it to
    /// count as timely.
    #[serde(rename = "grace_s")]
    pub grace: f64,
}

impl Default for FcwConfig {
    fn default() -> Self {
        FcwConfig {
            ttc_threshold: 3.0,
            critical_zone: 30.0,
            grace: 0.5,
        }
    }
}

impl FcwConfig {
    pub fn is_valid(&self) -> bool {
        [self.ttc_threshold, self.critical_zone, self.grace]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }

    /// Follower speed at which the threshold distance equals the critical zone.
    pub fn approach_speed(&self) -> f64 {
        self.critical_zone / self.ttc_threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlertClass {
    Timely,
    Delayed,
    Missed,
}

impl AlertClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AlertClass::Timely => "timely",
            AlertClass::Delayed => "delayed",
            AlertClass::Missed => "missed",
        }
    }
}

impl std::fmt::Display for AlertClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AlertClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "timely" => Ok(AlertClass::Timely),
            "delayed" => Ok(AlertClass::Delayed),
            "missed" => Ok(AlertClass::Missed),
            other => Err(format!("unknown alert class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlertRecord {
    pub trigger_time: Option<SimTime>,
    pub last_valid_bsm_time: Option<SimTime>,
}

impl AlertRecord {
    pub fn triggered(&self) -> bool {
        self.trigger_time.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcwAction {
    AlertRaised,
    NoAction,
}

/// `d / (v_a - v_b)` for a follower at `v_a` behind a lead at `v_b`;
/// infinite when the gap is not closing.
pub fn ttc(d: f64, v_a: f64, v_b: f64) -> f64 {
    let closing = v_a - v_b;
    if closing > 0.0 {
        d / closing
    } else {
        f64::INFINITY
    }
}

/// TTC between the host and a remote vehicle, whichever is behind.
pub fn relative_ttc(own_position: f64, own_speed: f64, remote_position: f64, remote_speed: f64) -> f64 {
    if remote_position <= own_position {
        ttc(own_position - remote_position, remote_speed, own_speed)
    } else {
        ttc(remote_position - own_position, own_speed, remote_speed)
    }
}

#[derive(Debug, Clone)]
pub struct Fcw {
    cfg: FcwConfig,
    watched: VehicleId,
    record: AlertRecord,
}

impl Fcw {
    pub fn new(cfg: FcwConfig, watched: VehicleId) -> Self {
        Fcw {
            cfg,
            watched,
            record: AlertRecord::default(),
        }
    }

    pub fn record(&self) -> AlertRecord {
        self.record
    }

    pub fn config(&self) -> &FcwConfig {
        &self.cfg
    }

    pub fn on_bsm(&mut self, bsm: &Bsm, receive_time: SimTime, own: &VehicleState) -> FcwAction {
        if bsm.sender != self.watched {
            return FcwAction::NoAction;
        }
        self.record.last_valid_bsm_time = Some(receive_time);
        if self.record.triggered() {
            return FcwAction::NoAction;
        }
        let estimate = relative_ttc(own.position_m(), own.speed_mps(), bsm.road_position_m(), bsm.speed_mps());
        if estimate < self.cfg.ttc_threshold {
            self.record.trigger_time = Some(receive_time);
            FcwAction::AlertRaised
        } else {
            FcwAction::NoAction
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub class: AlertClass,
    /// A warning fired although the ground truth never crossed the threshold
    /// within the run.
    pub spurious: bool,
}

pub fn classify(
    alert: &AlertRecord,
    ground_truth_cross: Option<SimTime>,
    run_end: SimTime,
    cfg: &FcwConfig,
) -> Classification {
    let cross = match ground_truth_cross {
        Some(t) if t <= run_end => t,
        _ => {
            return Classification {
                class: AlertClass::Timely,
                spurious: alert.triggered(),
            }
        }
    };
    let class = match alert.trigger_time {
        Some(t) if t <= cross + SimTime::from_secs_f64(cfg.grace) => AlertClass::Timely,
        Some(t) if t <= run_end => AlertClass::Delayed,
        _ => AlertClass::Missed,
    };
    Classification { class, spurious: false }
}
