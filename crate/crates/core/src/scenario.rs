//! Scenario files: JSON description of one experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelParams;
use crate::fcw::FcwConfig;
use crate::kinematics::{ground_truth_ttc_crossing, Track, VehicleId, VehicleState};
use crate::messages::HEADER_LEN;
use crate::receiver::QueueParams;
use crate::time::SimTime;
use crate::traffic::{TrafficKind, TrafficSpec};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at line {line}, column {column}: {field}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleInit {
    pub position_m: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    pub kind: TrafficKind,
    pub rate_hz: f64,
    #[serde(default)]
    pub start_s: f64,
    pub duration_s: f64,
    pub payload_bytes: usize,
}

impl TrafficConfig {
    pub fn to_spec(&self) -> TrafficSpec {
        TrafficSpec::new(
            self.kind,
            self.rate_hz,
            SimTime::from_secs_f64(self.start_s),
            SimTime::from_secs_f64(self.duration_s),
            self.payload_bytes,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub airtime_capacity_pps: f64,
    pub delay_min_ms: f64,
    pub delay_max_ms: f64,
    #[serde(default = "default_window_ms")]
    pub window_ms: f64,
    /// Defaults to the scenario seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_window_ms() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueConfig {
    pub capacity_msgs: usize,
    pub t_base_us: u64,
    pub c_byte_us: f64,
    pub lambda_pc5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub run_end_s: f64,
    pub seed: u64,
    pub vehicle_a: VehicleInit,
    pub vehicle_b: VehicleInit,
    /// Position of the flooding node; stationary.
    #[serde(default = "default_attacker")]
    pub attacker: VehicleInit,
    pub legit: TrafficConfig,
    #[serde(default)]
    pub attacks: Vec<TrafficConfig>,
    pub channel: ChannelConfig,
    pub queue: QueueConfig,
    #[serde(default)]
    pub fcw: FcwConfig,
}

fn default_attacker() -> VehicleInit {
    VehicleInit {
        position_m: 0.0,
        speed_mps: 0.0,
    }
}

fn ms(v: f64) -> SimTime {
    SimTime::from_secs_f64(v / 1e3)
}

impl Scenario {
    pub fn run_end(&self) -> SimTime {
        SimTime::from_secs_f64(self.run_end_s)
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            airtime_capacity: self.channel.airtime_capacity_pps,
            delay_min: ms(self.channel.delay_min_ms),
            delay_max: ms(self.channel.delay_max_ms),
            window: ms(self.channel.window_ms),
            seed: self.channel.seed.unwrap_or(self.seed),
        }
    }

    pub fn queue_params(&self) -> QueueParams {
        QueueParams {
            capacity_msgs: self.queue.capacity_msgs,
            t_base: SimTime::from_micros(self.queue.t_base_us),
            c_byte_us: self.queue.c_byte_us,
            lambda_pc5: self.queue.lambda_pc5,
        }
    }

    pub fn follower(&self) -> VehicleState {
        VehicleState::new(VehicleId::A, self.vehicle_a.position_m, self.vehicle_a.speed_mps)
            .expect("validated")
    }

    pub fn lead(&self) -> VehicleState {
        VehicleState::new(VehicleId::B, self.vehicle_b.position_m, self.vehicle_b.speed_mps)
            .expect("validated")
    }

    pub fn attacker_track(&self) -> Track {
        Track::new(
            VehicleState::new(VehicleId::Attacker, self.attacker.position_m, 0.0).expect("validated"),
        )
    }

    pub fn ground_truth_cross(&self) -> Option<SimTime> {
        let (a, b) = (self.follower(), self.lead());
        ground_truth_ttc_crossing(
            b.position_m() - a.position_m(),
            a.speed_mps(),
            b.speed_mps(),
            self.fcw.ttc_threshold,
        )
    }

    pub fn has_attacks(&self) -> bool {
        !self.attacks.is_empty()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if !self.run_end_s.is_finite() || self.run_end_s <= 0.0 {
            return Err(invalid("run_end_s", "must be positive"));
        }
        for (field, v) in [("vehicle_a", &self.vehicle_a), ("vehicle_b", &self.vehicle_b), ("attacker", &self.attacker)] {
            if !v.position_m.is_finite() {
                return Err(invalid(format!("{field}.position_m"), "must be finite"));
            }
            if !v.speed_mps.is_finite() || v.speed_mps < 0.0 {
                return Err(invalid(format!("{field}.speed_mps"), "must be finite and non-negative"));
            }
        }
        if self.vehicle_b.position_m < self.vehicle_a.position_m {
            return Err(invalid("vehicle_b.position_m", "lead vehicle must start ahead of vehicle A"));
        }
        if self.legit.kind != TrafficKind::LegitBsm {
            return Err(invalid("legit.kind", "must be legit-bsm"));
        }
        validate_traffic("legit", &self.legit)?;
        for (i, attack) in self.attacks.iter().enumerate() {
            let field = format!("attacks[{i}]");
            if attack.kind == TrafficKind::LegitBsm {
                return Err(invalid(format!("{field}.kind"), "attacks must be udp-flood or bsm-flood"));
            }
            validate_traffic(&field, attack)?;
        }
        let c = &self.channel;
        if !c.airtime_capacity_pps.is_finite() || c.airtime_capacity_pps <= 0.0 {
            return Err(invalid("channel.airtime_capacity_pps", "must be positive"));
        }
        if !(c.delay_min_ms >= 0.0 && c.delay_min_ms.is_finite()) {
            return Err(invalid("channel.delay_min_ms", "must be non-negative"));
        }
        if !(c.delay_max_ms >= c.delay_min_ms && c.delay_max_ms.is_finite()) {
            return Err(invalid("channel.delay_max_ms", "must be at least delay_min_ms"));
        }
        if !(c.window_ms.is_finite() && ms(c.window_ms) > SimTime::ZERO) {
            return Err(invalid("channel.window_ms", "must be positive"));
        }
        let q = &self.queue;
        if q.capacity_msgs == 0 {
            return Err(invalid("queue.capacity_msgs", "must be positive"));
        }
        if q.t_base_us == 0 {
            return Err(invalid("queue.t_base_us", "must be positive"));
        }
        if !(q.c_byte_us.is_finite() && q.c_byte_us >= 0.0) {
            return Err(invalid("queue.c_byte_us", "must be non-negative"));
        }
        if !(q.lambda_pc5.is_finite() && q.lambda_pc5 > 0.0) {
            return Err(invalid("queue.lambda_pc5", "must be positive"));
        }
        let f = &self.fcw;
        for (field, v) in [
            ("fcw.ttc_threshold_s", f.ttc_threshold),
            ("fcw.critical_zone_m", f.critical_zone),
            ("fcw.grace_s", f.grace),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse {
                path: origin.to_string(),
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

fn validate_traffic(field: &str, t: &TrafficConfig) -> Result<(), ScenarioError> {
    if !t.rate_hz.is_finite() || t.rate_hz <= 0.0 {
        return Err(invalid(format!("{field}.rate_hz"), "must be positive"));
    }
    if !t.start_s.is_finite() || t.start_s < 0.0 {
        return Err(invalid(format!("{field}.start_s"), "must be non-negative"));
    }
    if !t.duration_s.is_finite() || t.duration_s < 0.0 {
        return Err(invalid(format!("{field}.duration_s"), "must be non-negative"));
    }
    if t.kind.carries_bsm() && t.payload_bytes < HEADER_LEN {
        return Err(invalid(
            format!("{field}.payload_bytes"),
            format!("BSM payload must be at least {HEADER_LEN} bytes"),
        ));
    }
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: display.clone(),
        source,
    })?;
    Scenario::from_json_str(&text, &display)
}
