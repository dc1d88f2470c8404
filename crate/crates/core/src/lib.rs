//! Discrete-event simulation of protocol-compliant flooding attacks
//! against a C-V2X receiver that runs a forward collision warning.
//!
//! Traffic streams ([`traffic`]) are offered to a fluid sidelink model
//! ([`channel`]), queued and served at the receiver ([`receiver`]), and the
//! legitimate BSMs drive the warning logic ([`fcw`]). [`runner`] wires the
//! pieces onto the event engine ([`engine`]) and [`suite`] turns runs into
//! tables.

pub mod calibrate;
pub mod channel;
pub mod engine;
pub mod fcw;
pub mod kinematics;
pub mod messages;
pub mod metrics;
pub mod receiver;
pub mod runner;
pub mod scenario;
pub mod suite;
pub mod time;
pub mod traffic;

pub use metrics::MetricsReport;
pub use runner::{run_scenario, run_scenario_with, RunError, RunOptions, RunOutput};
pub use scenario::{load_scenario, Scenario, ScenarioError};
pub use time::SimTime;
