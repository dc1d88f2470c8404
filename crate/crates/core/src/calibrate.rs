//! Grid search for channel and receiver defaults that reproduce the
//! baseline bands and the expected alert-class column of a suite.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fcw::AlertClass;
use crate::metrics::MetricsReport;
use crate::scenario::{load_scenario, Scenario, ScenarioError};
use crate::suite::{run_many, suite_files, SuiteError};
use crate::traffic::TrafficKind;

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("cannot read targets {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad targets file {path}: {message}")]
    Targets { path: String, message: String },
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("no grid point meets the targets; nearest miss: {0}")]
    Infeasible(Box<NearestMiss>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    /// Relative to the targets file.
    pub suite_dir: PathBuf,
    #[serde(default = "default_baseline")]
    pub baseline: String,
    pub pdr_min: f64,
    pub latency_ms: [f64; 2],
    /// Expected alert class per scenario, in suite order.
    pub classes: Vec<AlertClass>,
    /// Optional per-scenario PDR floors.
    #[serde(default)]
    pub pdr_floors: Vec<PdrFloor>,
    /// Scenario that must have the strictly lowest PDR of the suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lowest_pdr: Option<String>,
    /// Pairs `[a, b]` with PDR(a) < PDR(b) and latency(a) > latency(b).
    #[serde(default)]
    pub worse_than: Vec<[String; 2]>,
    #[serde(default)]
    pub grid: Grid,
}

fn default_baseline() -> String {
    "baseline".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdrFloor {
    pub scenario: String,
    pub pdr_min: f64,
}

/// Candidate values per knob. An empty list keeps the value from the
/// scenario files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub delay_ms: Vec<[f64; 2]>,
    pub t_base_us: Vec<u64>,
    pub c_byte_us: Vec<f64>,
    pub lambda_pc5: Vec<f64>,
    pub capacity_msgs: Vec<usize>,
    pub udp_rate_hz: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Candidate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_base_us: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_byte_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_pc5: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_msgs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub udp_rate_hz: Option<f64>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

impl Grid {
    /// Cartesian product in declaration order, last knob varying fastest.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = vec![];
        for delay_ms in axis(&self.delay_ms) {
            for t_base_us in axis(&self.t_base_us) {
                for c_byte_us in axis(&self.c_byte_us) {
                    for lambda_pc5 in axis(&self.lambda_pc5) {
                        for capacity_msgs in axis(&self.capacity_msgs) {
                            for udp_rate_hz in axis(&self.udp_rate_hz) {
                                out.push(Candidate {
                                    delay_ms,
                                    t_base_us,
                                    c_byte_us,
                                    lambda_pc5,
                                    capacity_msgs,
                                    udp_rate_hz,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

impl Candidate {
    pub fn apply(&self, s: &Scenario) -> Scenario {
        let mut s = s.clone();
        if let Some([lo, hi]) = self.delay_ms {
            s.channel.delay_min_ms = lo;
            s.channel.delay_max_ms = hi;
        }
        if let Some(v) = self.t_base_us {
            s.queue.t_base_us = v;
        }
        if let Some(v) = self.c_byte_us {
            s.queue.c_byte_us = v;
        }
        if let Some(v) = self.lambda_pc5 {
            s.queue.lambda_pc5 = v;
        }
        if let Some(v) = self.capacity_msgs {
            s.queue.capacity_msgs = v;
        }
        if let Some(v) = self.udp_rate_hz {
            for a in s.attacks.iter_mut().filter(|a| a.kind == TrafficKind::UdpFlood) {
                a.rate_hz = v;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NearestMiss {
    pub candidate: Candidate,
    pub violations: Vec<String>,
}

impl std::fmt::Display for NearestMiss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} with {} violation(s): {}",
            serde_json::to_string(&self.candidate).expect("candidate serializes"),
            self.violations.len(),
            self.violations.join("; ")
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub chosen: Candidate,
    pub provenance: String,
    pub candidates_tried: usize,
    pub rows: Vec<MetricsReport>,
}

pub fn load_targets(path: &Path) -> Result<Targets, CalibrateError> {
    let text = std::fs::read_to_string(path).map_err(|source| CalibrateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut targets: Targets = serde_json::from_str(&text).map_err(|e| CalibrateError::Targets {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if targets.suite_dir.is_relative() {
        let base = path.parent().unwrap_or(Path::new("."));
        targets.suite_dir = base.join(&targets.suite_dir);
    }
    Ok(targets)
}

/// Every way `rows` falls short of `targets`.
pub fn violations(targets: &Targets, rows: &[Result<MetricsReport, String>]) -> Vec<String> {
    let mut out = vec![];
    if rows.len() != targets.classes.len() {
        out.push(format!(
            "suite has {} scenarios, targets list {} classes",
            rows.len(),
            targets.classes.len()
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        let r = match row {
            Ok(r) => r,
            Err(e) => {
                out.push(format!("scenario {i} failed: {e}"));
                continue;
            }
        };
        if let Some(&want) = targets.classes.get(i) {
            if r.classification != want {
                out.push(format!("{}: {} instead of {}", r.scenario, r.classification, want));
            }
        }
        if r.scenario == targets.baseline {
            if r.pdr_pct < targets.pdr_min {
                out.push(format!("{}: pdr {:.1} below {}", r.scenario, r.pdr_pct, targets.pdr_min));
            }
            let [lo, hi] = targets.latency_ms;
            match r.mean_latency_ms {
                Some(l) if (lo..=hi).contains(&l) => {}
                other => out.push(format!("{}: latency {other:?} outside [{lo}, {hi}] ms", r.scenario)),
            }
        }
        for floor in targets.pdr_floors.iter().filter(|f| f.scenario == r.scenario) {
            if r.pdr_pct < floor.pdr_min {
                out.push(format!("{}: pdr {:.1} below {}", r.scenario, r.pdr_pct, floor.pdr_min));
            }
        }
    }
    let ok: Vec<&MetricsReport> = rows.iter().flatten().collect();
    let find = |name: &str| ok.iter().find(|r| r.scenario == name).copied();
    if let Some(name) = &targets.lowest_pdr {
        match find(name) {
            Some(low) => {
                for r in ok.iter().filter(|r| r.scenario != *name && r.pdr_pct <= low.pdr_pct) {
                    out.push(format!("{name}: pdr {:.3} not below {} ({:.3})", low.pdr_pct, r.scenario, r.pdr_pct));
                }
            }
            None => out.push(format!("`{name}` not in suite")),
        }
    }
    for [a, b] in &targets.worse_than {
        match (find(a), find(b)) {
            (Some(ra), Some(rb)) => {
                if ra.pdr_pct >= rb.pdr_pct {
                    out.push(format!("pdr {a} {:.3} not below {b} {:.3}", ra.pdr_pct, rb.pdr_pct));
                }
                if ra.mean_latency_ms.unwrap_or(f64::INFINITY) <= rb.mean_latency_ms.unwrap_or(f64::INFINITY) {
                    out.push(format!("latency {a} not above {b}"));
                }
            }
            _ => out.push(format!("`{a}` or `{b}` not in suite")),
        }
    }
    if find(&targets.baseline).is_none() {
        out.push(format!("baseline `{}` not in suite", targets.baseline));
    }
    out
}

type Rows = Vec<Result<MetricsReport, String>>;

pub fn calibrate(targets: &Targets) -> Result<Calibration, CalibrateError> {
    let scenarios = suite_files(&targets.suite_dir)?
        .iter()
        .map(|f| load_scenario(f))
        .collect::<Result<Vec<_>, _>>()?;
    let candidates = targets.grid.candidates();

    // Evaluated in parallel; the winner is the first feasible point in
    // grid order, so the result does not depend on scheduling.
    let evaluated: Vec<(Vec<String>, Rows)> = candidates
        .par_iter()
        .map(|c| {
            let applied: Vec<Scenario> = scenarios.iter().map(|s| c.apply(s)).collect();
            let rows: Vec<Result<MetricsReport, String>> =
                run_many(&applied).into_iter().map(|r| r.map_err(|e| e.to_string())).collect();
            (violations(targets, &rows), rows)
        })
        .collect();

    if let Some(i) = evaluated.iter().position(|(v, _)| v.is_empty()) {
        let chosen = candidates[i].clone();
        let rows = evaluated[i].1.iter().flatten().cloned().collect();
        let provenance = format!(
            "grid point {} of {} over {}: baseline pdr >= {}, latency in [{}, {}] ms, classes {}",
            i + 1,
            candidates.len(),
            targets.suite_dir.display(),
            targets.pdr_min,
            targets.latency_ms[0],
            targets.latency_ms[1],
            targets.classes.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",")
        );
        return Ok(Calibration {
            chosen,
            provenance,
            candidates_tried: candidates.len(),
            rows,
        });
    }
    let (i, (v, _)) = evaluated
        .iter()
        .enumerate()
        .min_by_key(|(_, (v, _))| v.len())
        .expect("grid has at least one point");
    Err(CalibrateError::Infeasible(Box::new(NearestMiss {
        candidate: candidates[i].clone(),
        violations: v.clone(),
    })))
}
