//! Scenario suites and one-parameter sweeps.
//!
//! Runs are independent and execute on the rayon pool; results are always
//! assembled in input order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::fcw::AlertClass;
use crate::metrics::MetricsReport;
use crate::runner::{run_scenario_with, RunError, RunOptions};
use crate::scenario::{load_scenario, Scenario};

/// Optional file in a suite directory fixing the scenario order.
pub const MANIFEST: &str = "suite.json";

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad suite manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("unknown sweep parameter `{0}`")]
    UnknownParam(String),
    #[error("sweep value {value} for `{param}`: {message}")]
    BadValue { param: String, value: f64, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    scenarios: Vec<String>,
}

/// Scenario files of a suite directory: the manifest order when
/// `suite.json` exists, otherwise every `*.json` file sorted by name.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, SuiteError> {
    let manifest = dir.join(MANIFEST);
    if manifest.is_file() {
        let text = std::fs::read_to_string(&manifest).map_err(|source| SuiteError::Io {
            path: manifest.display().to_string(),
            source,
        })?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| SuiteError::Manifest {
            path: manifest.display().to_string(),
            message: e.to_string(),
        })?;
        return Ok(m.scenarios.iter().map(|f| dir.join(f)).collect());
    }
    let entries = std::fs::read_dir(dir).map_err(|source| SuiteError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

#[derive(Debug)]
pub struct FailedRun {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct SuiteTable {
    pub rows: Vec<MetricsReport>,
    pub errors: Vec<FailedRun>,
}

impl SuiteTable {
    pub fn to_csv(&self) -> String {
        crate::metrics::render_csv(&self.rows)
    }

    pub fn classes(&self) -> Vec<AlertClass> {
        self.rows.iter().map(|r| r.classification).collect()
    }

    pub fn row(&self, name: &str) -> Option<&MetricsReport> {
        self.rows.iter().find(|r| r.scenario == name)
    }

    /// Human-readable table with the Table-1 style column set.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{:<12} {:>14} {:>8} {:>16} {:>12} {:>9} {:>15}\n",
            "scenario", "mean latency", "PDR", "last valid BSM", "FCW trigger", "FCW alert", "attack success"
        );
        for r in &self.rows {
            let secs = |t: Option<crate::SimTime>| {
                t.map_or_else(|| "no trigger".to_string(), |t| format!("{:.2} s", t.as_secs_f64()))
            };
            out.push_str(&format!(
                "{:<12} {:>14} {:>8} {:>16} {:>12} {:>9} {:>15}\n",
                r.scenario,
                r.mean_latency_ms
                    .map_or_else(|| "n/a".to_string(), |l| format!("{l:.0} ms")),
                format!("{:.1} %", r.pdr_pct),
                r.last_valid_bsm
                    .map_or_else(|| "none".to_string(), |t| format!("{:.2} s", t.as_secs_f64())),
                secs(r.fcw_trigger),
                r.classification.as_str(),
                if r.attack_success { "successful" } else { "no" },
            ));
        }
        for e in &self.errors {
            out.push_str(&format!("error: {}: {}\n", e.file, e.message));
        }
        out
    }
}

pub fn run_many(scenarios: &[Scenario]) -> Vec<Result<MetricsReport, RunError>> {
    scenarios
        .par_iter()
        .map(|s| run_scenario_with(s, RunOptions::default()).map(|o| o.report))
        .collect()
}

pub fn run_suite(dir: &Path) -> Result<SuiteTable, SuiteError> {
    let files = suite_files(dir)?;
    let results: Vec<(String, Result<MetricsReport, String>)> = files
        .par_iter()
        .map(|f| {
            let name = f.display().to_string();
            let result = load_scenario(f)
                .map_err(|e| e.to_string())
                .and_then(|s| run_scenario_with(&s, RunOptions::default()).map_err(|e| e.to_string()));
            (name, result.map(|o| o.report))
        })
        .collect();
    let mut table = SuiteTable::default();
    for (file, result) in results {
        match result {
            Ok(report) => table.rows.push(report),
            Err(message) => table.errors.push(FailedRun { file, message }),
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub pdr_pct: f64,
    pub mean_latency_ms: Option<f64>,
    pub classification: AlertClass,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,pdr_pct,mean_latency_ms,alert_class\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.1},{},{}\n",
            r.value,
            r.pdr_pct,
            r.mean_latency_ms
                .map_or_else(|| "none".to_string(), |l| format!("{l:.0}")),
            r.classification
        ));
    }
    out
}

/// JSON pointer for a dotted parameter name, e.g. `attacks.0.rate_hz`.
fn pointer(param: &str) -> String {
    param
        .split('.')
        .flat_map(|p| {
            // Accept `attacks[0]` as well as `attacks.0`.
            p.split(['[', ']']).filter(|s| !s.is_empty()).map(str::to_string).collect::<Vec<_>>()
        })
        .fold(String::new(), |acc, seg| acc + "/" + &seg)
}

/// Returns `base` with `param` set to `value`. Setting an attack's
/// `rate_hz` to zero removes that attack.
pub fn with_param(base: &Scenario, param: &str, value: f64) -> Result<Scenario, SuiteError> {
    let mut doc = serde_json::to_value(base).expect("scenario serializes");
    let ptr = pointer(param);
    let slot = doc
        .pointer_mut(&ptr)
        .filter(|v| v.is_number())
        .ok_or_else(|| SuiteError::UnknownParam(param.to_string()))?;
    let bad = |message: String| SuiteError::BadValue {
        param: param.to_string(),
        value,
        message,
    };
    *slot = if slot.is_u64() || slot.is_i64() {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(bad("expected a non-negative integer".into()));
        }
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| bad("not a finite number".into()))?
    };

    let removed_attack = ptr
        .strip_prefix("/attacks/")
        .and_then(|rest| rest.strip_suffix("/rate_hz"))
        .and_then(|i| i.parse::<usize>().ok())
        .filter(|_| value == 0.0);
    if let Some(i) = removed_attack {
        doc["attacks"].as_array_mut().expect("attacks array").remove(i);
    }

    let scenario: Scenario = serde_json::from_value(doc).map_err(|e| bad(e.to_string()))?;
    scenario.validate().map_err(|e| bad(e.to_string()))?;
    Ok(scenario)
}

pub fn sweep(base: &Scenario, param: &str, values: &[f64]) -> Result<Vec<SweepRow>, SuiteError> {
    // Resolve the parameter even when there is nothing to sweep.
    with_param(base, param, current_value(base, param)?)?;
    let scenarios = values
        .iter()
        .map(|&v| with_param(base, param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = run_many(&scenarios);
    values
        .iter()
        .zip(reports)
        .map(|(&value, r)| {
            let r = r.map_err(|e| SuiteError::BadValue {
                param: param.to_string(),
                value,
                message: e.to_string(),
            })?;
            Ok(SweepRow {
                value,
                pdr_pct: r.pdr_pct,
                mean_latency_ms: r.mean_latency_ms,
                classification: r.classification,
            })
        })
        .collect()
}

fn current_value(base: &Scenario, param: &str) -> Result<f64, SuiteError> {
    let doc = serde_json::to_value(base).expect("scenario serializes");
    doc.pointer(&pointer(param))
        .and_then(Value::as_f64)
        .ok_or_else(|| SuiteError::UnknownParam(param.to_string()))
}

pub fn parse_values(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad value `{s}`: {e}")))
        .collect()
}
