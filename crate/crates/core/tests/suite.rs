mod common;

use common::*;
use cv2x_flood::calibrate::{calibrate, load_targets, CalibrateError, PdrFloor};
use cv2x_flood::fcw::AlertClass::{self, *};
use cv2x_flood::suite::{run_suite, suite_files, sweep, with_param, SuiteError};

#[test]
fn corpus_loads() {
    for name in CORPUS {
        let s = scenario(name);
        assert_eq!(s.name, name);
        assert_eq!(s.has_attacks(), name != "baseline");
    }
}

#[test]
fn manifest_orders_suite() {
    let names: Vec<String> = suite_files(&corpus_dir())
        .unwrap()
        .iter()
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, CORPUS);
}

#[test]
fn suite_reproduces_alert_column() {
    let table = run_suite(&corpus_dir()).unwrap();
    assert!(table.errors.is_empty(), "{:?}", table.errors);
    assert_eq!(table.rows.len(), 7);
    let want: [AlertClass; 7] = [Timely, Delayed, Missed, Delayed, Missed, Missed, Missed];
    assert_eq!(table.classes(), want);
    let text = table.render_text();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("no trigger"));
}

#[test]
fn empty_directory_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_suite(dir.path()).unwrap();
    assert!(table.rows.is_empty() && table.errors.is_empty());
    assert_eq!(table.to_csv().lines().count(), 1);
}

#[test]
fn malformed_file_is_reported_and_suite_continues() {
    let dir = corpus_copy();
    std::fs::write(dir.path().join("bsm500.json"), "{ \"name\": ").unwrap();
    let table = run_suite(dir.path()).unwrap();
    assert_eq!(table.rows.len(), 6);
    assert_eq!(table.errors.len(), 1);
    assert!(table.errors[0].file.ends_with("bsm500.json"));
    assert!(table.render_text().contains("error:"));
}

#[test]
fn without_manifest_files_are_sorted() {
    let dir = corpus_copy();
    std::fs::remove_file(dir.path().join("suite.json")).unwrap();
    let names: Vec<String> = suite_files(dir.path())
        .unwrap()
        .iter()
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    let mut sorted = CORPUS.map(String::from).to_vec();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn sweep_flood_rate_pdr_non_increasing() {
    let base = scenario("bsm1000");
    let rows = sweep(&base, "attacks.0.rate_hz", &[0.0, 100.0, 500.0, 1000.0]).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].pdr_pct, scenario_pdr("baseline"));
    for w in rows.windows(2) {
        assert!(w[1].pdr_pct <= w[0].pdr_pct, "{rows:?}");
    }
}

fn scenario_pdr(name: &str) -> f64 {
    cv2x_flood::run_scenario(&scenario(name)).unwrap().0.pdr_pct
}

#[test]
fn sweep_payload_latency_monotone() {
    let base = scenario("bsm500");
    let rows = sweep(&base, "attacks[0].payload_bytes", &[200.0, 600.0]).unwrap();
    assert!(rows[1].mean_latency_ms.unwrap() >= rows[0].mean_latency_ms.unwrap());
}

#[test]
fn sweep_edge_cases() {
    let base = scenario("bsm500");
    assert!(sweep(&base, "attacks.0.rate_hz", &[]).unwrap().is_empty());
    assert!(matches!(
        sweep(&base, "attacks.0.rate", &[1.0]),
        Err(SuiteError::UnknownParam(_))
    ));
    assert!(matches!(sweep(&base, "name", &[1.0]), Err(SuiteError::UnknownParam(_))));
    assert!(matches!(
        sweep(&base, "queue.capacity_msgs", &[2.5]),
        Err(SuiteError::BadValue { .. })
    ));
    assert!(matches!(
        sweep(&base, "queue.capacity_msgs", &[0.0]),
        Err(SuiteError::BadValue { .. })
    ));
}

#[test]
fn with_param_sets_nested_fields() {
    let base = scenario("combo500");
    let s = with_param(&base, "queue.c_byte_us", 4.5).unwrap();
    assert_eq!(s.queue.c_byte_us, 4.5);
    let s = with_param(&base, "attacks.1.rate_hz", 0.0).unwrap();
    assert_eq!(s.attacks.len(), 1);
    assert_eq!(s.attacks[0].kind, cv2x_flood::traffic::TrafficKind::UdpFlood);
}

#[test]
fn calibration_selects_shipped_defaults() {
    let targets = load_targets(&targets_file()).unwrap();
    let c = calibrate(&targets).unwrap();
    let s = scenario("baseline");
    assert_eq!(c.chosen.capacity_msgs, Some(s.queue.capacity_msgs));
    assert_eq!(c.chosen.c_byte_us, Some(s.queue.c_byte_us));
    assert_eq!(c.chosen.t_base_us, Some(s.queue.t_base_us));
    assert_eq!(c.chosen.lambda_pc5, Some(s.queue.lambda_pc5));
    assert_eq!(c.chosen.delay_ms, Some([s.channel.delay_min_ms, s.channel.delay_max_ms]));
    assert_eq!(c.rows.len(), 7);
    assert!(!c.provenance.is_empty());

    let again = calibrate(&targets).unwrap();
    assert_eq!(again.chosen, c.chosen);
    assert_eq!(again.rows, c.rows);
}

#[test]
fn impossible_target_is_infeasible() {
    let mut targets = load_targets(&targets_file()).unwrap();
    targets.pdr_floors.push(PdrFloor {
        scenario: "bsm1000".into(),
        pdr_min: 99.0,
    });
    targets.grid.capacity_msgs = vec![16384];
    match calibrate(&targets) {
        Err(CalibrateError::Infeasible(miss)) => {
            assert!(miss.violations.iter().any(|v| v.starts_with("bsm1000: pdr")), "{miss}");
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}
