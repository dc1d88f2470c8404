#![allow(dead_code)]

use std::path::PathBuf;

use cv2x_flood::{load_scenario, Scenario};

pub const CORPUS: [&str; 7] = [
    "baseline", "udp2min", "udp5min", "bsm500", "bsm1000", "combo500", "combo1000",
];

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn corpus_dir() -> PathBuf {
    repo_root().join("scenarios")
}

pub fn targets_file() -> PathBuf {
    repo_root().join("calibration/targets.json")
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(&corpus_dir().join(format!("{name}.json"))).unwrap()
}

/// Copies the corpus into a fresh directory.
pub fn corpus_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    dir
}
