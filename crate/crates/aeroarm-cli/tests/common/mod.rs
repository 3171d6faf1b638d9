//! Helpers shared by the CLI and acceptance suites.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Command handle on the compiled `aeroarm` binary.
pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aeroarm"))
}

/// Absolute path of a scenario file shipped in the repository.
pub fn repo_scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

/// Runs the binary with `args` and returns the finished process output.
pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

/// Runs the binary and asserts a zero exit, echoing stderr on failure.
pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "aeroarm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

/// Two-waypoint scenario in empty space: the straight segment is free, so
/// planning must return exactly the waypoints.
pub fn empty_space_scenario() -> String {
    r#"{
  "schema_version": 1,
  "name": "free-hop",
  "waypoints": [
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [0.8, 0.4, 1.3, 0.3, 0.3, -0.2, 0.4]
  ],
  "obstacles": [],
  "arm": {
    "dh_rows": [
      {"theta_offset": 1.5707963267948966, "d": 0.0, "alpha": 4.71238898038469, "a": 0.1365, "kind": "rotational"},
      {"theta_offset": 0.0, "d": 0.0, "alpha": 0.0, "a": 0.0725, "kind": "rotational"},
      {"theta_offset": 4.71238898038469, "d": 0.0, "alpha": 4.71238898038469, "a": 0.0, "kind": "fixed"},
      {"theta_offset": 0.0, "d": 0.4, "alpha": 0.0, "a": 0.0, "kind": "rotational"}
    ],
    "mount_translation": [-0.1365, 0.0, 0.0],
    "mount_rpy": [0.0, 0.0, -1.5707963267948966],
    "joint_limits": [[-3.1, 3.1], [-1.8, 1.8], [-3.1, 3.1]]
  },
  "limits": {
    "v_max": [1.5, 1.5, 1.0, 1.0, 3.0, 3.0, 3.0],
    "a_max": [2.0, 2.0, 1.5, 1.5, 40.0, 40.0, 40.0]
  },
  "vehicle": {
    "mass": 3.5,
    "inertia_diag": [0.21, 0.22, 0.36],
    "rotor_count": 6,
    "boom_length": 0.3,
    "c_m": 0.016,
    "f_max": 16.0
  },
  "disturbance": {"max_force": 0.3, "max_torque": 0.02},
  "seeds": {"planner": 1, "disturbance": 7}
}"#
    .to_string()
}

/// Writes `text` as `scenario.json` under `dir` and returns its path.
pub fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(&path, text).expect("scenario should be writable");
    path
}

/// Artifact files a full pipeline run produces.
pub const RUN_ARTIFACTS: [&str; 7] = [
    "path.csv",
    "trajectory.csv",
    "sim_trace.csv",
    "compensated.csv",
    "comp_meta.json",
    "errors.csv",
    "report.json",
];

/// Asserts the two run directories hold byte-identical artifacts.
pub fn assert_runs_identical(a: &Path, b: &Path) {
    for name in RUN_ARTIFACTS {
        let left = std::fs::read(a.join(name)).unwrap_or_else(|e| panic!("{name} in A: {e}"));
        let right = std::fs::read(b.join(name)).unwrap_or_else(|e| panic!("{name} in B: {e}"));
        assert!(left == right, "{name} differs between the two runs");
    }
}
