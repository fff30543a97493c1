//! Integration tests for the command-line interface, driven through the
//! compiled binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.toml")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secbeam"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// A fast scenario for exercising the artifact plumbing: two antennas, one
/// user of each role, loose caps so every scheme solves in milliseconds.
fn small_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        r#"
n1 = 1
n2 = 2
wavelength_m = 0.01
gamma_th_db = 0.0
i_th_db = 0.0
power_db = 3.0
seed = 11

[[su]]
theta_deg = 88.0
phi_deg = 0.0

[[eve]]
theta_deg = 80.0
phi_deg = -6.0
los_gain_db = -3.0

[[pu]]
theta_deg = 102.0
phi_deg = 8.0
los_gain_db = -3.0
"#,
    )
    .expect("scenario written");
    path
}

#[test]
fn solve_writes_manifest_and_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let out = tmp.path().join("run");
    let result = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["seed"], 11);

    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert_eq!(solution["scheme"], "robust");
    assert!(solution["min_asr_bps_hz"].as_f64().unwrap() > 0.0);
    assert_eq!(solution["w_re"].as_array().unwrap().len(), 2);

    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("certified rate"), "stdout: {stdout}");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let scenario = scenario.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let result = run(&[
            "montecarlo",
            "--scenario",
            scenario,
            "--draws",
            "500",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    }
    for name in ["manifest.json", "solution.json", "montecarlo.json", "interference_histogram.csv"]
    {
        let bytes_a = fs::read(a.join(name)).unwrap_or_else(|_| panic!("{name} exists"));
        let bytes_b = fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} must be byte-identical across reruns");
    }
}

#[test]
fn seed_override_changes_the_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let scenario = scenario.to_str().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (out, seed) in [(&a, "11"), (&b, "12")] {
        let result = run(&[
            "montecarlo",
            "--scenario",
            scenario,
            "--draws",
            "500",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    let ma: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["seed"], 11);
    let mb: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(mb["seed"], 12);
    assert_ne!(
        fs::read(a.join("montecarlo.json")).unwrap(),
        fs::read(b.join("montecarlo.json")).unwrap(),
        "different seeds must draw different channel errors",
    );
}

#[test]
fn sweep_writes_csv_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let out = tmp.path().join("run");
    let result = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--power-sweep",
        "0:6:3",
        "--schemes",
        "robust",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("power_db,scheme,min_asr_bps_hz,converged,degraded,error"));
    assert_eq!(lines.count(), 3, "three power points expected");
}

#[test]
fn beampattern_writes_grid_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let out = tmp.path().join("run");
    let result = run(&[
        "beampattern",
        "--scenario",
        scenario.to_str().unwrap(),
        "--grid",
        "19x37",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let csv = fs::read_to_string(out.join("beampattern.csv")).unwrap();
    assert!(csv.starts_with("theta_deg,phi_deg,gain_db"));
    assert_eq!(csv.lines().count(), 1 + 19 * 37);
}

#[test]
fn oracle_matches_two_antenna_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let scenario = scenario.to_str().unwrap();
    let solve_out = tmp.path().join("solve");
    let oracle_out = tmp.path().join("oracle");
    assert!(run(&[
        "solve",
        "--scenario",
        scenario,
        "--scheme",
        "perfect",
        "--out",
        solve_out.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(run(&[
        "oracle",
        "--scenario",
        scenario,
        "--grid",
        "360x360",
        "--out",
        oracle_out.to_str().unwrap(),
    ])
    .status
    .success());
    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(solve_out.join("solution.json")).unwrap())
            .unwrap();
    let oracle: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(oracle_out.join("oracle.json")).unwrap())
            .unwrap();
    let solved = solution["min_asr_bps_hz"].as_f64().unwrap();
    let grid = oracle["min_asr_bps_hz"].as_f64().unwrap();
    assert!(
        (solved - grid).abs() / grid.max(1e-9) < 0.02,
        "solve {solved:.4} and oracle {grid:.4} disagree",
    );
}

#[test]
fn missing_scenario_exits_one_with_config_class() {
    let tmp = tempfile::tempdir().unwrap();
    let result = run(&[
        "solve",
        "--scenario",
        tmp.path().join("nope.toml").to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&result.stderr).expect("stderr is one JSON object");
    assert_eq!(err["error_class"], "config");
}

#[test]
fn infeasible_scenario_exits_three_and_names_the_binding_family() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    // A 40 dB floor is beyond this two-antenna link budget.
    let text = fs::read_to_string(&scenario)
        .unwrap()
        .replace("gamma_th_db = 0.0", "gamma_th_db = 40.0");
    fs::write(&scenario, text).unwrap();
    let out = tmp.path().join("out");
    let result = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&result.stderr).unwrap();
    assert_eq!(err["error_class"], "infeasible");
    assert_eq!(err["binding"], "hard-snr-or-power");
    // The manifest documents the attempt even though the run failed.
    assert!(out.join("manifest.json").exists());
    assert!(!out.join("solution.json").exists());
}

#[test]
fn bad_power_sweep_flag_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let result = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--power-sweep",
        "6:0:1",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&result.stderr).unwrap();
    assert_eq!(err["error_class"], "config");
}

#[test]
fn default_scenario_solves_from_the_repository() {
    // Smoke test against the checked-in scenario file.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let result = run(&[
        "solve",
        "--scenario",
        scenario_path().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let solution: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert!(solution["converged"].as_bool().unwrap());
    let rate = solution["min_asr_bps_hz"].as_f64().unwrap();
    assert!((3.40..=3.46).contains(&rate), "rate {rate} left its regression band");
}
