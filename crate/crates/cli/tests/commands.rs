use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use risnet::gating::{synth_multipath, Sweep};
use risnet::touchstone::{
    load_state_csv, serialize_touchstone, write_state_csv, DataFormat, FrequencyUnit, NetworkPoint, PortNetwork,
    ReflectionProfile, SMatrix,
};
use tempfile::TempDir;

fn risnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Thru unit cell on 3.0–4.2 GHz in 50 MHz steps (3.6 GHz on the grid).
fn thru_s2p(f_lo: f64, f_hi: f64) -> String {
    let n = ((f_hi - f_lo) / 50e6).round() as usize + 1;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let points = (0..n)
        .map(|i| NetworkPoint {
            frequency: f_lo + 50e6 * i as f64,
            s: SMatrix::two_port(zero, one, one, zero),
        })
        .collect();
    serialize_touchstone(&PortNetwork::new(2, 50.0, points).unwrap(), DataFormat::MA, FrequencyUnit::GHz)
}

fn flat_profile(phases_deg: &[f64], freqs: &[f64]) -> String {
    let gamma = phases_deg
        .iter()
        .map(|p| vec![Complex64::from_polar(1.0, p.to_radians()); freqs.len()])
        .collect();
    write_state_csv(&ReflectionProfile::new((0..phases_deg.len()).collect(), freqs.to_vec(), gamma).unwrap())
}

fn grid() -> Vec<f64> {
    (0..=24).map(|i| 3.0e9 + 50e6 * i as f64).collect()
}

fn ladder(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * 360.0 / n as f64).collect()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

fn phase_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[test]
fn parse_reports_two_port_summary() {
    let dir = TempDir::new().unwrap();
    let cell = write(dir.path(), "cell.s2p", &thru_s2p(3.0e9, 4.2e9));
    let out = stdout(&risnet(&["parse", s(&cell)]));
    assert!(out.contains("n_ports = 2"), "{out}");
    assert!(out.contains("25 points"), "{out}");
    let j = json(&stdout(&risnet(&["parse", s(&cell), "--format", "json"])));
    assert_eq!(j["n_ports"], 2);
    assert_eq!(j["kind"], "touchstone");
}

#[test]
fn parse_error_carries_line_number() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.s2p", "! header\n# GHz S QQ R 50\n3.6 0 0 1 0 1 0 0 0\n");
    let out = risnet(&["parse", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn parse_state_csv_counts_states() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&ladder(8), &grid()));
    let out = stdout(&risnet(&["parse", s(&p)]));
    assert!(out.starts_with("8 states, 25 frequencies"), "{out}");
}

#[test]
fn profile_ideal_one_bit_through_thru() {
    let dir = TempDir::new().unwrap();
    let cell = write(dir.path(), "cell.s2p", &thru_s2p(3.0e9, 4.2e9));
    let profile = load_state_csv(&stdout(&risnet(&["profile", s(&cell), "--loads", "ideal-1bit"]))).unwrap();
    assert_eq!(profile.states(), &[0, 1]);
    for k in 0..profile.frequencies().len() {
        let g = profile.gammas_at(k);
        assert!(phase_diff(g[0].arg().to_degrees(), 0.0) < 1e-9);
        assert!(phase_diff(g[1].arg().to_degrees(), 180.0) < 1e-9);
    }
}

#[test]
fn profile_ideal_three_bit_ladder_at_center() {
    let dir = TempDir::new().unwrap();
    let cell = write(dir.path(), "cell.s2p", &thru_s2p(3.0e9, 4.2e9));
    let profile = load_state_csv(&stdout(&risnet(&["profile", s(&cell), "--loads", "ideal-3bit"]))).unwrap();
    let k = profile.frequencies().iter().position(|&f| f == 3.6e9).unwrap();
    for (i, g) in profile.gammas_at(k).iter().enumerate() {
        assert!(phase_diff(g.arg().to_degrees(), 45.0 * i as f64) < 1e-6, "state {i}");
        assert!((g.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn profile_switch_range_mismatch_is_input_error() {
    let dir = TempDir::new().unwrap();
    let cell = write(dir.path(), "cell.s2p", &thru_s2p(3.0e9, 4.2e9));
    let switch = write(dir.path(), "sw.s2p", &thru_s2p(3.4e9, 3.8e9));
    let out = risnet(&["profile", s(&cell), "--loads", s(&switch)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside sweep"));
}

#[test]
fn synth_ideal_design_and_reuse_as_load_source() {
    let dir = TempDir::new().unwrap();
    let design_path = dir.path().join("design.json");
    stdout(&risnet(&["synth", "--out", s(&design_path)]));
    let doc = json(&std::fs::read_to_string(&design_path).unwrap());
    let stubs = doc["stubs"].as_array().unwrap();
    assert_eq!(stubs.len(), 8);
    let open = stubs.iter().filter(|st| st["termination"] == "open").count();
    assert_eq!(open, 4);
    assert!(stubs.iter().all(|st| st["residual_deg"].as_f64().unwrap() <= 1.0));

    let cell = write(dir.path(), "cell.s2p", &thru_s2p(3.0e9, 4.2e9));
    let from_doc = stdout(&risnet(&["profile", s(&cell), "--loads", s(&design_path)]));
    let builtin = stdout(&risnet(&["profile", s(&cell), "--loads", "ideal-3bit"]));
    assert_eq!(from_doc, builtin);
}

#[test]
fn synth_band_outside_switch_sweep_fails() {
    let dir = TempDir::new().unwrap();
    let switch = write(dir.path(), "sw.s2p", &thru_s2p(3.5e9, 3.7e9));
    let out = risnet(&["synth", "--switch", s(&switch)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bandwidth_flat_three_bit_covers_grid() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&ladder(8), &grid()));
    let j = json(&stdout(&risnet(&["bandwidth", s(&p)])));
    assert_eq!(j["threshold_deg"], 16.25);
    assert_eq!(j["band"]["f_low_hz"], 3.0e9);
    assert_eq!(j["band"]["f_high_hz"], 4.2e9);
}

#[test]
fn bandwidth_one_bit_hundred_degrees_is_zero() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&[0.0, 100.0], &grid()));
    let j = json(&stdout(&risnet(&["bandwidth", s(&p)])));
    assert_eq!(j["bandwidth_hz"], 0.0);
    assert!(j["band"].is_null());
    assert!((j["sigma_at_center_deg"].as_f64().unwrap() - 65.574).abs() < 1e-3);
}

#[test]
fn bandwidth_virtual_two_bit() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&ladder(8), &grid()));
    let j = json(&stdout(&risnet(&["bandwidth", s(&p), "--virtual-2bit"])));
    assert_eq!(j["resolution_bits"], 2);
    assert_eq!(j["states"], serde_json::json!([0, 2, 4, 6]));
    assert!((j["sigma_at_center_deg"].as_f64().unwrap() - 25.9808).abs() < 1e-4);
    let csv = stdout(&risnet(&["bandwidth", s(&p), "--format", "csv"]));
    assert!(csv.starts_with("freq_hz,sigma_deg,nbit_eff\n"));
    assert_eq!(csv.lines().count(), 26);
}

#[test]
fn pattern_broadside_and_power_line() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&[0.0, 180.0], &grid()));
    let map = dir.path().join("map.txt");
    let out = stdout(&risnet(&["pattern", s(&p), "--state-map", s(&map)]));
    assert!(out.contains("# power_mw=7.2\n"), "{out}");
    assert!(out.contains("# cells=576\n"));
    assert!(out.contains("# peak_theta_deg=0\n"));
    assert!(out.contains("theta_deg,phi_deg,af_db\n"));
    let text = std::fs::read_to_string(&map).unwrap();
    assert_eq!(text.lines().count(), 24);
}

#[test]
fn pattern_negative_theta_mirrors_peak() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&ladder(8), &grid()));
    let j = json(&stdout(&risnet(&[
        "pattern", s(&p), "--theta-deg", "-20", "--cut-phi-deg", "0", "--format", "json",
    ])));
    let peak = j["peak_theta_deg"].as_f64().unwrap();
    assert!((peak + 20.0).abs() <= 1.0, "{peak}");
}

#[test]
fn pattern_frequency_outside_profile_is_input_error() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&[0.0, 180.0], &grid()));
    let out = risnet(&["pattern", s(&p), "--freq-hz", "5e9"]);
    assert_eq!(out.status.code(), Some(3));
}

fn two_path_csv() -> String {
    let freqs = Sweep::linear_grid(3.0e9, 4.2e9, 401);
    synth_multipath(
        &[(2e-9, Complex64::new(1.0, 0.0)), (10e-9, Complex64::new(0.5, 0.0))],
        &freqs,
    )
    .unwrap()
    .to_csv()
}

#[test]
fn gate_recovers_first_path() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "sweep.csv", &two_path_csv());
    let gated = Sweep::from_csv(&stdout(&risnet(&[
        "gate", s(&input), "--gate-start-ns", "0", "--gate-stop-ns", "6",
    ])))
    .unwrap();
    let expect = synth_multipath(&[(2e-9, Complex64::new(1.0, 0.0))], gated.frequencies()).unwrap();
    for k in 40..=360 {
        assert!((gated.values()[k] - expect.values()[k]).norm() < 0.02, "k = {k}");
    }
}

#[test]
fn gate_touchstone_output_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "sweep.csv", &two_path_csv());
    let out = dir.path().join("gated.s1p");
    stdout(&risnet(&[
        "gate", s(&input), "--gate-start-ns", "0", "--gate-stop-ns", "6", "--out", s(&out),
    ]));
    let summary = stdout(&risnet(&["parse", s(&out)]));
    assert!(summary.contains("n_ports = 1, 401 points"), "{summary}");
}

#[test]
fn gate_normalize_against_itself_is_minus_one() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "sweep.csv", &two_path_csv());
    let gated = Sweep::from_csv(&stdout(&risnet(&[
        "gate",
        s(&input),
        "--gate-start-ns",
        "0",
        "--gate-stop-ns",
        "6",
        "--reference",
        s(&input),
        "--normalize",
    ])))
    .unwrap();
    for z in gated.values() {
        assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-9);
    }
}

#[test]
fn gate_normalize_without_reference_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "sweep.csv", &two_path_csv());
    let out = risnet(&["gate", s(&input), "--gate-start-ns", "0", "--gate-stop-ns", "6", "--normalize"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(risnet(&["bandwidth"]).status.code(), Some(2));
    assert_eq!(risnet(&["nonsense"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.csv", &flat_profile(&ladder(8), &grid()));
    let out = risnet(&["bandwidth", s(&p), "--f-center-hz", "4.0e9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cell = write(dir.path(), "cell.s2p", &thru_s2p(3.0e9, 4.2e9));
    let p = write(dir.path(), "p.csv", &flat_profile(&ladder(8), &grid()));
    let sweep = write(dir.path(), "sweep.csv", &two_path_csv());
    let runs: [&[&str]; 6] = [
        &["parse", s(&cell)],
        &["profile", s(&cell), "--loads", "ideal-3bit"],
        &["synth"],
        &["bandwidth", s(&p)],
        &["pattern", s(&p), "--theta-deg", "30", "--format", "json"],
        &["gate", s(&sweep), "--gate-start-ns", "0", "--gate-stop-ns", "6"],
    ];
    for args in runs {
        let a = risnet(args);
        let b = risnet(args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
