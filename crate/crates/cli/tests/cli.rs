use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xjunction"))
        .args(args)
        .current_dir(dir)
        .env_remove("XJUNCTION_TABLE1")
        .output()
        .expect("binary runs")
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn plan_reorder_prints_the_swap_chain() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(&["plan", "reorder", "--ions", "a,b"], dir.path()));
    assert_eq!(
        v["chain"],
        "S_ab -> A_a B_b -> A_a C_b -> A_a V_b -> C_a V_b -> H_a V_b -> H_a C_b -> H_a A_b -> C_a A_b -> B_a A_b -> S_ba"
    );
}

#[test]
fn plan_address_writes_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["plan", "address", "--target", "a", "--out", "s.json"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("A_a B_b -> S_a R_b -> A_a B_b -> L_a S_b -> A_a B_b"), "{text}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(doc["steps"].as_array().unwrap().len(), 4);
}

#[test]
fn plan_with_one_ion_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["plan", "reorder", "--ions", "a"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["plan", "address", "--target", "c"], dir.path()).status.code(), Some(2));
}

#[test]
fn simulate_row_one_reproduces_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(&["simulate", "--row", "1"], dir.path()));
    let n = v["report"]["occupations"]["a"]["axial"]["value"].as_f64().unwrap();
    assert!((n - 0.046).abs() < 1e-12);
    assert_eq!(v["all_pass"], true);
}

#[test]
fn check_table1_passes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(&["simulate", "--check-table1"], dir.path()));
    assert_eq!(v["all_pass"], true);
    assert!(v["table_checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn simulate_reorder_needs_baseline_cover() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["plan", "reorder", "--ions", "a,b", "--out", "r.json"], dir.path()).status.success());
    let o = run(&["simulate", "--seq", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--cover"));
    let o = run(&["simulate", "--seq", "r.json", "--cover", "t6", "--cover", "t6:rev", "--csv", "r.csv"], dir.path());
    let v = json_out(&o);
    assert!(v["report"]["occupations"]["a"]["axial"]["value"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("ion,mode,nbar,sigma,phase_rad\n"));
    assert!(csv.lines().any(|l| l.starts_with("b,axial,")));
}

#[test]
fn missing_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate", "--seq", "nope.json"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["fit", "--data", "nope.csv"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["plan", "reorder", "--ions", "a,b", "--table1", "nope.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn synth_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, seed: &'static str| {
        ["synth", "--nbar", "0.8", "--eta", "0.25", "--seed", seed, "--out", out]
    };
    assert!(run(&args("a.csv", "7"), dir.path()).status.success());
    assert!(run(&args("b.csv", "7"), dir.path()).status.success());
    assert!(run(&args("c.csv", "8"), dir.path()).status.success());
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    assert!(dir.path().join("a.json").exists());
}

#[test]
fn synth_then_fit_recovers_nbar() {
    let dir = tempfile::tempdir().unwrap();
    for (kappa, out, seed) in [("-1", "red.csv", "3"), ("1", "blue.csv", "4")] {
        let o = run(
            &["synth", "--nbar", "1.7", "--eta", "0.3", "--kappa", kappa, "--shots", "1000", "--seed", seed, "--out", out],
            dir.path(),
        );
        assert!(o.status.success());
    }
    let v = json_out(&run(&["fit", "--data", "red.csv", "--data", "blue.csv", "--residuals", "res.csv"], dir.path()));
    let n = v["params"]["nbar"]["axial"].as_f64().unwrap();
    assert!((n - 1.7).abs() / 1.7 < 0.05, "n̄ = {n}");
    let res = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    assert_eq!(res.lines().count(), 1 + 2 * 41);
}

#[test]
fn fit_both_prefers_thermal_for_thermal_data() {
    let dir = tempfile::tempdir().unwrap();
    for (kappa, out) in [("-1", "red.csv"), ("1", "blue.csv")] {
        assert!(run(&["synth", "--nbar", "1.5", "--eta", "0.3", "--kappa", kappa, "--analytic", "--out", out], dir.path())
            .status
            .success());
    }
    let v = json_out(&run(&["fit", "--data", "red.csv", "--data", "blue.csv", "--distribution", "both"], dir.path()));
    assert_eq!(v["preferred"], "thermal");
}

#[test]
fn separation_waveform_has_expected_length_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(&["waveform", "separate", "--duration", "310us", "--out", "sep.csv"], dir.path()));
    assert_eq!(v["samples"], 15500);
    let m = v["final_minima_um"].as_array().unwrap();
    assert_eq!(m.len(), 2);
    let d = (m[0][1].as_f64().unwrap() - m[1][1].as_f64().unwrap()).abs();
    assert!((d - 340.0).abs() < 17.0, "separation {d}");
    let csv = std::fs::read_to_string(dir.path().join("sep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 15501);
    assert!(csv.starts_with("time_us,V_c00,"));
    assert!(dir.path().join("sep.json").exists());
}

#[test]
fn precompensated_waveform_records_the_filter() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(
        &["waveform", "rotate", "--duration", "20us", "--steps", "5", "--filter-cutoff", "2e6", "--out", "rot.csv"],
        dir.path(),
    ));
    assert!(v["filter"]["max_round_trip_error"].as_f64().unwrap() < 1e-9);
    let header: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rot.json")).unwrap()).unwrap();
    assert_eq!(header["filter"]["cutoff_hz"], 2e6);
}

#[test]
fn impossible_voltage_bound_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["waveform", "separate", "--bound", "0.01", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["waveform", "solve", "--bound", "0.001"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solve_places_the_well() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(&["waveform", "solve", "--position=0,-710", "--freq", "3.6e6"], dir.path()));
    let z = v["measured"]["position_um"][1].as_f64().unwrap();
    assert!((z + 710.0).abs() < 0.1);
    let f = v["measured"]["weak_axis_hz"].as_f64().unwrap();
    assert!((f - 3.6e6).abs() / 3.6e6 < 0.005);
}

#[test]
fn bad_duration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["waveform", "separate", "--duration", "310 parsecs", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn topology_path_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_out(&run(&["topology", "path", "S", "V"], dir.path()));
    assert_eq!(v["path"].as_array().unwrap().last().unwrap(), "V");
    let v = json_out(&run(&["topology", "modes", "--freq-mhz", "3.6"], dir.path()));
    assert!((v["ratio"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-9);
}
