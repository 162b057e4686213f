//! End-to-end tests driving the `nonrev` binary.

use std::path::Path;
use std::process::Command;

fn nonrev() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonrev"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn basis_emits_balance_report() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "2\n1 0\n0 0.1\n");
    let out = dir.path().join("out");
    let status = nonrev()
        .args(["basis", "--matrix"])
        .arg(&matrix)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let balance = std::fs::read_to_string(out.join("balance.csv")).unwrap();
    let mut lines = balance.lines();
    assert_eq!(lines.next().unwrap(), "index,rayleigh,deviation");
    for line in lines {
        let rayleigh: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((rayleigh - 0.55).abs() < 1e-10);
    }
    // emitted basis rows are unit vectors
    let basis = std::fs::read_to_string(out.join("basis.txt")).unwrap();
    assert!(basis.starts_with("2\n"));
}

#[test]
fn optimize_report_carries_rate_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "3\n1 0 0\n0 0.1 0\n0 0 0.01\n");
    let out = dir.path().join("out");
    let status = nonrev()
        .args(["optimize", "--matrix"])
        .arg(&matrix)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!((report["rate"].as_f64().unwrap() - 0.37).abs() < 1e-12);
    assert!((report["min_re"].as_f64().unwrap() - 0.37).abs() < 1e-9);
    assert!(report["residuals"]["lyapunov"].as_f64().unwrap() < 1e-12);
    for name in ["J.txt", "Jtilde.txt", "Q.txt", "BJ.txt"] {
        assert!(out.join(name).exists(), "missing {name}");
    }

    // flip-sign flips J but keeps the spectrum
    let out2 = dir.path().join("out-flip");
    assert!(nonrev()
        .args(["optimize", "--flip-sign", "--matrix"])
        .arg(&matrix)
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap()
        .success());
    let j1 = nonrev_core::io::read_matrix(&out.join("J.txt")).unwrap();
    let j2 = nonrev_core::io::read_matrix(&out2.join("J.txt")).unwrap();
    assert_eq!(j1, -j2);
    let report2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out2.join("report.json")).unwrap()).unwrap();
    assert!((report2["min_re"].as_f64().unwrap() - 0.37).abs() < 1e-9);
}

#[test]
fn optimize_triangular_collapses_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "2\n1 0\n0 0.1\n");
    let out = dir.path().join("out");
    assert!(nonrev()
        .args(["optimize", "--construction", "triangular", "--matrix"])
        .arg(&matrix)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["construction"], "triangular");
    assert!(report.get("constants").is_none() || report["constants"].is_null());
    assert!((report["min_re"].as_f64().unwrap() - 0.55).abs() < 1e-4);
}

#[test]
fn optimize_accepts_custom_csv_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "2\n1 0\n0 0.1\n");
    let ladder = dir.path().join("ladder.csv");
    write(&ladder, "2\n3\n");
    let out = dir.path().join("out");
    assert!(nonrev()
        .args(["optimize", "--matrix"])
        .arg(&matrix)
        .arg("--ladder")
        .arg(format!("csv:{}", ladder.display()))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let j = nonrev_core::io::read_matrix(&out.join("J.txt")).unwrap();
    // the (2,3) ladder pins |a| = 2.25 / sqrt(0.1)
    assert!((j[(0, 1)].abs() - 7.115_124_735_378_852).abs() < 1e-9);
}

#[test]
fn decay_csv_has_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "2\n1 0\n0 0.1\n");
    let out = dir.path().join("decay.csv");
    assert!(nonrev()
        .args(["decay", "--optimal", "--steps", "40", "--matrix"])
        .arg(&matrix)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,norm_reversible,norm_optimal,bound_optimal");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(first[2].parse::<f64>().unwrap(), 1.0);

    // without --optimal the fixed columns stay, filled with nan
    let out2 = dir.path().join("decay-rev.csv");
    assert!(nonrev()
        .args(["decay", "--steps", "40", "--matrix"])
        .arg(&matrix)
        .arg("--out")
        .arg(&out2)
        .status()
        .unwrap()
        .success());
    let text2 = std::fs::read_to_string(&out2).unwrap();
    assert!(text2.lines().nth(1).unwrap().ends_with("nan,nan"));
}

#[test]
fn twodim_prints_closed_forms() {
    let output = nonrev()
        .args(["twodim", "--lambda", "0.1", "--a", "7.115"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!((report["mu_plus"]["re"].as_f64().unwrap() - 0.55).abs() < 1e-12);
    assert!((report["a_crit_squared"].as_f64().unwrap() - 2.025).abs() < 1e-12);
}

#[test]
fn gaussflow_reports_divergent_start_as_inf() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "2\n1 0\n0 0.5\n");
    let x0 = dir.path().join("x0.txt");
    write(&x0, "0 0\n");
    let sigma0 = dir.path().join("sigma0.txt");
    // 3 S^{-1} starts outside L2(psi_inf^{-1})
    write(&sigma0, "2\n3 0\n0 6\n");
    let out = dir.path().join("flow.csv");
    assert!(nonrev()
        .args(["gaussflow", "--tmax", "6", "--steps", "12", "--matrix"])
        .arg(&matrix)
        .arg("--x0")
        .arg(&x0)
        .arg("--sigma0")
        .arg(&sigma0)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "t,mean_norm,cov_dev_norm,l2_distance,bound");
    assert!(rows[1].split(',').nth(3).unwrap() == "inf");
    // by the end of the window the law is back in L2 and close to equilibrium
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    let dist: f64 = last[3].parse().unwrap();
    assert!(dist < 0.1, "final distance {dist}");
}

#[test]
fn simulate_runs_linear_config_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    write(
        &config,
        r#"{"dim":1,"drift":{"type":"linear","matrix":[[1.0]]},"beta":1.0,
            "dt":0.001,"steps":1000,"n_paths":4000,"seed":5,"x0":[[0.0]],
            "record_every":500,"observable":"second_moment"}"#,
    );
    let out = dir.path().join("trace.csv");
    assert!(nonrev()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let text = std::fs::read_to_string(&out).unwrap();
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let value: f64 = last[1].parse().unwrap();
    let stderr: f64 = last[2].parse().unwrap();
    // scalar OU: E x_t^2 = 1 - e^{-2} at t = 1
    let theory = 1.0 - (-2.0_f64).exp();
    assert!((value - theory).abs() <= 4.0 * stderr);
}

#[test]
fn hermite_check_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("s.txt");
    write(&matrix, "2\n1 0\n0 0.1\n");
    let output = nonrev()
        .args(["hermite-check", "--degree", "5", "--matrix"])
        .arg(&matrix)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(report["max_mismatch"].as_f64().unwrap() < 1e-8);
    assert!(report["coercivity_min_eigenvalue"].as_f64().unwrap() > -1e-9);
    assert_eq!(report["per_block"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    // validation failure: not positive definite
    let bad = dir.path().join("bad.txt");
    write(&bad, "2\n1 0\n0 -0.1\n");
    let status = nonrev()
        .args(["optimize", "--matrix"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // i/o failure: missing file
    let status = nonrev()
        .args(["optimize", "--matrix"])
        .arg(dir.path().join("missing.txt"))
        .arg("--out")
        .arg(dir.path().join("o2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // usage failure: unknown preset
    let status = nonrev().args(["preset", "--name", "nope"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    // success
    let good = dir.path().join("good.txt");
    write(&good, "1\n2.0\n");
    let status = nonrev()
        .args(["optimize", "--matrix"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("o3"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn presets_rerun_byte_identical() {
    use nonrev_cli::presets::{run_preset, ExperimentPreset, PresetName};

    let dir = tempfile::tempdir().unwrap();
    for name in [PresetName::Fig2TwoDim, PresetName::Fig3ThreeDim] {
        let mut manifests = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{name}-{run}"));
            let preset = ExperimentPreset::new(name, 7);
            manifests.push(run_preset(&preset, &out).unwrap());
        }
        for (a, b) in manifests[0].files.iter().zip(&manifests[1].files) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.sha256, b.sha256, "{name}: {} differs between runs", a.name);
        }
    }

    // the double-well preset at reduced Monte-Carlo scale
    let mut manifests = Vec::new();
    for run in 0..2 {
        let mut preset = ExperimentPreset::new(PresetName::Fig6DoubleWell, 7);
        preset.sde_paths = 2000;
        preset.sde_steps = 1000;
        let out = dir.path().join(format!("fig6-{run}"));
        manifests.push(run_preset(&preset, &out).unwrap());
    }
    for (a, b) in manifests[0].files.iter().zip(&manifests[1].files) {
        assert_eq!(a.sha256, b.sha256, "fig6: {} differs between runs", a.name);
    }
}

#[test]
fn manifest_checksums_match_files() {
    use nonrev_cli::presets::{run_preset, ExperimentPreset, PresetName};
    use sha2::{Digest, Sha256};

    let dir = tempfile::tempdir().unwrap();
    let preset = ExperimentPreset::new(PresetName::Fig3ThreeDim, 0);
    let manifest = run_preset(&preset, dir.path()).unwrap();
    assert!(!manifest.files.is_empty());
    for f in &manifest.files {
        let bytes = std::fs::read(dir.path().join(&f.name)).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, f.sha256, "{} checksum mismatch", f.name);
    }

    // spectrum.json carries the known 3D gap value
    let spectrum: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spectrum.json")).unwrap())
            .unwrap();
    assert!((spectrum["min_re_optimal"].as_f64().unwrap() - 0.37).abs() < 1e-9);
    assert_eq!(spectrum["min_re_unperturbed"].as_f64().unwrap(), 0.01);
}

#[test]
fn fig5_preset_reproduces_laplacian_values() {
    use nonrev_cli::presets::{run_preset, ExperimentPreset, PresetName};

    let dir = tempfile::tempdir().unwrap();
    let preset = ExperimentPreset::new(PresetName::Fig5Laplacian100, 0);
    run_preset(&preset, dir.path()).unwrap();
    let spectrum: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spectrum.json")).unwrap())
            .unwrap();
    let gap = spectrum["min_re_unperturbed"].as_f64().unwrap();
    assert!((gap - 9.67e-4).abs() / 9.67e-4 < 0.01);
    assert!((spectrum["min_re_optimal"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}
