//! Drives the `gibc` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn gibc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibc"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn forward_reconstruct_impedance_flow() {
    let dir = tempfile::tempdir().unwrap();
    let fwd = json(&gibc(dir.path(), &["forward", "--rho", "0.5", "--eta", "5+2i", "--seed", "7"]));
    let noisy = fwd["noisy_path"].as_str().unwrap().to_string();
    assert!(Path::new(&noisy).exists());

    let rec = json(&gibc(dir.path(), &["reconstruct", "--matrix", &noisy, "--indicators", "W,P", "--resolution", "41"]));
    let inds = rec["indicators"].as_array().unwrap();
    assert_eq!(inds.len(), 2);
    assert!(inds[0]["contour_count"].as_u64().unwrap() > 0);
    assert!(dir.path().join("indicator_P.csv").exists());

    let imp = json(&gibc(dir.path(), &["impedance"]));
    let eta = &imp["recovery"]["eta"];
    assert!((eta[0].as_f64().unwrap() - 5.0).abs() < 1e-6);
    assert!((eta[1].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(dir.path().join("impedance.json").exists());
}

#[test]
fn manifest_rerun_matches() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    json(&gibc(&a, &["forward", "--delta", "0.05", "--seed", "11"]));
    let manifest = a.join("forward_manifest.json");
    json(&gibc(&b, &["forward", "--config", manifest.to_str().unwrap()]));
    assert_eq!(
        std::fs::read(a.join("gap_matrix_noisy.bin")).unwrap(),
        std::fs::read(b.join("gap_matrix_noisy.bin")).unwrap()
    );
}

#[test]
fn invalid_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["forward", "--rho", "1.5"][..],
        &["forward", "--delta", "-0.1"],
        &["forward", "--eta", "nonsense"],
        &["reconstruct", "--matrix", "/nonexistent/matrix.bin"],
        &["impedance", "--data", "/nonexistent/pair.csv"],
        &["reconstruct", "--matrix", "x.bin", "--indicators", "Q"],
    ] {
        let out = gibc(dir.path(), args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "rho = 0.5\nrhoo = 0.4\n").unwrap();
    let out = gibc(dir.path(), &["forward", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rhoo"));
}

#[test]
fn toml_config_with_cli_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "rho = 0.4\neta = \"3.0+1.0i\"\n[noise]\ndelta = 0.0\n").unwrap();
    json(&gibc(dir.path(), &["forward", "--config", cfg.to_str().unwrap(), "--rho", "0.3"]));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("forward_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["rho"].as_f64(), Some(0.3));
    assert_eq!(m["config"]["noise"]["delta"].as_f64(), Some(0.0));
}

#[test]
fn demo_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = gibc(dir.path(), &["demo"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("separation ratio"), "{text}");
    assert!(dir.path().join("summary.txt").exists());
}
