//! Run commands: files written, manifests, determinism, and error paths.

use std::path::Path;

use gibc_core::io::output::{write_cauchy_pair_csv, Manifest};
use gibc_core::io::{cmd_demo, cmd_forward, cmd_impedance, cmd_reconstruct, container, RunConfig};
use gibc_core::sampling::IndicatorKind;
use gibc_core::{Complex64, Error};

fn config_in(dir: &Path) -> RunConfig {
    RunConfig {
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn read_manifest(path: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn forward_writes_containers_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    let rep = cmd_forward(&cfg).unwrap();
    assert!(rep.clean_path.exists() && rep.noisy_path.exists());
    let m = read_manifest(&rep.manifest_path);
    assert_eq!(m.command, "forward");
    assert_eq!(m.config, cfg);
    assert_eq!(m.seed, 42);
    assert_eq!(m.config.eta, Complex64::new(5.0, 2.0));
    assert!(m.results["perturbation_spectral_norm"].as_f64().unwrap() > 0.0);
    let noisy = container::load(&rep.noisy_path).unwrap();
    assert_eq!(noisy.noise().unwrap().delta, 0.02);
    assert_eq!(noisy.size(), 64);
}

#[test]
fn zero_noise_gives_identical_containers() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.noise.delta = 0.0;
    let rep = cmd_forward(&cfg).unwrap();
    let clean = container::load(&rep.clean_path).unwrap();
    let noisy = container::load(&rep.noisy_path).unwrap();
    assert_eq!(clean.entries(), noisy.entries());
}

#[test]
fn same_seed_gives_byte_identical_containers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = cmd_forward(&config_in(a.path())).unwrap();
    let rb = cmd_forward(&config_in(b.path())).unwrap();
    assert_eq!(std::fs::read(&ra.noisy_path).unwrap(), std::fs::read(&rb.noisy_path).unwrap());
    let mut other = config_in(b.path());
    other.noise.seed = 43;
    let rc = cmd_forward(&other).unwrap();
    assert_ne!(std::fs::read(&ra.noisy_path).unwrap(), std::fs::read(&rc.noisy_path).unwrap());
}

#[test]
fn reconstruct_writes_w_and_p() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.indicators = vec![IndicatorKind::W, IndicatorKind::P];
    let fwd = cmd_forward(&cfg).unwrap();
    let rec = cmd_reconstruct(&cfg, &fwd.noisy_path).unwrap();
    assert_eq!(rec.indicators.len(), 2);
    for s in &rec.indicators {
        let mut r = csv::Reader::from_path(&s.indicator_path).unwrap();
        let max = r
            .records()
            .map(|row| row.unwrap()[2].parse::<f64>().unwrap())
            .fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        let contour = std::fs::read_to_string(&s.contour_path).unwrap();
        assert!(contour.lines().count() > 1, "empty contour for {}", s.kind);
        assert!(s.separation_ratio.unwrap() > 3.0);
    }
    let m = read_manifest(&rec.manifest_path);
    assert_eq!(m.results["matrix_noise"]["delta"].as_f64(), Some(0.02));
    assert!(m.results["indicators"][1]["alpha_median"].as_f64().is_some());
}

#[test]
fn manifest_reproduces_outputs_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(&dir.path().join("first"));
    let fwd = cmd_forward(&cfg).unwrap();
    let rec = cmd_reconstruct(&cfg, &fwd.noisy_path).unwrap();

    let mut again = RunConfig::load(&fwd.manifest_path).unwrap();
    again.output_dir = dir.path().join("second");
    let fwd2 = cmd_forward(&again).unwrap();
    let rec2 = cmd_reconstruct(&again, &fwd2.noisy_path).unwrap();
    assert_eq!(std::fs::read(&fwd.noisy_path).unwrap(), std::fs::read(&fwd2.noisy_path).unwrap());
    assert_eq!(
        std::fs::read(&rec.indicators[0].indicator_path).unwrap(),
        std::fs::read(&rec2.indicators[0].indicator_path).unwrap()
    );
    assert_eq!(
        std::fs::read(&rec.indicators[0].contour_path).unwrap(),
        std::fs::read(&rec2.indicators[0].contour_path).unwrap()
    );
}

#[test]
fn reconstruct_rejects_corrupt_container() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"not a matrix").unwrap();
    assert!(matches!(cmd_reconstruct(&cfg, &bad), Err(Error::Format(_))));
    assert!(cmd_reconstruct(&cfg, &dir.path().join("missing.bin")).is_err());
}

#[test]
fn impedance_from_exact_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let rep = cmd_impedance(&config_in(dir.path()), &[]).unwrap();
    assert!((rep.recovery.eta - Complex64::new(5.0, 2.0)).norm() < 1e-6);
    assert!((rep.recovery.gamma - Complex64::new(10.0, 1.0)).norm() < 1e-6);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep.result_path).unwrap()).unwrap();
    assert!(json["eta_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(json["source"], "synthetic");
}

#[test]
fn impedance_from_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    // the synthetic run writes its pairs; feed them back in
    cmd_impedance(&cfg, &[]).unwrap();
    let files = vec![dir.path().join("cauchy_pair_0.csv"), dir.path().join("cauchy_pair_1.csv")];
    let rep = cmd_impedance(&cfg, &files).unwrap();
    assert!((rep.recovery.eta - Complex64::new(5.0, 2.0)).norm() < 1e-6);
    assert!(rep.truth.is_none());
}

#[test]
fn impedance_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    assert!(cmd_impedance(&cfg, &[dir.path().join("missing.csv")]).is_err());

    // one pair twice: rank-one system
    cmd_impedance(&cfg, &[]).unwrap();
    let p0 = dir.path().join("cauchy_pair_0.csv");
    let pair = gibc_core::io::output::read_cauchy_pair_csv(&p0).unwrap();
    let copy = dir.path().join("copy.csv");
    write_cauchy_pair_csv(&pair, &copy).unwrap();
    assert!(matches!(
        cmd_impedance(&cfg, &[p0, copy]),
        Err(Error::IllConditioned { .. })
    ));
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let cfg = config_in(&blocker.join("sub"));
    assert!(cmd_forward(&cfg).is_err());
}

#[test]
fn demo_runs_quickly_and_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let rep = cmd_demo(dir.path()).unwrap();
    assert!(rep.total_seconds < 60.0);
    let summary = std::fs::read_to_string(&rep.summary_path).unwrap();
    assert!(summary.contains("separation ratio"));
    assert!(rep.reconstruct.indicators[0].separation_ratio.unwrap() > 3.0);
    assert!(rep.reconstruct.indicators[0].contour_count > 0);
    for f in ["indicator_W.csv", "contour_W.csv", "impedance.json", "gap_matrix_noisy.bin"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
