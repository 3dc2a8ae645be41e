use std::path::Path;
use std::process::{Command, Output};

use ctrajopt::config::{ExperimentConfig, GridConfig};
use ctrajopt::geometry::DetectorSpec;

fn ctrajopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctrajopt")).args(args).output().expect("binary runs")
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk_scale(1);
    cfg.phantom.grid = GridConfig { size: 36, spacing_mm: 2.7 };
    cfg.detector = DetectorSpec {
        rows: 24,
        cols: 24,
        pixel_pitch: 18.0,
        source_to_object: 500.0,
        source_to_detector: 1000.0,
    };
    cfg.coarse.grid = GridConfig { size: 16, spacing_mm: 6.0 };
    cfg.coarse.iterations = 4;
    cfg.final_recon.grid = GridConfig { size: 24, spacing_mm: 4.0 };
    cfg.final_recon.iterations = 4;
    cfg.sphere.n_side_low = 1;
    cfg.sphere.n_side_high = 3;
    cfg.loop_.budget = 3;
    cfg.baselines.whole_sphere_n_side = 1;
    cfg.baselines.random_n_side = 3;
    cfg
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, small_config().to_toml_string().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn phantom_writes_volumes_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctrajopt(&["phantom", "--sample", "2", "--grid", "40", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert!(!listed.trim().is_empty());
    for line in listed.lines() {
        assert!(Path::new(line).exists(), "{line}");
    }
    let raw = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "raw"))
        .count();
    assert!(raw >= 2);
}

#[test]
fn phantom_is_byte_identical_across_invocations() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(ctrajopt(&["phantom", "--sample", "1", "--grid", "48", "--out", s(d.path())]).status.success());
    }
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn unknown_sample_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctrajopt(&["phantom", "--sample", "7", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sample"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nope.toml");
    let out = ctrajopt(&["run", "--config", s(&cfg), "--strategy", "optimized", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_strategy_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = ctrajopt(&["run", "--config", &cfg, "--strategy", "spiral", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_config_round_trips() {
    let out = ctrajopt(&["default-config", "--sample", "2"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_toml_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::desk_scale(2));
}

#[test]
fn metrics_without_run_dir_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = dir.path().join("profiles.toml");
    std::fs::write(&profiles, "aggregation = \"mean\"\nprofiles = []\n").unwrap();
    let missing = dir.path().join("missing");
    let out = ctrajopt(&["metrics", "--runs", s(&missing), "--profiles", s(&profiles)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let opt = dir.path().join("optimized");
    let rnd = dir.path().join("random");

    let out = ctrajopt(&["run", "--config", &cfg, "--strategy", "optimized", "--out", s(&opt), "--verbose"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory.csv", "score_map.csv", "score_log.csv", "recon.json", "residuals.csv", "manifest.json"] {
        assert!(opt.join(f).exists(), "missing {f}");
    }
    assert!(opt.join("probabilities/iter_0001.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(opt.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["strategy"], "optimized");
    let acquired = manifest["acquired_images"].as_u64().unwrap();

    let out = ctrajopt(&[
        "run", "--config", &cfg, "--strategy", "random", "--out", s(&rnd), "--match-run", s(&opt),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(rnd.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["acquired_images"].as_u64().unwrap(), acquired);

    let profiles = dir.path().join("profiles.toml");
    std::fs::write(
        &profiles,
        "aggregation = \"mean\"\n[[profiles]]\nname = \"x\"\nstart = [2.0, 12.0, 12.0]\nend = [21.0, 12.0, 12.0]\n",
    )
    .unwrap();
    let table = dir.path().join("table.csv");
    let out = ctrajopt(&["metrics", "--runs", s(&opt), s(&rnd), "--profiles", s(&profiles), "--out", s(&table)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("x,optimized,"));
}

#[test]
fn repeated_runs_write_identical_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = ctrajopt(&["run", "--config", &cfg, "--strategy", "whole-sphere", "--seed", "11", "--out", s(d)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["trajectory.csv", "recon.raw", "sinogram.raw"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn checked_in_configs_match_defaults() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for sample in [1u8, 2] {
        let cfg = ExperimentConfig::load(&root.join(format!("desk_sample{sample}.toml"))).unwrap();
        assert_eq!(cfg, ExperimentConfig::desk_scale(sample));
        let text = std::fs::read_to_string(root.join(format!("profiles_sample{sample}.toml"))).unwrap();
        let metrics: ctrajopt::config::MetricsConfig = toml::from_str(&text).unwrap();
        assert_eq!(metrics, cfg.metrics);
    }
}
