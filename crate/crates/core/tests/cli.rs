use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use djf::io::{read_image, write_image};
use djf::net::{build_network, serialize, WeightInit};
use djf::synth::{scene, SceneParams};
use djf::{Model, NetworkConfig, Tensor};
use sha2::{Digest, Sha256};

fn djf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_djf")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn toy_manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy/manifest.jsonl")
}

fn tiny_config() -> NetworkConfig {
    NetworkConfig { n1: 4, n2: 2, f1: 3, f3: 3, init: WeightInit::He, seed: 1, ..NetworkConfig::default() }
}

/// A tiny checkpoint plus a 32×32 scene and its 4× decimated depth.
fn workspace() -> (tempfile::TempDir, PathBuf, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let model: Model<f32> = build_network(&tiny_config()).unwrap();
    let model_path = dir.path().join("tiny.djf");
    std::fs::write(&model_path, serialize(&model)).unwrap();
    let s = scene(&SceneParams::new(32, 32), 4);
    let low = djf::baseline::nearest_downsample(&s.depth, 4).unwrap();
    let (rgb, low_path) = (dir.path().join("rgb.ppm"), dir.path().join("low.pgm"));
    write_image(&rgb, &s.rgb).unwrap();
    write_image(&low_path, &low).unwrap();
    (dir, model_path, rgb, low_path)
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(djf(&[]).status.code(), Some(1));
    assert_eq!(djf(&["train"]).status.code(), Some(1));
    assert_eq!(djf(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_files_are_data_errors() {
    let out = djf(&["inspect-checkpoint", "--model", "/nonexistent/model.djf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn apply_with_mismatched_sizes_exits_2() {
    let (dir, model, rgb, _) = workspace();
    let wrong = dir.path().join("wrong.pgm");
    write_image(&wrong, &Tensor::filled(1, 5, 5, 0.5)).unwrap();
    let out = dir.path().join("out.pgm");
    let r = djf(&["apply", "upsample", "--model", p(&model), "--target", p(&wrong), "--guidance", p(&rgb), "--scale", "4", "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!out.exists());
}

#[test]
fn apply_upsample_matches_guidance_size() {
    let (dir, model, rgb, low) = workspace();
    let out = dir.path().join("up.pgm");
    let r = djf(&["apply", "upsample", "--model", p(&model), "--target", p(&low), "--guidance", p(&rgb), "--scale", "4", "--out", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_image(&out).unwrap().shape(), (1, 32, 32));
}

#[test]
fn inspect_checkpoint_agrees_with_param_count() {
    let (_dir, model, _, _) = workspace();
    let r = djf(&["inspect-checkpoint", "--model", p(&model)]);
    assert!(r.status.success());
    let info: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    let count = djf::net::param_count(&tiny_config()) as u64;
    assert_eq!(info["param_count"].as_u64(), Some(count));
    assert_eq!(info["payload_bytes"].as_u64(), Some(4 * count));
    assert_eq!(info["config"]["n1"].as_u64(), Some(4));
}

#[test]
fn training_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"n1":4,"n2":2,"f1":3,"f3":3,"init":"he"}"#;
    let train_cfg = r#"{"patch_size":8,"patches_total":32,"batch_size":8,"learning_rate":0.01,"epochs":5}"#;
    let digest = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let r = djf(&[
            "--threads", "1", "train", "--manifest", p(&toy_manifest()), "--scale", "4", "--seed", seed,
            "--config", config, "--train-config", train_cfg, "--out", p(&out),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        hex::encode(Sha256::digest(std::fs::read(&out).unwrap()))
    };
    let a = digest("a.djf", "7");
    assert_eq!(a, digest("b.djf", "7"));
    assert_ne!(a, digest("c.djf", "8"));
    let csv = std::fs::read_to_string(dir.path().join("a.djf.loss.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,loss,seconds"));
    assert_eq!(lines.count(), 20);
}

#[test]
fn eval_baseline_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = djf(&["eval", "--manifest", p(&toy_manifest()), "--baseline", "bicubic", "--scale", "4", "--out", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let images = report["images"].as_array().unwrap();
    assert_eq!(images.len(), 8);
    let mean: f64 = images.iter().map(|i| i["rmse"].as_f64().unwrap()).sum::<f64>() / 8.0;
    assert!((mean - report["mean"].as_f64().unwrap()).abs() < 1e-9);
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn baseline_and_features_and_separate_write_images() {
    let (dir, model, rgb, low) = workspace();
    let up = dir.path().join("jbu.pgm");
    let r = djf(&["baseline", "jbu", "--target", p(&low), "--guidance", p(&rgb), "--scale", "4", "--out", p(&up)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_image(&up).unwrap().shape(), (1, 32, 32));

    let maps = dir.path().join("maps");
    let r = djf(&["features", "--model", p(&model), "--target", p(&up), "--guidance", p(&rgb), "--layer", "1", "--out", p(&maps)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(std::fs::read_dir(&maps).unwrap().count(), 4);
    let r = djf(&["features", "--model", p(&model), "--target", p(&up), "--guidance", p(&rgb), "--layer", "4", "--out", p(&maps)]);
    assert_eq!(r.status.code(), Some(2));

    let sep = dir.path().join("sep.pgm");
    let r = djf(&["separate", "--model", p(&model), "--input", p(&up), "--iterations", "2", "--out", p(&sep)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_image(&sep).unwrap().shape(), (1, 32, 32));
}
