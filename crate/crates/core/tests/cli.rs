use std::fs;
use std::path::Path;

use serde_json::Value;
use spikeblock::cli::main_with_args;
use spikeblock::model::read_binary;
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("spikeblock").chain(args.iter().copied()))
}

fn run_with_config(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> i32 {
    let path = out.with_extension("json");
    fs::write(&path, config).unwrap();
    let mut args = vec![cmd, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    run(&args)
}

fn read_mmse(path: &Path) -> Vec<(f64, String, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(|s| s.trim_matches('"')).collect();
            (f[0].parse().unwrap_or(f64::NAN), f[1..f.len() - 2].join(","), f[f.len() - 2].parse().unwrap())
        })
        .collect()
}

const GAUSSIAN_SWEEP: &str = r#"{
    "model": {"kind": "two_group", "alpha": 0.3, "lambda": 1.0, "priors": [{"kind": "gaussian"}, {"kind": "gaussian"}]},
    "sweep": {"variable": "lambda", "values": [0.5, 0.75, 1.0, 1.5, 2.0, 3.0]}
}"#;

#[test]
fn limits_sweep_has_threshold_at_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("limits");
    assert_eq!(run_with_config("limits", GAUSSIAN_SWEEP, &out, &[]), 0);
    let rows = read_mmse(&out.join("mmse.csv"));
    assert!(!rows.is_empty());
    for (lambda, block, mmse) in rows.iter().filter(|r| r.1 == "1,1" || r.1 == "2,2") {
        if *lambda <= 1.0 {
            assert!((mmse - 1.0).abs() < 1e-9, "{block} at {lambda}: {mmse}");
        } else if *lambda == 2.0 {
            assert!((mmse - 0.75).abs() < 1e-6, "{block} at {lambda}: {mmse}");
        } else {
            assert!(*mmse < 1.0);
        }
    }
    assert!(out.join("saddle.json").exists());
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "limits");
}

#[test]
fn limits_without_signal_is_uninformative() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("zero");
    let cfg = r#"{"model": {"kind": "custom", "spec": {"beta": [0.5, 0.5],
        "priors": [{"kind": "gaussian"}, {"kind": "discrete", "atoms": [-1, 1], "probs": [0.5, 0.5]}],
        "lambda": [[0, 0], [0, 0]]}}}"#;
    assert_eq!(run_with_config("limits", cfg, &out, &[]), 0);
    let rows = read_mmse(&out.join("mmse.csv"));
    assert!(rows.iter().all(|r| (r.2 - 1.0).abs() < 1e-12), "{rows:?}");
}

fn wpca(dir: &TempDir, name: &str, sigma2: f64) -> Value {
    let out = dir.path().join(name);
    let cfg = format!(r#"{{"beta0": 1.0, "betas": [1.0], "sigmas": [{}]}}"#, sigma2.sqrt());
    assert_eq!(run_with_config("wpca", &cfg, &out, &[]), 0);
    serde_json::from_str(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap()
}

#[test]
fn wpca_reports_root_and_mse() {
    let dir = TempDir::new().unwrap();
    let above = wpca(&dir, "above", 0.5);
    assert!((above["q0"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((above["mse"].as_f64().unwrap() - 0.75).abs() < 1e-9);
    assert_eq!(above["above_threshold"], true);
    assert_eq!(above["agreement"], true);

    let below = wpca(&dir, "below", 2.0);
    assert_eq!(below["q0"].as_f64().unwrap(), 0.0);
    assert_eq!(below["mse"].as_f64().unwrap(), 1.0);
    assert_eq!(below["above_threshold"], false);
}

const SAMPLE: &str = r#"{
    "model": {"kind": "two_group", "alpha": 0.25, "lambda": 2.0, "priors": [{"kind": "gaussian"}, {"kind": "discrete", "atoms": [-1, 1], "probs": [0.5, 0.5]}]},
    "n": 16, "seed": 9
}"#;

#[test]
fn sample_is_deterministic_and_readable() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_with_config("sample", SAMPLE, &a, &[]), 0);
    assert_eq!(run_with_config("sample", SAMPLE, &b, &[]), 0);
    let (fa, fb) = (a.join("instance.bin"), b.join("instance.bin"));
    assert_eq!(fs::read(&fa).unwrap(), fs::read(&fb).unwrap());

    let obs = read_binary(&fa).unwrap();
    assert_eq!(obs.sizes, vec![16, 16]);
    assert_eq!(obs.truth.len(), 2);
    assert!(obs.truth[1].iter().all(|x| x.abs() == 1.0));

    let c = dir.path().join("c");
    assert_eq!(run_with_config("sample", SAMPLE, &c, &["--seed", "10"]), 0);
    assert_ne!(fs::read(&fa).unwrap(), fs::read(c.join("instance.bin")).unwrap());
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["limits", "--bogus"]), 2);
    assert_eq!(run(&["--help"]), 0);

    let bad = r#"{"beta0": 1.0, "betas": [1.0], "sigmas": [1.0], "sigma": 2}"#;
    assert_eq!(run_with_config("wpca", bad, &dir.path().join("bad"), &[]), 2);
    let domain = r#"{"beta0": 1.0, "betas": [1.0], "sigmas": [-1.0]}"#;
    assert_eq!(run_with_config("wpca", domain, &dir.path().join("domain"), &[]), 2);

    let huge = SAMPLE.replace("\"n\": 16", "\"n\": 200000");
    assert_eq!(run_with_config("sample", &huge, &dir.path().join("huge"), &[]), 4);
    assert!(!dir.path().join("huge").join("instance.bin").exists());

    assert_eq!(run(&["experiment", "--preset", "nope", "--out", dir.path().join("p").to_str().unwrap()]), 2);
}

#[test]
fn experiment_writes_results_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("exp");
    let cfg = r#"{
        "model": {"kind": "two_group", "lambda": 2.0, "priors": [{"kind": "gaussian"}, {"kind": "gaussian"}]},
        "n": 32, "sweep": {"variable": "alpha", "values": [0.0, 0.5]},
        "algorithms": [{"kind": "amp"}, {"kind": "joint_pca"}], "trials": 2, "base_seed": 1
    }"#;
    assert_eq!(run_with_config("experiment", cfg, &out, &["--workers", "1", "--trace"]), 0);
    for name in ["mmse.csv", "results.csv", "trials.csv", "manifest.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let traces = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("trace_amp"))
        .count();
    assert_eq!(traces, 2);
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 2);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["trials"], 2);
    assert!(manifest["seed_rule"].as_str().unwrap().contains("splitmix64"));
}
