use std::path::Path;
use std::process::{Command, Output};

fn ballwalk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ballwalk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BALLWALK_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn flat_circle_spectrum_matches_the_sinc_symbol() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ballwalk(&["spectrum", "--manifold", "flat_torus", "--d", "1", "--h", "0.1"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(tmp.path().join("spectrum/spectrum.csv"));
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let k_col = header.iter().position(|c| *c == "k").unwrap();
    let mu_col = header.iter().position(|c| *c == "mu").unwrap();
    let row: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').collect::<Vec<_>>()).find(|r| r[k_col] == "1").unwrap();
    let mu: f64 = row[mu_col].parse().unwrap();
    assert!((mu - 0.1f64.sin() / 0.1).abs() < 1e-15, "{mu}");
    // 17 significant digits: one leading digit, a point, 16 more.
    assert_eq!(row[mu_col].split('e').next().unwrap().len(), 18);
}

#[test]
fn malformed_config_leaves_no_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[kernel]\nhx = [0.1]\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = ballwalk(&["gamma", "--config", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hx"));
    assert!(!out_dir.exists());
}

#[test]
fn out_of_range_parameter_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = ballwalk(&["spectrum", "--manifold", "sphere2", "--h", "5.0"], &out_dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ballwalk(&["frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "timing.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_and_worker_counts_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["excursion", "--manifold", "flat_torus", "--d", "2", "--h", "0.1", "--trials", "4000", "--seed", "7"];
    let mut runs = Vec::new();
    for (i, workers) in ["1", "3", "3"].into_iter().enumerate() {
        let root = tmp.path().join(format!("run{i}"));
        let mut a = args.to_vec();
        a.extend(["--workers", workers]);
        let out = ballwalk(&a, &root);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(artifacts(&root.join("excursion")));
    }
    assert!(runs[0].len() >= 4);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn environment_overrides_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ballwalk"))
        .args(["gamma"])
        .env("BALLWALK_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("gamma/gamma.csv").exists());
}

#[test]
fn verify_manifest_lists_every_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ballwalk(&["verify", "--criteria", "1,5,9"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let manifest: serde_json::Value = serde_json::from_str(&read(tmp.path().join("verify/manifest.json"))).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["seed"], 20_240_601);
    let checks = manifest["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 11);
    let ran: Vec<u64> = checks.iter().filter(|c| c["verdict"] == "pass").map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ran, vec![1, 5, 9]);
    assert!(checks.iter().all(|c| c["verdict"] != "fail"));
    let config = read(tmp.path().join("verify/config.toml"));
    let digest = manifest["config_hash"].as_str().unwrap();
    assert_eq!(digest, ballwalk::output::sha256_hex(config.as_bytes()));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a");
    let out = ballwalk(&["walk", "--manifold", "sphere2", "--h", "0.2", "--steps", "50"], &first);
    assert_eq!(out.status.code(), Some(0));
    let echoed = first.join("walk/config.toml");
    let second = tmp.path().join("b");
    let out = ballwalk(&["walk", "--config", echoed.to_str().unwrap()], &second);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(artifacts(&first.join("walk")), artifacts(&second.join("walk")));
}
