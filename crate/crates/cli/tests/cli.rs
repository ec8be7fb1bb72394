use std::fs;
use std::path::Path;
use std::process::Command;

use nlle_cli::RunManifest;

fn nlle() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlle"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const TOY: &str = r#"
[model]
name = "toy-bifurcation"
parameters = { lambda = 1.0 }

[sampling]
seed = 7

[analysis]
kind = "verify-toy"
n_basin = 100
"#;

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn verify_toy_digests_repeat() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "toy.toml", TOY);
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = nlle()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--output")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let m = manifest(&out);
        let names: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(names, ["verify-toy.csv", "verify-toy.json"]);
        for f in &m.files {
            let bytes = fs::read(out.join(&f.path)).unwrap();
            assert_eq!(nlle_cli::output::sha256_hex(&bytes), f.sha256);
        }
        // every file in the directory is covered by the manifest
        let mut on_disk: Vec<String> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "manifest.json")
            .collect();
        on_disk.sort();
        assert_eq!(on_disk, names);
        digests.push(m.files.iter().map(|f| f.sha256.clone()).collect::<Vec<_>>());
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn unknown_key_exits_2_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{TOY}\n[perturbation]\nepsilonn = 1e-5\n");
    let cfg = write(tmp.path(), "bad.toml", &text);
    let out = tmp.path().join("out");
    let res = nlle()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("epsilonn"));
    assert!(!out.exists());

    let res = nlle().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn validate_accepts_good_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "toy.toml", TOY);
    let res = nlle().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("verify-toy"));
}

#[test]
fn computation_failure_exits_3_and_cleans_up() {
    // lambda = 400 makes the cubic drift blow up within the default step
    let tmp = tempfile::tempdir().unwrap();
    let text = TOY.replace("lambda = 1.0", "lambda = 400.0");
    let cfg = write(tmp.path(), "blowup.toml", &text);
    let out = tmp.path().join("out");
    let res = nlle()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("seed 7") && err.contains("basin"), "{err}");
    assert!(!out.exists());
}

#[test]
fn nlle_default_grid_writes_120_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
[model]
name = "lorenz63"
[sampling]
count = 4
seed = 3
[perturbation]
directions_per_point = 2
[analysis]
kind = "nlle"
"#;
    let cfg = write(tmp.path(), "nlle.toml", text);
    let out = tmp.path().join("out");
    let status = nlle()
        .args(["run", "--workers", "2", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("nlle.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,mean_nlle,rgie,stderr"));
    let taus: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(taus.len(), 120);
    assert!(taus.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = nlle_cli::ExperimentConfig::from_path(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 7);
}
