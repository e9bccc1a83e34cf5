use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_polylangevin");

const CONFIG: &str = r#"
seed = 5
[polyhedron]
file = "k.txt"
[model]
kind = "quadratic"
dim = 1
coupling = [0.5]
ell = 1.0
mu = 1.0
R = 0.0
[stream]
kind = "ar1"
coeff = 0.5
[sampler]
eta = 0.05
beta = 2.0
steps = 40
[coupling]
steps = 50
pairs = 40
[averaging]
steps = 20
replicas = 200
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    fs::write(dir.join("k.txt"), "1 | 1\n-1 | 1\n").unwrap();
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn commands_exit_zero_and_write_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    for cmd in ["constants", "skorokhod-check", "averaging-check", "coupling", "sample"] {
        let out = dir.path().join(cmd);
        let (code, stdout, stderr) = run(&[
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--workers",
            "1",
        ]);
        assert_eq!(code, 0, "{cmd}: {stdout}{stderr}");
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["verdict"], "pass");
        assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let go = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let (code, _, _) = run(&[
            "averaging-check",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert_eq!(code, 0);
        fs::read(out.join("averaging.csv")).unwrap()
    };
    let a = go("a", "1");
    assert_eq!(a, go("b", "1"));
    // The hash covers overrides, so compare the data rows only.
    let rows = |v: Vec<u8>| {
        String::from_utf8(v)
            .unwrap()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(rows(a), rows(go("c", "2")));
}

#[test]
fn seed_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let hash = |seed: &str| {
        let out = dir.path().join(seed);
        run(&[
            "sample",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        let s: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        s["config_hash"].as_str().unwrap().to_string()
    };
    assert_ne!(hash("1"), hash("2"));
}

#[test]
fn input_errors_exit_three_and_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let missing = dir.path().join("absent.toml");
    let (code, _, stderr) = run(&[
        "constants",
        "--config",
        missing.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(stderr.contains("absent.toml"), "{stderr}");

    let cfg = write_config(dir.path(), &CONFIG.replace("k.txt", "gone.txt"));
    let (code, _, stderr) = run(&[
        "constants",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(stderr.contains("gone.txt"), "{stderr}");

    let cfg = write_config(dir.path(), &CONFIG.replace("eta = 0.05", "eta = -1.0"));
    let (code, _, _) = run(&[
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn strict_eta_rejects_large_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("eta = 0.05", "eta = 0.3"));
    let out = dir.path().join("o");
    let args = [
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    let (code, _, stderr) = run(&args);
    assert_eq!(code, 0);
    assert!(stderr.contains("warning"));
    let mut strict = args.to_vec();
    strict.push("--strict-eta");
    assert_eq!(run(&strict).0, 3);
}
