use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_remotal-lab"));
    c.env_remove("REMOTAL_LAB_CAP");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn list_is_stable_and_complete() {
    let out = run(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "paper:example-sign-continuity",
            "paper:example-divergence",
            "paper:example-maximizing",
            "paper:example-compactness",
            "paper:theorem-z1-battery",
            "paper:theorem-maximizing-battery",
            "paper:theorem-z2-max-chebyshev-battery",
            "paper:theorem-partial-compactness-battery",
            "paper:gauge-div-battery",
            "paper:gauge-ratio-sign-subtlety",
        ]
    );
    assert_eq!(run(&["list"]).stdout, text.into_bytes());
}

#[test]
fn sign_continuity_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "paper:example-sign-continuity", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("paper_example-sign-continuity.json"));
    assert_eq!(report["result"]["preimage"]["outcome"], "ConvergesToZero");
    assert_eq!(report["result"]["image"]["outcome"], "ConvergesToZero");
    let csv = report["traces"]["preimage"].as_str().unwrap();
    let text = fs::read_to_string(dir.path().join(csv)).unwrap();
    assert!(text.starts_with("n,alpha,beta,count,density\n1,1,1,0,0\n2,1,4,2,0.5\n"), "{text}");
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn divergence_and_compactness_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = run(&["run", "paper:example-divergence", "paper:example-compactness", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let div = read_json(&dir.path().join("paper_example-divergence.json"));
    assert_eq!(div["result"]["aggregate"], "ConvergesToZero");
    for b in div["result"]["per_bound"].as_array().unwrap() {
        assert_eq!(b["verdict"]["outcome"], "ConvergesToZero");
    }
    let comp = read_json(&dir.path().join("paper_example-compactness.json"));
    assert_eq!(comp["result"]["x_ab_compact"]["positive"], true);
    assert_eq!(comp["result"]["x_ab_compact"]["t_verdict"]["outcome"], "ConvergesToZero");
    assert_eq!(comp["result"]["x_ab_compact"]["diam_verdict"]["outcome"], "ConvergesToZero");
    assert_eq!(comp["result"]["x_compact"]["diam_verdict"]["outcome"], "DoesNotConverge");
    let slab = fs::read_to_string(dir.path().join(comp["traces"]["slab"].as_str().unwrap())).unwrap();
    assert!(slab.starts_with("n,t_n,slab_size,diam\n1,1,2,2\n2,0,0,0\n"), "{slab}");
}

#[test]
fn runs_are_byte_identical_across_jobs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let targets =
        ["paper:example-maximizing", "paper:theorem-z2-max-chebyshev-battery", "paper:gauge-ratio-sign-subtlety"];
    let mut args_a = vec!["run"];
    args_a.extend(targets);
    args_a.extend(["--out", a.path().to_str().unwrap()]);
    let mut args_b = vec!["run"];
    args_b.extend(targets);
    args_b.extend(["--out", b.path().to_str().unwrap(), "--jobs", "3"]);
    let oa = run(&args_a);
    let ob = run(&args_b);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
    let subtle = read_json(&a.path().join("paper_gauge-ratio-sign-subtlety.json"));
    assert_eq!(subtle["result"]["status"], "ConclusionViolated");
}

#[test]
fn seed_override_changes_battery_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let name = "paper:theorem-partial-compactness-battery";
    assert!(run(&["run", name, "--out", a.path().to_str().unwrap(), "--seed", "1"]).status.success());
    assert!(run(&["run", name, "--out", b.path().to_str().unwrap(), "--seed", "2"]).status.success());
    let ra = read_json(&a.path().join("paper_theorem-partial-compactness-battery.json"));
    let rb = read_json(&b.path().join("paper_theorem-partial-compactness-battery.json"));
    assert_eq!(ra["result"]["seed"], 1);
    assert_eq!(rb["result"]["seed"], 2);
    assert_eq!(ra["result"]["passed"], true);
    assert_ne!(ra["result"]["instances"], rb["result"]["instances"]);
}

const CUSTOM: &str = r#"{
  "scenarios": [
    {
      "name": "alternating",
      "analysis": {
        "op": "convergence",
        "sequence": {"family": "alternating"},
        "limit": 1.0,
        "eps": 0.5,
        "window": {"family": "classical"},
        "scan": {"horizon": 100}
      }
    },
    {
      "name": "square-center",
      "analysis": {
        "op": "chebyshev",
        "set": {"cloud": [[0, 0], [1, 0], [0, 1]]},
        "space": {"dim": 2, "p": "inf"}
      }
    }
  ]
}"#;

#[test]
fn config_file_runs_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, CUSTOM).unwrap();
    let out = run(&["validate-config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("2 scenario(s) ok"));

    let res = dir.path().join("out");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", res.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let alt = read_json(&res.join("alternating.json"));
    assert_eq!(alt["result"]["verdict"]["outcome"], "DoesNotConverge");
    let cheb = read_json(&res.join("square-center.json"));
    assert!((cheb["result"]["radius"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn bad_config_names_the_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, CUSTOM.replace("\"alternating\"}", "\"alternate\"}")).unwrap();
    for cmd in ["validate-config", "run"] {
        let out = run(&[cmd, cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("scenarios[0].analysis.sequence.family"), "{err}");
        assert!(err.contains("alternate"), "{err}");
    }
}

#[test]
fn missing_file_and_unknown_builtin() {
    let out = run(&["run", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/cfg.json"));
    let out = run(&["run", "paper:no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown built-in"));
}

#[test]
fn cap_env_overrides_enumeration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = bin()
        .env("REMOTAL_LAB_CAP", "100")
        .args(["run", "paper:example-sign-continuity", "--out", d])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
    let out = bin().env("REMOTAL_LAB_CAP", "lots").args(["list"]).output().unwrap();
    assert!(out.status.success());
    let out =
        bin().env("REMOTAL_LAB_CAP", "lots").args(["run", "paper:example-divergence", "--out", d]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("REMOTAL_LAB_CAP"));
}
