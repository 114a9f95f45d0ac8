use std::path::Path;
use std::process::{Command, Output};

fn replicate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replicate"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn failing_verification_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("third.json");
    std::fs::write(
        &spec,
        r#"{"dim": 2, "shifts": [[1, 2, "1/3"]], "profile": {"k": 3, "rho": "0.25", "probes": 0, "witness": [0, 0]}}"#,
    )
    .unwrap();
    let out = dir.path().join("profile.json");
    let run = replicate(&[
        "partition",
        "verify",
        "--spec",
        path(&spec),
        "--out",
        path(&out),
    ]);
    assert_eq!(run.status.code(), Some(1));
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written["profile"]["max_count"], 4);

    let ok = replicate(&["partition", "verify", "--spec", path(&spec), "--rho", "0.1"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn invalid_input_exits_two() {
    let run = replicate(&[
        "coins",
        "estimate-list",
        "--bias",
        "0.3,1.5",
        "--eps",
        "0.1",
        "--delta",
        "0.05",
    ]);
    assert_eq!(run.status.code(), Some(2));
    let run = replicate(&["partition", "verify"]);
    assert_eq!(run.status.code(), Some(2));
    let run = replicate(&[]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn config_file_runs_an_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"algorithm": "coin-cert", "dim": 2, "eps": 0.2, "delta": 0.25,
            "truth": [0.3, 0.55], "runs": 5, "seed": 4,
            "certificates": {"mode": "fixed", "certificates": [[1], [3]]}}"#,
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let run = replicate(&["--config", path(&cfg), "--out", path(&out)]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema"], "replicable-report");
    assert_eq!(report["version"], 1);
    assert_eq!(report["config"]["seed"], 4);
    assert_eq!(report["certificates"]["rows"].as_array().unwrap().len(), 2);

    let both = replicate(&["--config", path(&cfg), "report", "show", path(&out)]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn report_show_exports_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let run = replicate(&[
        "coins",
        "estimate-cert",
        "--bias",
        "0.3,0.55",
        "--eps",
        "0.2",
        "--delta",
        "0.25",
        "--runs",
        "4",
        "--out",
        path(&out),
    ]);
    assert!(run.status.success());
    let freq = replicate(&["report", "show", path(&out), "--csv", "frequencies"]);
    let text = String::from_utf8(freq.stdout).unwrap();
    assert!(text.starts_with("rank,id,count,frequency,error,x1,x2\n"));
    let certs = replicate(&["report", "show", path(&out), "--csv", "certificates"]);
    assert_eq!(String::from_utf8(certs.stdout).unwrap().lines().count(), 9);
    let summary = replicate(&["report", "show", path(&out)]);
    assert!(String::from_utf8(summary.stdout)
        .unwrap()
        .contains("replicating certificates"));
}

#[test]
fn seeds_change_samples() {
    let run = |seed: &str| {
        replicate(&[
            "coins",
            "estimate-list",
            "--bias",
            "0.3,0.5",
            "--eps",
            "0.1",
            "--delta",
            "0.05",
            "--runs",
            "50",
            "--seed",
            seed,
        ])
        .stdout
    };
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn search_writes_a_verified_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("found.json");
    let run = replicate(&[
        "partition",
        "search",
        "--dim",
        "2",
        "--candidates",
        "10",
        "--out",
        path(&out),
    ]);
    assert!(run.status.success());
    let verify = replicate(&["partition", "verify", "--spec", path(&out)]);
    assert_eq!(verify.status.code(), Some(0));
}
