use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mcfsing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcfsing"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sphere_archive_has_one_extinction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sphere");
    let o = mcfsing(&["simulate", "--kind", "sphere", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let events = read_json(&out.join("singular_events.json"));
    let events = events.as_array().unwrap();
    assert_eq!(events.len(), 1);
    for f in ["manifest.json", "events.csv", "singular_events.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn dumbbell_pinches_then_loses_both_bulbs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("db");
    let o = mcfsing(&["simulate", "--kind", "dumbbell", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("events.csv")).unwrap();
    let kinds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(kinds, ["pinch", "extinction", "extinction"]);
    assert!(out.join("neck.csv").exists());
    assert!(out.join("profiles.svg").exists());

    let o = mcfsing(&["analyze", p(&out), "--which", "monotonicity"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&out.join("analysis/monotonicity.json"));
    assert_eq!(m["holds"], Value::Bool(true));

    // the neck is far from the cylinder at the sampled scales, so the
    // window is rejected without a verdict failure
    let o = mcfsing(&["analyze", p(&out), "--which", "clearing"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = read_json(&out.join("analysis/clearing.json"));
    assert_eq!(c["events"][0]["emptiness"]["all_certified"], Value::Bool(true));

    let report = dir.path().join("report");
    let o = mcfsing(&["report", p(&out), "--out", p(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&report.join("summary.json"));
    for k in [
        "density",
        "monotonicity",
        "cylfit",
        "strata",
        "reifenberg",
        "cone",
        "clearing",
    ] {
        assert!(s.get(k).is_some(), "{k}");
    }
    assert_eq!(s["strata"]["nested"], Value::Bool(true));
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(
        code(&mcfsing(&[
            "simulate",
            "--kind",
            "sphere",
            "--r0",
            "-1",
            "--out",
            p(&out)
        ])),
        2
    );
    assert_eq!(code(&mcfsing(&["simulate", "--kind", "sphere"])), 2);
    assert_eq!(code(&mcfsing(&["verify", "--kind", "four_points", "--eps", "2"])), 2);
    assert_eq!(code(&mcfsing(&["verify", "--kind", "nonsense"])), 2);
    assert_eq!(code(&mcfsing(&["analyze", p(&out), "--which", "density"])), 2);
    assert_eq!(code(&mcfsing(&["frobnicate"])), 2);
}

#[test]
fn monotonicity_options() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sphere");
    assert_eq!(code(&mcfsing(&["simulate", "--kind", "sphere", "--out", p(&out)])), 0);
    let o = mcfsing(&["analyze", p(&out), "--which", "monotonicity", "--tol", "-1"]);
    assert_eq!(code(&o), 2);
    let o = mcfsing(&[
        "analyze",
        p(&out),
        "--which",
        "monotonicity",
        "--point",
        "0,0,2",
        "--time",
        "1",
        "--tau-max",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_four_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = mcfsing(&["verify", "--kind", "four_points", "--eps", "0.1", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    assert!(checks.iter().all(|c| c["pass"] == Value::Bool(true)));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[simulate]\nkind = \"sphere\"\nr0 = 3.0\n\n[synthetic]\nkind = \"figure1\"\ncount = 10\n",
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&mcfsing(&["--config", p(&cfg), "simulate", "--out", p(&a)])), 0);
    assert_eq!(
        code(&mcfsing(&[
            "--config",
            p(&cfg),
            "simulate",
            "--out",
            p(&b),
            "--r0",
            "1.5"
        ])),
        0
    );
    let t = |d: &Path| {
        read_json(&d.join("singular_events.json"))[0]["location"]["t"]
            .as_f64()
            .unwrap()
    };
    // a sphere of radius r in R^3 vanishes at r^2 / 4
    assert!((t(&a) - 9.0 / 4.0).abs() < 1e-9);
    assert!((t(&b) - 2.25 / 4.0).abs() < 1e-9);

    let cloud = dir.path().join("f.json");
    assert_eq!(
        code(&mcfsing(&["--config", p(&cfg), "synthetic", "--out", p(&cloud)])),
        0
    );
    assert_eq!(read_json(&cloud).as_array().unwrap().len(), 11);

    std::fs::write(&cfg, "[simulate]\nradius = 1.0\n").unwrap();
    assert_eq!(code(&mcfsing(&["--config", p(&cfg), "simulate", "--out", p(&a)])), 2);
}

#[test]
fn archives_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        assert_eq!(code(&mcfsing(&["simulate", "--kind", "torus", "--out", p(d)])), 0);
    }
    for f in ["singular_events.json", "events.csv", "neck.csv", "manifest.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
