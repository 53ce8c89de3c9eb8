use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wedgetrace(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedgetrace"))
        .args(args)
        .current_dir(dir)
        .env_remove("WEDGETRACE_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr_events(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stderr)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("stderr line is not json ({e}): {l}")))
        .collect()
}

#[test]
fn spectrum_of_generic_fixture_has_four_curves_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = wedgetrace(&["spectrum", "--fixture", "linebundle-generic", "--grid", "64", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("res/spectrum.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let hdr = rd.headers().unwrap().clone();
    let col = |n: &str| hdr.iter().position(|h| h == n).unwrap();
    let (m, id) = (col("method"), col("curve_id"));
    let mut curves: BTreeSet<(String, String)> = BTreeSet::new();
    let mut rows = 0;
    for r in rd.records() {
        let r = r.unwrap();
        curves.insert((r[m].to_string(), r[id].to_string()));
        rows += 1;
    }
    assert_eq!(rows, 2 * 64 * 4);
    for method in ["companion", "contour"] {
        assert_eq!(curves.iter().filter(|(mm, _)| mm == method).count(), 4, "{method}");
    }
    assert!(stderr_events(&out).iter().any(|e| e["event"] == "computed"));
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"grid\": 64, \"bogus\": 1}").unwrap();
    let out = wedgetrace(&["spectrum", "--config", "bad.json", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("res").exists());
    let ev = stderr_events(&out);
    assert_eq!(ev.last().unwrap()["kind"], "validation");
}

#[test]
fn bad_flags_and_unknown_names_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--fixture", "no-such-fixture", "--out", "res"],
        vec!["spectrum", "--fixture", "linebundle-generic", "--strip", "1", "--out", "res"],
        vec!["spectrum", "--fixture", "linebundle-generic", "--grid", "2", "--out", "res"],
        vec!["fixture", "--out", "res"],
        vec!["check", "--suite", "unknown"],
    ] {
        let out = wedgetrace(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!dir.path().join("res").exists(), "{args:?}");
    }
}

#[test]
fn numerical_failure_exits_3() {
    // A contour through the spectrum at y = 0 (sigma = 0.7i) is rejected by the solver.
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"fixture": "linebundle-generic", "contour": {"kind": "circle", "center": [0.0, 0.0], "radius": 0.7}}"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let out = wedgetrace(&["spectrum", "--config", "cfg.json", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("res").exists());
    assert_eq!(stderr_events(&out).last().unwrap()["kind"], "numerical");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    for (threads, sub) in [("1", "a"), ("3", "b")] {
        for cmd in ["spectrum", "pairing"] {
            let out = wedgetrace(&[cmd, "--fixture", "linebundle-crossing", "--grid", "16", "--threads", threads, "--out", sub], dir.path());
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for f in ["spectrum.csv", "pairing.csv", "smoothness.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between thread counts");
    }
}

#[test]
fn threads_default_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wedgetrace"))
        .args(["fixture", "--fixture", "classical-m1", "--out", "res"])
        .current_dir(dir.path())
        .env("WEDGETRACE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let ev = stderr_events(&out);
    assert_eq!(ev.iter().find(|e| e["event"] == "computed").unwrap()["threads"], 2);
    assert!(dir.path().join("res/operator.json").exists());
}

#[test]
fn varorder_norm_of_constant_samples() {
    // Constant data on 8 points: only the zero mode, whose weight is 1 for s = 0.
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("y,re_0,im_0,re_1,im_1\n");
    for j in 0..8 {
        csv += &format!("{},1.0,0.0,0.0,0.0\n", 2.0 * std::f64::consts::PI * j as f64 / 8.0);
    }
    fs::write(dir.path().join("u.csv"), csv).unwrap();
    let out = wedgetrace(&["varorder", "--samples", "u.csv", "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/norm.json")).unwrap()).unwrap();
    let norm: f64 = v["norm"].as_str().unwrap().parse().unwrap();
    assert!((norm - 1.0).abs() < 1e-12, "{norm}");
    assert!(dir.path().join("res/decomposition.json").exists());
}

#[test]
fn check_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = wedgetrace(&["check", "--suite", "paper"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 11, "{stdout}");
}
