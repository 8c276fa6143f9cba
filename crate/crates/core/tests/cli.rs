use imrecon::scenario::Report;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn imrecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imrecon"))
        .args(args)
        .env("IMRECON_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run(command: &str, scenario: &Path, out: &Path) -> Output {
    imrecon(&[
        command,
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ])
}

fn report(dir: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn counterexample_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ce");
    let o = run("counterexample", &scenarios().join("counterexample.json"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r.status, "ok");
    assert_eq!(r.command, "counterexample");
    assert_eq!(r.metrics["radius"], 2.404825557695773);
    assert!(r.metrics["max_abs_im"] <= 1e-11);
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("angle,x,y,re_psi,im_psi\n"));
    assert_eq!(csv.lines().count(), 721);
}

#[test]
fn pipeline_point_source_within_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("pipeline", &scenarios().join("pipeline_point_source.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(report(tmp.path()).metrics["max_rel_error"] <= 1e-2);
    let csv = std::fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("x,y,re_psi,im_psi,re_ref,im_ref,abs_err\n"));
    assert!(tmp.path().join("coefficients.json").exists());
}

#[test]
fn extract_reports_f0_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("extract", &scenarios().join("extract.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let s = report(tmp.path()).metrics["f0_slope"];
    assert!((-1.2..=-0.8).contains(&s), "slope {s}");
}

#[test]
fn malformed_json_leaves_no_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"bad\", \"kappa\": 1,\n  \"line\": ").unwrap();
    let out = tmp.path().join("out");
    let o = run("synth", &bad, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(!out.exists());
}

#[test]
fn missing_input_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run("scatter", &scenarios().join("synth.json"), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("potential"));
    assert!(!out.exists());
    let o = imrecon(&["fly", "--scenario", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("propagate.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["trace"]["half_length_wavelengths"] = serde_json::json!(2.0);
    let path = tmp.path().join("short.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let out = tmp.path().join("out");
    let o = run("propagate", &path, &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r.status.starts_with("failed") && r.status.contains("coverage"), "{}", r.status);
    assert!(!out.join("results.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["synth", "pipeline_mix"] {
        let cmd = if name == "synth" { "synth" } else { "pipeline" };
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        assert_eq!(run(cmd, &scenarios().join(format!("{name}.json")), &a).status.code(), Some(0));
        assert_eq!(run(cmd, &scenarios().join(format!("{name}.json")), &b).status.code(), Some(0));
        for f in ["results.csv", "report.json"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{name}/{f}");
        }
    }
}

#[test]
fn golden_suite_meets_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, &str, &str, f64); 7] = [
        ("pipeline_mix", "pipeline", "max_rel_error", 1e-2),
        ("propagate", "propagate", "max_rel_error", 1e-3),
        ("karp", "karp", "max_rel_error", 1e-6),
        ("extract", "extract", "rel_error_f2", 1e-4),
        ("scatter", "scatter", "psi_plus_rel_error", 1e-3),
        ("gkl", "gkl", "max_rel_error", 1e-2),
        ("synth", "synth", "noise_sigma", 1e-6),
    ];
    for (name, cmd, metric, bound) in cases {
        let out = tmp.path().join(name);
        let o = run(cmd, &scenarios().join(format!("{name}.json")), &out);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let m = report(&out).metrics[metric];
        assert!(m <= bound, "{name}: {metric} = {m:e}");
    }
    let header = std::fs::read_to_string(tmp.path().join("gkl/results.csv")).unwrap();
    assert!(header.starts_with("s_x,s_y,re_recovered,im_recovered,re_direct,im_direct,abs_err\n"));
    assert!(tmp.path().join("scatter/amplitude.csv").exists());
}
