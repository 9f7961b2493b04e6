use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn inclab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inclab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("INCLAB_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn incidence_sweep_writes_five_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = inclab(&["incidence-sweep", "--t", "1.5"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.path().join("incidence_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("delta,t,incidence,energy_mu,energy_nu,ratio\n"));
    let s = summary(d.path(), "incidence_sweep");
    assert!(s["slope"].as_f64().unwrap() <= 0.1);
    assert_eq!(s["pass"], true);
}

#[test]
fn content_bottom_row_prints_delta() {
    let d = tempfile::tempdir().unwrap();
    let o = inclab(
        &[
            "content",
            "--fixture",
            "bottom-row",
            "--s",
            "2",
            "--deltas",
            "2^-6",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("value 0.015625"), "{}", stdout(&o));
    assert_eq!(summary(d.path(), "content")["value"], 0.015625);
}

#[test]
fn unknown_command_prints_usage() {
    let d = tempfile::tempdir().unwrap();
    let o = inclab(&["bogus"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).to_lowercase().contains("usage"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn zeroed_measure_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let m = d.path().join("m.json");
    fs::write(
        &m,
        r#"{"root":"PLANE","resolution_log2":5,"atoms":[[1,2,0.0],[3,3,0.0]]}"#,
    )
    .unwrap();
    let out = d.path().join("out");
    let o = inclab(&["energy", "--measure", m.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty measure"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn failed_acceptance_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let o = inclab(&["radial", "--sigma", "0.79"], d.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(summary(d.path(), "radial")["pass"], false);
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    fs::write(&cfg, "command = \"content\"\ns = 1.0\nfixture = \"bottom-row\"\ndeltas = [0.125]\nformat = \"json\"\n").unwrap();
    let o = inclab(
        &["content", "--config", cfg.to_str().unwrap(), "--s", "2"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("value 0.125"));
    assert!(!d.path().join("content.csv").exists());

    let o = inclab(&["radial", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = inclab(&["content", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_two() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["incidence-sweep", "--t", "2.5"][..],
        &["furstenberg", "--deltas", "2"],
        &["content", "--deltas", "0.3"],
        &["xray-check", "--n", "100"],
        &["content", "--threads", "0"],
        &["content", "--format", "xml"],
    ] {
        let o = inclab(args, d.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stdout(&o));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let o = inclab(&["furstenberg", "--seed", "7", "--threads", "1"], d);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["furstenberg.csv", "furstenberg.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
}
