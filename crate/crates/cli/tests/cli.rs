use std::fs;
use std::process::{Command, Output};

fn codesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codesign"))
        .args(args)
        .env_remove("CODESIGN_CATALOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mission_table_rows() {
    let o = codesign(&[
        "mission", "--length", "1000", "--sdr", "4", "--format", "csv",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let time_of = |name: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap();
        line.split(',').nth(6).unwrap().parse().unwrap()
    };
    let tx2 = time_of("Jetson TX2");
    assert!((tx2 - 341.9).abs() < 0.05, "{tx2}");
    // mass-derived i9 velocity is 5.545 m/s rather than the rounded 5.6
    let i9 = time_of("i9");
    assert!((i9 - 4000.0 / 5.6).abs() / (4000.0 / 5.6) < 0.015, "{i9}");

    let table = stdout(&codesign(&["mission", "--length", "1000", "--sdr", "4"]));
    assert!(table
        .lines()
        .any(|l| l.starts_with("Jetson TX2") && l.contains("341.9")));
}

#[test]
fn cig_paths_lists_nine() {
    let o = codesign(&["cig", "--paths"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines
        .iter()
        .all(|l| l.starts_with('[') && l.contains("Compute -> ")));
    assert_eq!(lines.iter().filter(|l| l.starts_with("[power]")).count(), 1);
}

#[test]
fn exit_codes() {
    let o = codesign(&["vmax", "--platform", "nosuch"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nosuch"));

    let o = codesign(&["--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    assert_eq!(codesign(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let catalog = dir.path().join("heavy.json");
    fs::write(
        &catalog,
        r#"{"platforms":[{"name":"brick","sa_latency_s":0.2,"sa_throughput_hz":5,"tdp_w":10,"mass_kg":3.0}]}"#,
    )
    .unwrap();
    let o = codesign(&[
        "--catalog",
        catalog.to_str().unwrap(),
        "vmax",
        "--platform",
        "brick",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot hover"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let constraints = dir.path().join("constraints.json");
    fs::write(
        &constraints,
        r#"{"payload_max_kg":1.0,"battery_energy_j":4e5,"current_limit_a":60,"nominal_voltage_v":11.1}"#,
    )
    .unwrap();
    let constraints = constraints.to_str().unwrap();
    for args in [
        &["casestudy", "knob", "--format", "csv"][..],
        &[
            "mission", "--length", "500", "--sdr", "2", "--format", "json",
        ][..],
        &[
            "dse",
            "--grid",
            "mass=0.1:1.0:4,power=10:100:3,response=0.2:2:4",
            "--constraints",
            constraints,
            "--format",
            "csv",
        ][..],
    ] {
        let a = codesign(args);
        let b = codesign(args);
        assert!(
            a.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn csv_is_full_precision() {
    let text = stdout(&codesign(&["vmax", "--format", "csv"]));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v_col = header.iter().position(|h| h.starts_with("v_max")).unwrap();
    let v: f64 = lines
        .find(|l| l.starts_with("Jetson TX2"))
        .unwrap()
        .split(',')
        .nth(v_col)
        .unwrap()
        .parse()
        .unwrap();
    let rounded = (v * 100.0).round() / 100.0;
    assert_ne!(v, rounded);
}

#[test]
fn out_dir_receives_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = codesign(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--format",
        "csv",
        "casestudy",
        "offload",
    ]);
    assert!(o.status.success());
    let files: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(!files.is_empty());
    for f in &files {
        assert!(f.ends_with(".csv"));
        assert!(!fs::read_to_string(dir.path().join(f)).unwrap().is_empty());
    }
}
