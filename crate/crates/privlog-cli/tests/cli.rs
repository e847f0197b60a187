//! End-to-end CLI tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn privlog() -> Command {
    Command::new(env!("CARGO_BIN_EXE_privlog"))
}

fn run(args: &[&str]) -> Output {
    privlog().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_sample_log(dir: &Path) -> PathBuf {
    let mut traces = String::new();
    // 3 variants over 10 traces, boolean + numeric payloads
    for i in 0..10 {
        let acts: &[&str] = match i % 3 {
            0 => &["Register", "Triage", "Release"],
            1 => &["Register", "Release"],
            _ => &["Register", "Triage", "Surgery", "Release"],
        };
        let mut events = String::new();
        for (j, a) in acts.iter().enumerate() {
            let minutes = i * 60 + (j as i32) * 10;
            events.push_str(&format!(
                r#"    <event>
      <string key="concept:name" value="{a}"/>
      <date key="time:timestamp" value="2020-01-01T{:02}:{:02}:00.000Z"/>
      <boolean key="urgent" value="{}"/>
      <float key="amount" value="{}"/>
    </event>
"#,
                minutes / 60,
                minutes % 60,
                i % 4 != 0,
                10 + i
            ));
        }
        traces.push_str(&format!(
            "  <trace>\n    <string key=\"concept:name\" value=\"case{i}\"/>\n{events}  </trace>\n"
        ));
    }
    let xes = format!("<?xml version=\"1.0\"?>\n<log xes.version=\"1849-2016\">\n{traces}</log>\n");
    let path = dir.join("sample.xes");
    std::fs::write(&path, xes).unwrap();
    path
}

#[test]
fn inspect_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_sample_log(dir.path());
    let out = run(&["inspect", log.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "10 traces, 30 events, 3 variants");
}

#[test]
fn missing_epsilon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_sample_log(dir.path());
    let out_path = dir.path().join("anon.xes");
    let out = run(&[
        "anonymize",
        log.to_str().unwrap(),
        "-k",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--epsilon"));
}

#[test]
fn unreadable_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.xes");
    std::fs::write(&bad, "<log><trace><event").unwrap();
    let out = run(&["inspect", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["inspect", dir.path().join("missing.xes").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn anonymize_is_deterministic_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_sample_log(dir.path());
    let run_once = |name: &str, seed: &str| -> Vec<u8> {
        let out_path = dir.path().join(name);
        let out = run(&[
            "anonymize",
            log.to_str().unwrap(),
            "--epsilon",
            "1.0",
            "-n",
            "6",
            "-k",
            "1",
            "--seed",
            seed,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        std::fs::read(&out_path).unwrap()
    };
    let a = run_once("a.xes", "7");
    let b = run_once("b.xes", "7");
    let c = run_once("c.xes", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    // run report lands next to the output
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["parameters"]["seed"], 7);
    assert_eq!(report["input_traces"], 10);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_sample_log(dir.path());
    let out_path = dir.path().join("from_config.xes");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "epsilon = 1000000.0\nprune = 1\nmax_depth = 6\nseed = 3\n\
             shift_scale = 1e-6\ninterval_scale = 1e-6\nattribute_epsilon = 1e9\n\
             out = {:?}\n",
            out_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&[
        "anonymize",
        log.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    // vanishing noise: the output log keeps the variant structure
    let check = run(&["inspect", out_path.to_str().unwrap()]);
    assert_eq!(stdout(&check).trim(), "10 traces, 30 events, 3 variants");

    // a flag overrides the config value
    let out2_path = dir.path().join("override.xes");
    let out2 = run(&[
        "anonymize",
        log.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2_path.to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert!(out2.status.success());
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("override.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["parameters"]["seed"], 4);
}

#[test]
fn report_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_sample_log(dir.path());
    let out_dir = dir.path().join("metrics");
    let out = run(&[
        "report",
        log.to_str().unwrap(),
        log.to_str().unwrap(),
        "--bucket-ms",
        "3600000",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("utility_report.json")).unwrap(),
    )
    .unwrap();
    // log compared with itself: fractions agree
    assert_eq!(
        json["boolean_fractions"]["urgent"]["original"],
        json["boolean_fractions"]["urgent"]["anonymized"]
    );
    let csv = std::fs::read_to_string(out_dir.join("active_cases.csv")).unwrap();
    assert!(csv.starts_with("bucket_start_ms,original,anonymized\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn schema_sidecar_and_attribute_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let log = write_sample_log(dir.path());
    let schema = dir.path().join("schema.json");
    std::fs::write(
        &schema,
        r#"{
  "attributes": {
    "urgent": { "kind": "boolean", "epsilon": 2.0 },
    "amount": { "kind": "numeric", "min": 0.0, "max": 100.0 }
  }
}"#,
    )
    .unwrap();
    let out_path = dir.path().join("schema_run.xes");
    let out = run(&[
        "anonymize",
        log.to_str().unwrap(),
        "--epsilon",
        "1.0",
        "-k",
        "1",
        "--seed",
        "5",
        "--schema",
        schema.to_str().unwrap(),
        "--sensitivity",
        "amount=10",
        "--attr-epsilon",
        "urgent=0.5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    // unknown attribute in an override is a usage error
    let out = run(&[
        "anonymize",
        log.to_str().unwrap(),
        "--epsilon",
        "1.0",
        "-k",
        "1",
        "--attr-epsilon",
        "nope=0.5",
        "--out",
        dir.path().join("x.xes").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
