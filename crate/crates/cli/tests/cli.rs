use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gabm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gabm"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GABM_LOG")
        .env_remove("GABM_API_KEY")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// The JSON error object printed on stderr.
fn error_json(o: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr
        .lines()
        .find(|l| l.starts_with("{\"error\""))
        .unwrap_or_else(|| panic!("no JSON error in {stderr}"));
    serde_json::from_str(line).unwrap()
}

fn connectnet_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gabm(&["init", "connectnet"], dir.path())), 0);
    dir
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn init_refuses_to_overwrite() {
    let dir = connectnet_dir();
    let scenario = dir.path().join("connectnet.scenario");
    fs::write(&scenario, "edited").unwrap();
    fs::remove_file(dir.path().join("connectnet.script.toml")).unwrap();
    let out = gabm(&["init", "connectnet"], dir.path());
    assert_eq!(code(&out), 1);
    assert_eq!(error_json(&out)["error"]["kind"], "exists");
    // Nothing written, not even the missing script.
    assert_eq!(fs::read_to_string(&scenario).unwrap(), "edited");
    assert!(!dir.path().join("connectnet.script.toml").exists());

    assert_eq!(code(&gabm(&["init", "connectnet", "--force"], dir.path())), 0);
    assert!(fs::read_to_string(&scenario).unwrap().contains("[[agents]]"));
}

#[test]
fn init_blank_validates() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gabm(&["init", "blank", "--dir", "sub"], dir.path())), 0);
    let out = gabm(&["validate", "sub/blank.scenario"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("valid (1 agents"));
    assert_eq!(code(&gabm(&["init", "nope"], dir.path())), 1);
}

#[test]
fn validate_reports_every_violation() {
    let dir = connectnet_dir();
    let text = fs::read_to_string(dir.path().join("connectnet.scenario"))
        .unwrap()
        .replace("extraversion = 3,", "extraversion = 11,")
        .replace(
            "formative_ages = [11, 16, 22, 30, 32]",
            "formative_ages = [16, 11, 22, 30, 32]",
        );
    fs::write(dir.path().join("bad.scenario"), text).unwrap();
    let out = gabm(&["validate", "bad.scenario"], dir.path());
    assert_eq!(code(&out), 1);
    let err = error_json(&out);
    let paths: Vec<&str> = err["error"]["details"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["path"].as_str().unwrap())
        .collect();
    assert_eq!(paths, ["agents[0].traits.extraversion", "agents[1].formative_ages"]);
}

#[test]
fn run_writes_three_artifacts() {
    let dir = connectnet_dir();
    let out = gabm(&["run", "connectnet.scenario", "--output-dir", "out"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        listing(&dir.path().join("out")),
        ["connectnet.episode.json", "connectnet.html", "connectnet.metrics.csv"]
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("connectnet: 15 events over 3 rounds, 104 completions"));

    let csv = fs::read_to_string(dir.path().join("out/connectnet.metrics.csv")).unwrap();
    assert!(csv.starts_with("metric,run,round,subject,target,value,missing\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * (4 + 1));

    // `report` re-renders the same HTML from the saved log.
    let html = fs::read_to_string(dir.path().join("out/connectnet.html")).unwrap();
    let out = gabm(
        &["report", "out/connectnet.episode.json", "--output-dir", "again"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("again/connectnet.html")).unwrap(),
        html
    );
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = connectnet_dir();
    for o in ["a", "b"] {
        assert_eq!(
            code(&gabm(&["run", "connectnet.scenario", "--output-dir", o], dir.path())),
            0
        );
    }
    for f in ["connectnet.episode.json", "connectnet.html", "connectnet.metrics.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn run_with_summaries() {
    let dir = connectnet_dir();
    let out = gabm(
        &["run", "connectnet.scenario", "--summarize", "--output-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/connectnet.summary.json")).unwrap()).unwrap();
    assert!(summary["news_report"]
        .as_str()
        .unwrap()
        .starts_with("Misinformation campaign"));
    assert_eq!(summary["per_agent"].as_object().unwrap().len(), 5);
    let html = fs::read_to_string(dir.path().join("out/connectnet.html")).unwrap();
    assert!(html.contains("News report"));
}

#[test]
fn invalid_scenario_writes_nothing() {
    let dir = connectnet_dir();
    fs::write(
        dir.path().join("x.scenario"),
        "format_version = 1\nname = \"x\"\n[context\n",
    )
    .unwrap();
    let out = gabm(&["run", "x.scenario", "--output-dir", "out"], dir.path());
    assert_eq!(code(&out), 1);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "scenario");
    assert_eq!(err["error"]["details"]["line"], 3);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn exhausted_script_leaves_partial_log() {
    let dir = connectnet_dir();
    let script = fs::read_to_string(dir.path().join("connectnet.script.toml")).unwrap();
    let cut = script.find("# Game master").unwrap();
    fs::write(dir.path().join("short.toml"), &script[..cut]).unwrap();
    let out = gabm(
        &[
            "run",
            "connectnet.scenario",
            "--script",
            "short.toml",
            "--output-dir",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "backend");
    assert_eq!(listing(&dir.path().join("out")), ["connectnet.episode.json.partial"]);
    let partial: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/connectnet.episode.json.partial")).unwrap())
            .unwrap();
    assert!(partial["error"].as_str().unwrap().contains("exhausted"));
}

#[test]
fn echo_flag_runs_without_a_script() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gabm(&["init", "blank"], dir.path())), 0);
    let out = gabm(
        &["run", "blank.scenario", "--seed", "9", "--output-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let log: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/blank.episode.json")).unwrap()).unwrap();
    assert_eq!(log["seed"], 9);
}

#[test]
fn http_without_key_is_a_backend_failure() {
    let dir = connectnet_dir();
    let out = gabm(
        &[
            "run",
            "connectnet.scenario",
            "--backend",
            "http",
            "--model",
            "m",
            "--base-url",
            "http://127.0.0.1:9",
            "--output-dir",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(error_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("GABM_API_KEY"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gabm(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&gabm(&["bench", "x.scenario"], dir.path())), 1);
    assert_eq!(code(&gabm(&["--help"], dir.path())), 0);
}

#[test]
fn bench_with_split_and_metric_tolerance() {
    let dir = connectnet_dir();
    // Two groups of reference records; only alice_mentions is far off.
    let mut reference = String::from("metric,value\n# comment\n");
    for _ in 0..4 {
        reference.push_str("alice_mentions,12\nopinion_of_alice:Dana:Alice,7\n");
    }
    fs::write(dir.path().join("ref.csv"), reference).unwrap();
    let base = [
        "bench",
        "connectnet.scenario",
        "--runs",
        "2",
        "--reference",
        "ref.csv",
        "--sequential",
        "--output-dir",
        "out",
    ];

    let out = gabm(&base, dir.path());
    assert_eq!(code(&out), 4);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("failing metrics: alice_mentions"), "{stdout}");

    let mut args = base.to_vec();
    args.extend([
        "--metric-tolerance",
        "alice_mentions=2.5",
        "--split-fraction",
        "0.5",
        "--split-seed",
        "3",
    ]);
    let out = gabm(&args, dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/connectnet.bench.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["succeeded"], 2);
    assert!(report["calibration_comparison"]["pass"].as_bool().unwrap());
    assert!(dir.path().join("out/connectnet.bench.metrics.csv").exists());
}

#[test]
fn bad_reference_is_invalid_input() {
    let dir = connectnet_dir();
    fs::write(dir.path().join("ref.csv"), "alice_mentions,ten\n").unwrap();
    let out = gabm(
        &["bench", "connectnet.scenario", "--runs", "1", "--reference", "ref.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert_eq!(error_json(&out)["error"]["kind"], "reference");
}
