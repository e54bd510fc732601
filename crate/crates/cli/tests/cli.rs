use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn endwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_endwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap_or_default()).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const THOMPSON: &str = r#"
[action]
kind = "thompson"
start = "5/8"

[measure]
kind = "uniform"

[walk]
steps = 4000
trajectories = 120
seed = 5
cuts = [{ kind = "points", points = ["5/8", "3/4"] }]
"#;

#[test]
fn thompson_run_reports_five_classes_and_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", THOMPSON);
    let out = tmp.path().join("a");
    let run = endwalk(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let summary = read_json(&out.join("summary.json"));
    let classes = summary["savchuk_exit_measure"]["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 5);
    let total: u64 = classes.iter().map(|c| c["count"].as_u64().unwrap()).sum::<u64>()
        + summary["savchuk_exit_measure"]["unresolved"].as_u64().unwrap();
    assert_eq!(total, 120);

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 5);
    let names: Vec<&str> = manifest["outputs"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    assert_eq!(names, ["records.csv", "summary.json"]);

    let again = tmp.path().join("b");
    let rerun = endwalk(&[
        "--threads",
        "1",
        "rerun",
        "--manifest",
        out.join("manifest.json").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    assert_eq!(
        std::fs::read(out.join("records.csv")).unwrap(),
        std::fs::read(again.join("records.csv")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", &THOMPSON.replace("4000", "500"));
    let digests = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let run = endwalk(&[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(run.status.success());
        read_json(&out.join("manifest.json"))["outputs"].clone()
    };
    assert_eq!(digests("1", "x"), digests("1", "y"));
    assert_ne!(digests("1", "x")["records.csv"], digests("2", "z")["records.csv"]);
}

#[test]
fn tampered_manifest_fails_the_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", &THOMPSON.replace("4000", "200"));
    let out = tmp.path().join("a");
    assert!(endwalk(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status
        .success());
    let path = out.join("manifest.json");
    let mut m = read_json(&path);
    m["outputs"]["summary.json"] = Value::String("00".into());
    std::fs::write(&path, m.to_string()).unwrap();
    let rerun = endwalk(&[
        "rerun",
        "--manifest",
        path.to_str().unwrap(),
        "--out",
        tmp.path().join("b").to_str().unwrap(),
    ]);
    assert_eq!(rerun.status.code(), Some(1));
    assert_eq!(stderr_json(&rerun)["error"], "check-failed");
}

#[test]
fn drifted_comb_walks_end_on_right_rays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.toml",
        r#"
[action]
kind = "psi"

[measure]
kind = "example1"

[walk]
steps = 5000
trajectories = 200
seed = 2
cuts = [{ kind = "ball", radius = 3 }]

[output]
graph_radius = 2
"#,
    );
    let out = tmp.path().join("p");
    let run = endwalk(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read_json(&out.join("summary.json"));
    let kinds = &summary["cuts"][0]["end_kinds"];
    let right = kinds["classes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "right-ray")
        .unwrap();
    assert!(right["proportion"].as_f64().unwrap() > 0.9, "{kinds}");
    assert!(summary["cuts"][0]["component_changes"]["within"].as_bool().unwrap());
    assert!(out.join("graph.dot").exists());
}

#[test]
fn chain_runs_report_sign_flips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[action]\nkind = \"chain\"\n\n[walk]\nsteps = 20000\ntrajectories = 20\ncheckpoints = [100, 20000]\n",
    );
    let out = tmp.path().join("c");
    let run = endwalk(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["sign_flips"]["steps"], serde_json::json!([100, 20000]));
    let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20 * 2);
}

#[test]
fn missing_measure_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let body = THOMPSON.replace("kind = \"uniform\"", "kind = \"file\"\npath = \"absent.json\"");
    let cfg = write_config(tmp.path(), "t.toml", &body);
    let run = endwalk(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2));
    let err = stderr_json(&run);
    assert_eq!(err["error"], "io");
    assert!(err["message"].as_str().unwrap().contains("absent.json"));
}

#[test]
fn measure_files_resolve_next_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("m.json"),
        r#"{"atoms": [{"word": "A", "prob": 0.5}, {"word": "A'", "prob": 0.5}]}"#,
    )
    .unwrap();
    let body = THOMPSON
        .replace("kind = \"uniform\"", "kind = \"file\"\npath = \"m.json\"")
        .replace("4000", "100");
    let cfg = write_config(tmp.path(), "t.toml", &body);
    let out = tmp.path().join("o");
    let run = endwalk(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    // The manifest carries the measure itself, not the path.
    let measure = &read_json(&out.join("manifest.json"))["config"]["measure"];
    assert_eq!(measure["kind"], "inline");
    assert_eq!(measure["atoms"].as_array().unwrap().len(), 2);
}

#[test]
fn config_typos_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("key", THOMPSON.replace("steps =", "stpes =")),
        ("table", format!("{THOMPSON}\n[extra]\nx = 1\n")),
        (
            "letter",
            THOMPSON.replace(
                "kind = \"uniform\"",
                "kind = \"inline\"\natoms = [{ word = \"a\", prob = 1.0 }]",
            ),
        ),
        ("zero", THOMPSON.replace("trajectories = 120", "trajectories = 0")),
    ] {
        let cfg = write_config(tmp.path(), &format!("{name}.toml"), &body);
        let run = endwalk(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            tmp.path().join(name).to_str().unwrap(),
        ]);
        assert_eq!(run.status.code(), Some(2), "{name}");
        assert!(stderr_json(&run)["message"].is_string(), "{name}");
    }
    let run = endwalk(&["simulate"]);
    assert_eq!(run.status.code(), Some(2));
    assert_eq!(stderr_json(&run)["error"], "usage");
}

fn edge_multiset(dot: &str, csv: &str) -> (BTreeMap<String, usize>, BTreeMap<String, usize>) {
    let mut from_dot = BTreeMap::new();
    for line in dot.lines().filter(|l| l.contains("->")) {
        let parts: Vec<&str> = line.split('"').collect();
        *from_dot
            .entry(format!("{}|{}|{}", parts[1], parts[3], parts[5]))
            .or_default() += 1;
    }
    let mut from_csv = BTreeMap::new();
    let mut reader = csv_rows(csv);
    reader.remove(0);
    for row in reader {
        *from_csv.entry(row.join("|")).or_default() += 1;
    }
    (from_dot, from_csv)
}

// Fields are quoted when they contain commas, as comb vertices do.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| {
            let mut fields = Vec::new();
            let mut cur = String::new();
            let mut quoted = false;
            for ch in line.chars() {
                match ch {
                    '"' => quoted = !quoted,
                    ',' if !quoted => fields.push(std::mem::take(&mut cur)),
                    _ => cur.push(ch),
                }
            }
            fields.push(cur);
            fields
        })
        .collect()
}

#[test]
fn graph_exports_agree() {
    let one = endwalk(&["graph", "--action", "thompson", "--center", "3/4", "--radius", "1"]);
    assert!(one.status.success());
    assert_eq!(String::from_utf8_lossy(&one.stdout).matches("dist=").count(), 4);
    let zero = endwalk(&["graph", "--action", "thompson", "--radius", "0"]);
    assert_eq!(String::from_utf8_lossy(&zero.stdout).matches("dist=").count(), 1);

    for (action, center) in [("thompson", "3/4"), ("psi", "(0,0)"), ("psi-prime", "(0,0,0)")] {
        let args = |format: &'static str| {
            [
                "graph", "--action", action, "--center", center, "--radius", "3", "--format", format,
            ]
        };
        let dot = String::from_utf8(endwalk(&args("dot")).stdout).unwrap();
        let csv = String::from_utf8(endwalk(&args("csv")).stdout).unwrap();
        let (a, b) = edge_multiset(&dot, &csv);
        assert!(!a.is_empty());
        assert_eq!(a, b, "{action}");
    }
}

#[test]
fn graph_to_directory_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let run = endwalk(&[
        "graph",
        "--action",
        "psi",
        "--radius",
        "2",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["config"]["format"], "csv");
    assert!(m["outputs"]["graph.csv"].is_string());
}

#[test]
fn counterexample_certificates() {
    let tmp = tempfile::tempdir().unwrap();
    let run_once = |dir: &str, trials: &str| {
        let out = tmp.path().join(dir);
        let run = endwalk(&[
            "counterexample",
            "--n",
            "20000",
            "--trials",
            trials,
            "--horizon",
            "2000",
            "--walks",
            "10",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        (
            read_json(&out.join("certificates.json")),
            read_json(&out.join("manifest.json")),
        )
    };
    let (cert, manifest) = run_once("a", "2000");
    assert_eq!(cert["first_moment"]["verdict"], "Converges");
    assert_eq!(cert["transience"]["verdict"], "Converges");
    assert_eq!(cert["sign_flips"]["verdict"], "Diverges");
    assert_eq!(cert["sign_flips"]["tail_bound"], "inf");
    assert_eq!(cert["irreducibility"]["outcome"], "witness");
    assert_eq!(cert["green"].as_array().unwrap().len(), 10);
    assert!(cert["green"][0]["mc"]["mean"].is_number());
    assert!(cert["walks"].is_object());

    let (_, again) = run_once("b", "2000");
    assert_eq!(manifest["outputs"], again["outputs"]);

    let (bare, _) = run_once("c", "0");
    assert!(bare["green"][0].get("mc").is_none());
    assert!(bare.get("walks").is_none());
}

#[test]
fn counterexample_rejects_tiny_n() {
    let tmp = tempfile::tempdir().unwrap();
    let run = endwalk(&["counterexample", "--n", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn embed_check_exit_codes() {
    for direction in ["left-into-right", "right-into-left"] {
        for radius in ["0", "8"] {
            let run = endwalk(&["embed-check", "--radius", radius, "--direction", direction]);
            assert!(run.status.success(), "{direction} {radius}");
            assert!(String::from_utf8_lossy(&run.stdout).contains(" 0 violations"));
        }
    }
    let run = endwalk(&["embed-check", "--radius", "2", "--direction", "up"]);
    assert_eq!(run.status.code(), Some(2));
}
