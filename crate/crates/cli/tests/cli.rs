use std::fs;
use std::path::{Path, PathBuf};

use fairaudit_cli::{fmt6, run, EXIT_DATA, EXIT_OK, EXIT_UNFAIR, EXIT_USAGE};
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn fa(args: &[&str]) -> Run {
    let mut argv = vec!["fairaudit"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// The (40, 60, 60, 40) table as CSV plus a numeric feature.
fn table_files(dir: &Path) -> (PathBuf, PathBuf) {
    let mut csv = String::from("group,decision,score\n");
    let mut i = 0;
    for (g, y, k) in [("P", "yes", 40), ("P", "no", 60), ("N", "yes", 60), ("N", "no", 40)] {
        for _ in 0..k {
            csv.push_str(&format!("{g},{y},{}\n", (i * 37 % 101) as f64 / 10.0));
            i += 1;
        }
    }
    let data = dir.join("t.csv");
    let schema = dir.join("t.json");
    fs::write(&data, csv).unwrap();
    fs::write(
        &schema,
        r#"{"group": {"role": "sensitive", "protected": "P"},
            "decision": {"role": "decision", "positive": "yes"},
            "score": {"role": "numeric"}}"#,
    )
    .unwrap();
    (data, schema)
}

fn synth_files(dir: &Path, n: &str) -> (PathBuf, PathBuf) {
    let out = dir.join("synth");
    let r = fa(&["synth", "--n", n, "--seed", "3", "--target-di", "0.6", "--out", p(&out), "--no-timestamp"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    (out.join("data.csv"), out.join("schema.json"))
}

#[test]
fn audit_of_the_reference_table() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = table_files(dir.path());
    let r = fa(&["audit", "--data", p(&data), "--schema", p(&schema), "--level", "0.95", "--threshold", "0.8", "--no-timestamp"]);
    assert_eq!(r.code, EXIT_UNFAIR, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let di = &v["metrics"]["disparity"][1];
    assert_eq!(di["name"], "disparate_impact");
    assert!((di["estimate"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let iv = &v["intervals"][0];
    assert_eq!(format!("{:.3}", iv["lo"].as_f64().unwrap()), "0.500");
    assert_eq!(format!("{:.3}", iv["hi"].as_f64().unwrap()), "0.890");
    assert_eq!(v["verdict"]["point"], "fail");
    assert_eq!(v["dataset"]["protected"], "P");
    assert!(v["meta"].get("timestamp").is_none());
}

#[test]
fn passing_audit_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = table_files(dir.path());
    let r = fa(&["audit", "--data", p(&data), "--schema", p(&schema), "--threshold", "0.6"]);
    assert_eq!(r.code, EXIT_OK);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["meta"]["timestamp"].is_string());
}

#[test]
fn top_level_keys_are_the_documented_ones() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_files(dir.path(), "800");
    let r = fa(&["audit", "--data", p(&data), "--schema", p(&schema), "--no-timestamp"]);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let allowed = ["meta", "dataset", "metrics", "intervals", "verdict", "confusion", "fliptest", "repair", "explain"];
    assert!(keys.iter().all(|k| allowed.contains(&k.as_str())), "{keys:?}");
    assert!(v.get("confusion").is_some());
    assert!(v.get("repair").is_none());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let r = fa(&["audit", "--bogus"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.stderr.contains("Usage"));
    assert!(r.stdout.is_empty());
    assert_eq!(fa(&["repair", "--data", "a", "--schema", "b", "--lambda", "1.5"]).code, EXIT_USAGE);
    assert_eq!(fa(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(fa(&["--help"]).code, EXIT_OK);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = table_files(dir.path());
    let missing = dir.path().join("missing.csv");
    assert_eq!(fa(&["validate", "--data", p(&missing), "--schema", p(&schema)]).code, EXIT_DATA);
    fs::write(&schema, r#"{"group": {"role": "sensitive", "protected": "Q"}}"#).unwrap();
    let r = fa(&["validate", "--data", p(&data), "--schema", p(&schema)]);
    assert_eq!(r.code, EXIT_DATA);
    assert!(r.stderr.contains("error"));
}

#[test]
fn repair_at_lambda_zero_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = table_files(dir.path());
    let out = dir.path().join("r0");
    let r = fa(&["repair", "--data", p(&data), "--schema", p(&schema), "--lambda", "0", "--out", p(&out), "--no-timestamp"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(fs::read_to_string(out.join("repaired.csv")).unwrap(), fs::read_to_string(&data).unwrap());
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["repair"]["overall_distortion"], 0.0);
}

#[test]
fn repair_plan_can_be_reapplied() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_files(dir.path(), "1000");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let plan = a.join("plan.json");
    let base = ["repair", "--data", p(&data), "--schema", p(&schema), "--lambda", "0.7", "--no-timestamp", "--out"];
    assert_eq!(fa(&[&base[..], &[p(&a)]].concat()).code, EXIT_OK);
    assert_eq!(fa(&[&base[..], &[p(&b), "--plan", p(&plan)]].concat()).code, EXIT_OK);
    assert_eq!(fs::read(a.join("repaired.csv")).unwrap(), fs::read(b.join("repaired.csv")).unwrap());
    let v: Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let before = v["repair"]["baseline"]["before"]["disparate_impact"].as_f64().unwrap();
    let after = v["repair"]["baseline"]["after"]["disparate_impact"].as_f64().unwrap();
    assert!(after > before);
}

#[test]
fn train_fliptest_explain_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_files(dir.path(), "1500");
    let t = dir.path().join("t");
    let r = fa(&[
        "train", "--data", p(&data), "--schema", p(&schema), "--include-sensitive", "--replicates", "3", "--out", p(&t), "--no-timestamp",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let model = t.join("model.json");
    let v: Value = serde_json::from_str(&fs::read_to_string(t.join("report.json")).unwrap()).unwrap();
    let holdout = v["metrics"]["holdout_error"]["rate"].as_f64().unwrap();
    assert!(holdout < 0.3);
    assert_eq!(v["metrics"]["cv_error"]["replicates"], 3);

    let r = fa(&["fliptest", "--data", p(&data), "--schema", p(&schema), "--model", p(&model), "--no-timestamp"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["fliptest"]["vacuous"], false);
    assert!(v["fliptest"]["flip_rate"].as_f64().unwrap() > 0.05);

    let r = fa(&[
        "explain", "--data", p(&data), "--schema", p(&schema), "--model", p(&model), "--row", "4", "--replicates", "3", "--samples", "500",
        "--no-timestamp",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["explain"]["local_surrogate"]["row"], 4);
    assert_eq!(v["explain"]["permutation_importance"]["features"].as_array().unwrap().len(), 3);

    let r = fa(&["audit", "--data", p(&data), "--schema", p(&schema), "--model", p(&model), "--no-timestamp"]);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(v["fliptest"].is_object());
}

#[test]
fn model_without_sensitive_gives_vacuous_fliptest() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_files(dir.path(), "600");
    let model = dir.path().join("m.json");
    let r = fa(&["train", "--data", p(&data), "--schema", p(&schema), "--replicates", "2", "--model", p(&model)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let r = fa(&["fliptest", "--data", p(&data), "--schema", p(&schema), "--model", p(&model)]);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["fliptest"]["vacuous"], true);
    assert_eq!(v["fliptest"]["flip_rate"], 0.0);
}

#[test]
fn reports_are_byte_identical_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_files(dir.path(), "700");
    let args = ["audit", "--data", p(&data), "--schema", p(&schema), "--replicates", "300", "--seed", "5", "--no-timestamp", "--format", "both"];
    let a = fa(&args);
    let b = fa(&args);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

/// Renderings of every JSON scalar and key; numbers use the report format.
fn json_numbers(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Number(n) => out.push(match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (_, Some(i)) => i.to_string(),
            _ => fmt6(n.as_f64().unwrap()),
        }),
        Value::String(s) => out.push(s.clone()),
        Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out)),
        Value::Object(m) => m.iter().for_each(|(k, x)| {
            out.push(k.clone());
            json_numbers(x, out)
        }),
        _ => {}
    }
}

#[test]
fn markdown_numbers_come_from_the_json() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_files(dir.path(), "900");
    let out = dir.path().join("rep");
    let r = fa(&[
        "audit", "--data", p(&data), "--schema", p(&schema), "--replicates", "200", "--out", p(&out), "--format", "both", "--no-timestamp",
    ]);
    assert!(r.code == EXIT_OK || r.code == EXIT_UNFAIR);
    let json: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    let mut known = Vec::new();
    json_numbers(&json, &mut known);
    let mut checked = 0;
    for line in md.lines().filter(|l| l.starts_with('|')) {
        for cell in line.split('|').skip(2) {
            for token in cell.split(", ") {
                let token = token.trim();
                if token.parse::<f64>().is_ok() {
                    checked += 1;
                    assert!(known.iter().any(|k| k == token), "{token} not in JSON");
                }
            }
        }
    }
    assert!(checked > 20);
}

#[test]
fn synth_without_out_prints_csv() {
    let r = fa(&["synth", "--n", "5", "--seed", "1"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.starts_with("x1,x2,s,decision,outcome\n"));
    assert_eq!(r.stdout.lines().count(), 6);
}

#[test]
fn synth_reads_generator_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"generator": {"n": 50, "sensitive_bias": -1.0}}"#).unwrap();
    let out = dir.path().join("o");
    let r = fa(&["synth", "--config", p(&cfg), "--out", p(&out), "--no-timestamp"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["meta"]["parameters"]["n"], 50);
    assert!(v["metrics"]["true_disparate_impact"].as_f64().unwrap() < 1.0);
    fs::write(&cfg, r#"{"generator": {"bogus": 1}}"#).unwrap();
    assert_eq!(fa(&["synth", "--config", p(&cfg)]).code, EXIT_DATA);
}

#[test]
fn validate_reports_orientation() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = table_files(dir.path());
    let r = fa(&["validate", "--data", p(&data), "--schema", p(&schema), "--format", "md"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("protected over non-protected: group='P' over group='N'"));
}
