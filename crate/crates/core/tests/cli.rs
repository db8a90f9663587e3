use std::fs;
use std::path::Path;

use bm_extension::cli;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = cli::run(std::iter::once("bmext").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run(&["--preset", "ex216", "export"]);
    assert_eq!(code, 0);
    let good = write(dir.path(), "good.json", &text);
    assert_eq!(run(&["validate", &good]).0, 0);

    let mut v = json(&text);
    v["config"]["intervals"][1]["lo"] = (-0.5).into();
    let overlapping = write(dir.path(), "overlap.json", &v.to_string());
    let (code, text) = run(&["validate", &overlapping]);
    assert_eq!(code, 1, "{text}");
    assert_eq!(json(&text)["result"]["valid"], false);

    let broken = write(dir.path(), "broken.json", "{ \"schema_version\": 1, ");
    let (code, text) = run(&["validate", &broken]);
    assert_eq!(code, 2);
    assert_eq!(json(&text)["error"]["kind"], "parse");

    assert_eq!(run(&["validate", "/nonexistent/scenario.json"]).0, 2);
}

#[test]
fn darn_writes_the_half_atom() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let (code, text) = run(&["--preset", "ex215", "--depth", "6", "--out", &out, "--deterministic", "darn"]);
    assert_eq!(code, 0, "{text}");
    let v = json(&text);
    assert!(v.get("timestamp").is_none());
    let csv = fs::read_to_string(dir.path().join("atoms.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# scenario="));
    assert_eq!(lines.next().unwrap(), "location,mass");
    let half = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|row| row[0] == 0.5)
        .unwrap();
    assert_eq!(half[1], 1.0 / 3.0);
}

#[test]
fn trace_energy_of_identity() {
    let (code, text) =
        run(&["--preset", "ex218", "--depth", "8", "--deterministic", "trace", "--function", "identity"]);
    assert_eq!(code, 0, "{text}");
    let e = json(&text)["result"]["energy_bm"].as_f64().unwrap();
    let want = 0.5 * (1.0 - (2.0f64 / 3.0).powi(8));
    assert!((e - want).abs() < 1e-14, "{e} vs {want}");
}

#[test]
fn hitting_probability_near_seven_twelfths() {
    let args = [
        "--preset",
        "ex215",
        "--depth",
        "10",
        "--samples",
        "20000",
        "--deterministic",
        "simulate",
        "hitting",
        "--x0",
        "0.3333333333333333",
        "--lo",
        "0",
        "--hi",
        "1",
    ];
    let (code, text) = run(&args);
    assert_eq!(code, 0, "{text}");
    let h = &json(&text)["result"]["hitting"];
    let est = h["estimate"]["estimate"].as_f64().unwrap();
    let se = h["estimate"]["std_error"].as_f64().unwrap();
    assert!((h["target"].as_f64().unwrap() - 7.0 / 12.0).abs() < 1e-15);
    assert!((est - 7.0 / 12.0).abs() < 4.0 * se, "{est} ± {se}");
    assert_eq!(run(&args).1, text);
}

#[test]
fn path_csv_starts_with_header_comment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let args = [
        "--preset",
        "ex217",
        "--depth",
        "3",
        "--out",
        &out,
        "--deterministic",
        "simulate",
        "path",
        "--x0",
        "-0.4",
        "--lo",
        "-1.5",
        "--hi",
        "1.5",
        "--cells",
        "600",
        "--steps",
        "500",
        "--reflect",
    ];
    let (code, text) = run(&args);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert!(csv.starts_with("# scenario="));
    assert!(csv.lines().count() > 2);
}

#[test]
fn domain_errors_are_reported_as_json() {
    let (code, text) = run(&["--preset", "ex215", "darn", "--interval", "5"]);
    assert_ne!(code, 0);
    assert!(json(&text)["error"]["message"].is_string());
    let (code, _) = run(&["--preset", "no-such-preset", "export"]);
    assert_ne!(code, 0);
}

#[test]
fn presets_are_listed() {
    let (code, text) = run(&["presets"]);
    assert_eq!(code, 0);
    for name in ["ex215", "ex216", "ex217", "ex218", "darning-sojourn"] {
        assert!(text.contains(name), "{name} missing");
    }
}
