//! End-to-end behaviour of the `lkdual` binary: exit codes, error
//! positions and report contents.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lkdual::catalog;
use lkdual::dual_lmi::{assemble, AssemblyOptions};
use lkdual::sdp::sdpa::{read_sdpa_sparse, SdpaData};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn systems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn scratch(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn lkdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkdual"))
        .args(args)
        .output()
        .expect("the lkdual binary runs")
}

fn write_spec(name: &str, text: &str) -> String {
    let path = scratch(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn bundled(name: &str) -> String {
    systems_dir().join(name).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SCALAR_SLOW: &str = r#"{
  "schema": "lkdual-system/1",
  "name": "scalar-slow",
  "n": 1,
  "delays": [1.6],
  "matrices": [[[0.0]], [[-1.0]]]
}
"#;

#[test]
fn analyze_exit_code_follows_the_verdict() {
    let out = scratch("analyze-stable.json");
    let o = lkdual(&[
        "analyze",
        &bundled("scalar-delay.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["verdict"], "certified-stable");
    assert_eq!(r["command"], "analyze");
    assert!(r["certificate"]["P"].is_array());
    assert_eq!(r["oracle"]["stable"], true);

    let spec = write_spec("scalar-slow.json", SCALAR_SLOW);
    let o = lkdual(&["analyze", &spec, "--no-oracle"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["verdict"], "not-certified");
    assert!(r["certificate"].is_null());
    assert!(r.get("oracle").is_none());
}

#[test]
fn malformed_json_reports_the_line() {
    let spec = write_spec(
        "malformed.json",
        "{\n  \"schema\": \"lkdual-system/1\",\n  \"n\": 1,\n  \"delays\": [1.0,,]\n}\n",
    );
    let o = lkdual(&["analyze", &spec]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unknown_fields_and_schemas_are_rejected() {
    let extra = SCALAR_SLOW.replace("\"n\": 1,", "\"n\": 1,\n  \"gain\": 3,");
    let o = lkdual(&["analyze", &write_spec("extra.json", &extra)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gain"), "{}", stderr(&o));

    let schema = SCALAR_SLOW.replace("lkdual-system/1", "lkdual-system/9");
    let o = lkdual(&["analyze", &write_spec("schema.json", &schema)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn margin_needs_a_family_and_a_sign_change() {
    let spec = write_spec("no-family.json", SCALAR_SLOW);
    let o = lkdual(&["margin", &spec, "--lo", "1", "--hi", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("family"), "{}", stderr(&o));

    // Both ends certified: there is nothing to bisect.
    let o = lkdual(&[
        "margin",
        &bundled("scalar-delay.json"),
        "--lo",
        "0.5",
        "--hi",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_solver_is_a_usage_error() {
    let o = lkdual(&[
        "analyze",
        &bundled("scalar-delay.json"),
        "--solver",
        "simplex",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("simplex"), "{}", stderr(&o));
}

#[test]
fn oracle_finds_the_imaginary_axis_root() {
    let at = std::f64::consts::FRAC_PI_2.to_string();
    let o = lkdual(&["oracle", &bundled("scalar-delay.json"), "--at", &at]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let abscissa = r["oracle"]["abscissa"].as_f64().unwrap();
    assert!(abscissa.abs() < 1e-5, "abscissa {abscissa}");

    let o = lkdual(&["oracle", &bundled("scalar-delay.json"), "--at", "1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = lkdual(&["oracle", &bundled("scalar-delay.json"), "--at", "1.6"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn exported_sdpa_parses_back_to_the_assembled_program() {
    let path = scratch("export.dat-s");
    let o = lkdual(&[
        "export-sdpa",
        &bundled("scalar-delay.json"),
        "--degree",
        "2",
        "--at",
        "1.2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sys = catalog::scalar_delay(1.2).unwrap();
    let program = assemble(&sys, 2, &AssemblyOptions::default()).unwrap();
    assert_eq!(
        read_sdpa_sparse(&path).unwrap(),
        SdpaData::from_problem(&program.problem)
    );
}

#[test]
fn selftest_passes_with_the_default_seed() {
    let o = lkdual(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(!text.contains("FAIL"), "{text}");
}

/// Drops every `*_seconds` field so timings do not break comparisons.
fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| !k.ends_with("_seconds"));
            m.values_mut().for_each(strip_timings);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

#[test]
fn reports_are_deterministic_and_hash_their_input() {
    let spec = bundled("scalar-delay.json");
    let run = || {
        let o = lkdual(&["analyze", &spec, "--at", "1.3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let (first, second) = (run(), run());
    let mut a: Value = serde_json::from_slice(&first).unwrap();
    let mut b: Value = serde_json::from_slice(&second).unwrap();
    strip_timings(&mut a);
    strip_timings(&mut b);
    assert_eq!(a, b);

    let expected = hex::encode(Sha256::digest(fs::read(&spec).unwrap()));
    assert_eq!(a["input_sha256"], expected.as_str());
    assert_eq!(a["schema"], "lkdual-report/1");
    assert_eq!(a["parameter"]["value"].as_f64(), Some(1.3));
}

#[test]
fn report_floats_round_trip_exactly() {
    let o = lkdual(&["analyze", &bundled("scalar-delay.json"), "--no-oracle"]);
    let text = String::from_utf8_lossy(&o.stdout);
    let r: Value = serde_json::from_str(&text).unwrap();
    let eps = r["analysis"]["epsilon"].as_f64().unwrap();
    // The printed literal is the one serde wrote; it must parse to the same bits.
    let literal = format!("{eps:.16e}");
    assert!(text.contains(&literal), "missing {literal}");
    assert_eq!(literal.parse::<f64>().unwrap().to_bits(), eps.to_bits());
}
