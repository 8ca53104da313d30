use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use subsmooth::blowup::BlowupSequence;
use subsmooth::casebook::CaseReport;
use subsmooth::partition::CellPartition;
use subsmooth::smoothing::GlobalSmoothing;
use subsmooth::{parse_polynomial, Polynomial};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subsmooth"))
        .args(args)
        .output()
        .unwrap()
}

fn run_fx(args: &[&str]) -> Output {
    let owned: Vec<String> = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(name) => fixture(name).to_string_lossy().into_owned(),
            None => a.to_string(),
        })
        .collect();
    let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
    run(&refs)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn reparse<T: serde::de::DeserializeOwned + serde::Serialize>(v: &Value) -> T {
    let t: T = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(&serde_json::to_value(&t).unwrap(), v);
    t
}

fn poly(v: &Value) -> Polynomial {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn unit_square_q2_has_four_cells() {
    let out = run_fx(&["partition", "@unit_square.json", "--q", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let p: CellPartition = reparse(&v["partition"]);
    assert_eq!(p.len(), 4);
    assert_eq!(v["report"]["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn overlapping_boxes_give_subordinate_partition() {
    let out = run_fx(&["partition", "@unit_square.json", "--covering", "@two_boxes.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["report"]["subordinate"], Value::Bool(true));
    let p: CellPartition = reparse(&v["partition"]);
    assert!(p.cells.iter().all(|c| c.subordinate_to.is_some()));
}

#[test]
fn compatible_with_disc_refines() {
    let out = run_fx(&[
        "partition",
        "@unit_square.json",
        "--q",
        "2",
        "--compatible-with",
        "@unit_disc_in_square.json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let p: CellPartition = reparse(&json(&out)["partition"]);
    assert!(p.len() > 4);
    assert!(p.cells.iter().all(|c| c.side.is_some()));
}

#[test]
fn general_position_certificate_lists_hyperplanes() {
    let out = run_fx(&[
        "partition",
        "@disc.json",
        "--q",
        "1",
        "--general-position",
        "@axis_line.json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let cert = &json(&out)["certificate"];
    assert_eq!(cert["passed"], Value::Bool(true));
    assert!(cert["attempts"].as_u64().unwrap() > 1);
    let hs = cert["hyperplanes"].as_array().unwrap();
    assert!(!hs.is_empty());
    assert!(hs.iter().all(|h| h["nonzero"] == Value::Bool(true)));
}

#[test]
fn incommensurate_region_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("third.json");
    std::fs::write(
        &path,
        r#"{"vars": ["x"], "pool": ["x"], "pieces": [[0]], "bbox": [["0", "1/3"]]}"#,
    )
    .unwrap();
    let out = run(&["partition", path.to_str().unwrap(), "--q", "2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("1/3"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"vars\": [\"x\"],\n \"pool\": [1 - x]}").unwrap();
    let out = run(&["partition", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn cube_smooths_with_torus_and_exports_points() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("points.csv");
    let out = run_fx(&[
        "smooth",
        "@unit_square.json",
        "--export-points",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let gs: GlobalSmoothing = reparse(&v["smoothing"]);
    assert_eq!(gs.pieces.len(), 1);
    assert_eq!(gs.pieces[0].cover.kind(), "torus");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(&csv_path)
        .unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        // piece, (c1, c2, s1, s2), (x, y)
        assert_eq!(r.len(), 7);
        let x: f64 = r[5].parse().unwrap();
        let y: f64 = r[6].parse().unwrap();
        assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
    }
}

#[test]
fn disc_gets_mixed_covers() {
    let out = run_fx(&["smooth", "@disc.json", "--q", "2", "--samples", "300"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let gs: GlobalSmoothing = reparse(&json(&out)["smoothing"]);
    let kinds: std::collections::BTreeSet<&str> = gs.pieces.iter().map(|p| p.cover.kind()).collect();
    assert_eq!(kinds.len(), 2);
}

#[test]
fn empty_pool_is_rejected() {
    let out = run_fx(&["smooth", "@empty_pool.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("pool is empty"));
}

#[test]
fn smoothing_output_is_deterministic() {
    let a = run_fx(&["smooth", "@disc.json", "--q", "2", "--samples", "200", "--seed", "7"]);
    let b = run_fx(&["smooth", "@disc.json", "--q", "2", "--samples", "200", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_accepts_clean_and_rejects_corrupted_smoothing() {
    let dir = tempfile::tempdir().unwrap();
    let sm = dir.path().join("smooth.json");
    let out = run_fx(&["smooth", "@unit_square.json", "--out", sm.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let input = fixture("unit_square.json");
    let ok = run(&[
        "verify",
        sm.to_str().unwrap(),
        input.to_str().unwrap(),
        "--samples",
        "200",
    ]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&sm).unwrap()).unwrap();
    let eq = &mut v["smoothing"]["pieces"][0]["cover"]["equations"][0];
    let shifted = &poly(eq) - &Polynomial::constant(4, subsmooth::exactpoly::rational::int(3));
    *eq = serde_json::to_value(&shifted).unwrap();
    std::fs::write(&sm, serde_json::to_string(&v).unwrap()).unwrap();
    let bad = run(&[
        "verify",
        sm.to_str().unwrap(),
        input.to_str().unwrap(),
        "--samples",
        "200",
    ]);
    assert_eq!(code(&bad), 1);
    let report = json(&bad);
    let witness = &report["smoothing"]["containment"]["violations"][0]["witness"];
    assert!(!witness.as_array().unwrap().is_empty());
}

#[test]
fn quartic_strict_transform_in_z_chart() {
    let out = run_fx(&[
        "strict-transform",
        "@quartic_h.txt",
        "@quartic_sequence.json",
        "--chart",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let t = &v[0];
    let up = ["X", "Y", "Z", "w"];
    assert_eq!(
        poly(&t["strict"]),
        parse_polynomial("(X^2 + 1)^2*(w^4 + Z^2*w^2) - (X^2 - 1)^2", &up).unwrap()
    );
    assert_eq!(t["multiplicities"], serde_json::json!([4]));
    // Canonical text is stable: re-parsing it reproduces the polynomial.
    let text = t["strict_text"].as_str().unwrap();
    assert_eq!(parse_polynomial(text, &up).unwrap(), poly(&t["strict"]));
}

#[test]
fn cusp_surface_strict_transform() {
    let out = run_fx(&["strict-transform", "@cusp_h.txt", "@cusp_sequence.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let z = v.as_array().unwrap().iter().find(|t| t["chart"] == 2).unwrap();
    assert_eq!(
        poly(&z["strict"]),
        parse_polynomial("z - u^3 - u*w", &["u", "w", "z"]).unwrap()
    );
    assert_eq!(z["multiplicities"], serde_json::json!([3]));
}

#[test]
fn empty_sequence_leaves_h_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.txt");
    std::fs::write(&h, "x^2 - y^3").unwrap();
    let out = run(&[
        "strict-transform",
        h.to_str().unwrap(),
        fixture("empty_sequence.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(
        poly(&v[0]["strict"]),
        parse_polynomial("x^2 - y^3", &["x", "y"]).unwrap()
    );
    assert_eq!(v[0]["multiplicities"], serde_json::json!([]));
}

#[test]
fn remark_sequence_composes() {
    let out = run_fx(&["blowup", "@remark_sequence.json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["composition_ok"], Value::Bool(true));
    let seq: BlowupSequence = reparse(&v["sequence"]);
    let u2 = ["x", "y", "z", "w"];
    let c = &seq.charts[6];
    let expect: Vec<Polynomial> = ["x*w", "y*w", "z*w^2", "w"]
        .iter()
        .map(|s| parse_polynomial(s, &u2).unwrap())
        .collect();
    assert_eq!(c.map_to_base, expect);
}

#[test]
fn codimension_one_center_is_rejected() {
    let out = run_fx(&["blowup", "@line_sequence.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("at least two"));
}

#[test]
fn ex2_symbolic_identities_pass() {
    let out = run(&["example", "ex2", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: CaseReport = reparse(&json(&out));
    assert!(r.symbolic_passed());
}

#[test]
fn ex1_large_delta_fails_smoothness_probe_only() {
    let out = run(&["example", "ex1", "--delta", "1/2", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r: CaseReport = reparse(&json(&out));
    assert!(r.symbolic_passed());
    assert!(!r.probe_named("C is a smooth curve").unwrap().passed);
}

#[test]
fn ex1_default_delta_is_smooth() {
    let out = run(&["example", "ex1", "--json"]);
    let r: CaseReport = reparse(&json(&out));
    assert!(r.probe_named("C is a smooth curve").unwrap().passed);
}

#[test]
fn every_example_runs_as_text() {
    for id in subsmooth::casebook::CASE_IDS {
        let out = run(&["example", id]);
        assert_eq!(code(&out), 0, "{id}: {}", stderr(&out));
        assert!(String::from_utf8_lossy(&out.stdout).contains("[pass]"));
    }
}

#[test]
fn unknown_example_is_usage_error() {
    let out = run(&["example", "ex9"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("remark-final"));
}
