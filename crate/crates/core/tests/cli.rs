// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use rectifiability::cli::{read_cloud, run, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
use serde_json::Value;

fn rectify(args: &[&str]) -> i32 {
    run(std::iter::once("rectify").chain(args.iter().copied()))
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_a_cantor_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("c.txt");
    let rep = dir.path().join("r.json");
    let code = rectify(&[
        "generate", "--kind", "cantor4", "--lambda", "0.25", "--depth", "5",
        "--out", cloud.to_str().unwrap(), "--report", rep.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let (h, c) = read_cloud(std::fs::File::open(&cloud).unwrap()).unwrap();
    assert_eq!(h.count, 1024);
    assert_eq!(c.len(), 1024);
    let r = report(&rep);
    assert_eq!(r["result"]["count"], 1024);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["command"]["generate"]["generator"]["lambda"], 0.25);
}

#[test]
fn tst_on_a_segment_file_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("s.txt");
    let rep = dir.path().join("r.json");
    let csv = dir.path().join("l.csv");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    assert_eq!(rectify(&["generate", "--kind", "segment", "--ambient-dim", "2", "--count", "257", "--out", &p(&cloud)]), EXIT_OK);
    let code = rectify(&["tst", "--input", &p(&cloud), "--report", &p(&rep), "--csv", &p(&csv)]);
    assert_eq!(code, EXIT_OK);
    let r = report(&rep);
    assert_eq!(r["result"]["report"]["beta_sum"].as_f64().unwrap(), 0.0);
    let ledger = std::fs::read_to_string(&csv).unwrap();
    let n = r["result"]["report"]["ledger"].as_array().unwrap().len();
    assert_eq!(ledger.lines().count(), n + 1);
    assert!(ledger.starts_with("cube,generation,side,beta,contribution"));
}

#[test]
fn dimension_certificate_of_cantor_three_tenths() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    let code = rectify(&[
        "dimension", "--kind", "cantor4", "--lambda", "0.3", "--depth", "7", "--report", rep.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let b = report(&rep)["result"]["certificate"]["box_dimension"].as_f64().unwrap();
    assert!((b - 1.15).abs() <= 0.07, "{b}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.json");
    let rep = rep.to_str().unwrap();
    assert_eq!(rectify(&["tst", "--input", "/nonexistent/cloud.txt", "--report", rep]), EXIT_VALIDATION);
    assert_eq!(rectify(&["tst", "--report", rep]), EXIT_VALIDATION);
    assert_eq!(rectify(&["tst", "--kind", "koch", "--ratio", "0.3", "--report", rep]), EXIT_VALIDATION);
    assert_eq!(rectify(&["capacity", "--content=-1", "--measure", "1", "--gamma", "1", "--report", rep]), EXIT_VALIDATION);
    assert_eq!(rectify(&["nosuchcommand"]), EXIT_VALIDATION);
    let far = ["beta", "--kind", "segment", "--ambient-dim", "2", "--count", "9", "--beta", "measure",
        "--center", "5,5", "--ball-radius", "0.5", "--report", rep];
    assert_eq!(rectify(&far), EXIT_NUMERICAL);
    assert_eq!(rectify(&["capacity", "--content", "1", "--measure", "1", "--gamma", "1", "--csv", "x.csv", "--report", rep]), EXIT_VALIDATION);
    assert!(!Path::new("x.csv").exists());
}

#[test]
fn bad_cloud_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.txt");
    std::fs::write(&f, "{\"ambient_dim\":2,\"resolution\":0.1,\"count\":2}\n0,0\nnan,1\n").unwrap();
    assert_eq!(rectify(&["content", "--input", f.to_str().unwrap()]), EXIT_VALIDATION);
}
