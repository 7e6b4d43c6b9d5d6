use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_weylgroupoid"));
    c.env_remove("WEYLGROUPOID_TORSION");
    c
}

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(rel)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_a4() {
    let o = bin().arg("classify").arg(data("rank4/r01_1.dgm")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("full_finite, 10 positive roots, 120 bases, Cartan type A_4"), "{}", stdout(&o));
}

#[test]
fn chain_round_trips_through_a_file() {
    let o = bin().args(["chain", "4", "q", "1", "3", "4"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("v 3 q^-1") && text.contains("e 1 2 q^-1") && text.contains("e 3 4 q"), "{text}");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.dgm");
    std::fs::write(&path, &text).unwrap();
    let o = bin().arg("roots").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 10);
}

#[test]
fn equiv_json_is_stable() {
    let a = data("rank4/r01_1.dgm");
    let run = || bin().args(["--json", "equiv"]).arg(&a).arg(&a).output().unwrap();
    let (x, y) = (run(), run());
    assert_eq!(x.status.code(), Some(0));
    assert_eq!(x.stdout, y.stdout);
    let v: serde_json::Value = serde_json::from_slice(&x.stdout).unwrap();
    assert_eq!(v["equivalent"], true);
    assert!(v["shared_diagram"]["vertices"].is_array());
}

#[test]
fn different_rows_are_not_equivalent() {
    let o = bin().arg("equiv").arg(data("rank4/r02_1.dgm")).arg(data("rank4/r03_1.dgm")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "equivalent: false");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dgm");
    std::fs::write(&bad, "dim 2\nv 1 q\nv 2 q\ne 1 3 q\n").unwrap();
    let o = bin().arg("classify").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.dgm"));
    assert_eq!(bin().arg("classify").arg(dir.path().join("missing")).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["--torsion", "7", "chain", "3", "q"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["chain", "3", "q", "4"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["frobnicate"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn roots_of_an_infinite_diagram_is_a_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("affine.dgm");
    // Cartan matrix with a_12 = a_21 = -4, of indefinite type
    std::fs::write(&path, "dim 2\ngen q generic\nv 1 q\nv 2 q\ne 1 2 q^-4\n").unwrap();
    let o = bin().arg("classify").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).starts_with("full_finite"), "{}", stdout(&o));
    assert_eq!(bin().arg("roots").arg(&path).output().unwrap().status.code(), Some(1));
}

#[test]
fn torsion_from_environment() {
    let o = bin().env("WEYLGROUPOID_TORSION", "9").args(["chain", "2", "q"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_single_row_and_sweep() {
    let o = bin().args(["verify", "tables", "--table", "rank4", "--row", "7"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("rank4 row 7: ok"));
    let o = bin().args(["--json", "verify", "sweep", "4", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["matched"], 10);
    assert_eq!(v["discrepancies"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_appendix_passes() {
    let o = bin().args(["verify", "appendix"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("0 failures\n"));
}
