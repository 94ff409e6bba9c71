use std::process::{Command, Output};

use serde_json::Value;

fn curve(name: &str) -> String {
    format!("{}/../../curves/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quartic-cm")).args(args).output().expect("binary runs")
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

#[test]
fn modp_large_prime_respects_weil_bound() {
    let out = run(&["modp", "--curve", &curve("fermat.txt"), "-p", "1009"]);
    assert!(out.status.success());
    let rec = &json_lines(&out)[0];
    assert_eq!(rec["status"], "ok");
    let a = rec["a_p"].as_i64().unwrap();
    assert!(a.abs() <= 190, "{a}");
    assert_eq!(rec["A_p"].as_array().unwrap().len(), 3);
}

#[test]
fn modp_check_runs_oracles() {
    let out = run(&["modp", "--curve", &curve("fermat.txt"), "-p", "5", "--check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = &json_lines(&out)[0];
    let verified: Vec<&str> = rec["verified"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(verified.contains(&"bruteforce_cm") && verified.contains(&"lpoly"), "{verified:?}");
    assert_eq!(rec["count"], 0);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["modp", "--curve", &curve("fermat.txt"), "-p", "15"]).status.code(), Some(2));
    assert_eq!(run(&["modp", "--curve", "/nonexistent", "-p", "5"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "--curve", &curve("fermat.txt"), "-p", "65537", "cm"]).status.code(), Some(2));
    let klein = run(&["range", "--curve", &curve("klein.txt"), "-N", "100"]);
    assert_eq!(klein.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&klein.stderr).contains("corner"));
}

#[test]
fn oracle_subcommands() {
    let count = &json_lines(&run(&["oracle", "--curve", &curve("fermat.txt"), "-p", "5", "count"]))[0];
    assert_eq!(count["count"], 0);
    let cm = &json_lines(&run(&["oracle", "--curve", &curve("klein.txt"), "-p", "2", "cm"]))[0];
    assert_eq!(cm["A_p"], serde_json::json!([[0, 1, 0], [0, 0, 1], [1, 0, 0]]));
    let l = &json_lines(&run(&["oracle", "--coeffs", "1 0 0 0 0 0 0 0 0 0 1 0 0 0 1", "-p", "5", "lpoly"]))[0];
    assert_eq!(l["lpoly"].as_array().unwrap().len(), 7);
}

#[test]
fn range_is_checked_and_ordered() {
    let out = run(&["range", "--curve", &curve("fermat.txt"), "-N", "1024", "--check-upto", "1024"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = json_lines(&out);
    assert_eq!(recs.len(), 172);
    let ps: Vec<u64> = recs.iter().map(|r| r["p"].as_u64().unwrap()).collect();
    assert!(ps.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(recs[0]["status"], "bad_reduction");
}

#[test]
fn range_output_independent_of_kappa_and_threads() {
    let c = curve("sample.json");
    let base = run(&["range", "--curve", &c, "-N", "8192", "--kappa", "0"]);
    assert!(base.status.success());
    for extra in [["--kappa", "4"], ["--threads", "1"]] {
        let other = run(&["range", "--curve", &c, "-N", "8192", extra[0], extra[1]]);
        assert_eq!(base.stdout, other.stdout, "{extra:?}");
    }
}

#[test]
fn csv_output_has_fixed_header() {
    let dir = std::env::temp_dir().join(format!("quartic-cm-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.csv");
    let out = run(&["range", "--curve", &curve("fermat.txt"), "-N", "100", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 23);
    assert!(header.starts_with("p,status,a_p,trace,count,a11"));
    assert!(lines.all(|l| l.split(',').count() == 23));
    std::fs::remove_dir_all(&dir).ok();
}
