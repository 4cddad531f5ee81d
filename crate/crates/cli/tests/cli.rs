use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const LN2: f64 = std::f64::consts::LN_2;

fn qcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value of a `name  value` row in the printed report.
fn field(o: &Output, name: &str) -> String {
    stdout(o)
        .lines()
        .find_map(|l| {
            let mut t = l.split_whitespace();
            (t.next() == Some(name)).then(|| t.collect::<Vec<_>>().join(" "))
        })
        .unwrap_or_else(|| panic!("no `{name}` in\n{}", stdout(o)))
}

fn num(o: &Output, name: &str) -> f64 {
    field(o, name).parse().expect("numeric field")
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SLATER: &str = "fermion 4 2\n1 1 0 0 1 0\n";
const HALF_HALF: &str = "fermion 4 2\n0 0 1 1 0.7071067811865476 0\n1 1 0 0 0.7071067811865476 0\n";
const TWO_MODE_BOSONS: &str = "boson 2 2\n1 1 1 0\n";

#[test]
fn measure_slater_determinant_is_zero() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["measure", s(&file(&dir, "s.txt", SLATER))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(num(&o, "shifted_entropy").abs() < 1e-12);
    assert!(num(&o, "negativity").abs() < 1e-12);
    assert!(num(&o, "slater_concurrence").abs() < 1e-12);
    assert_eq!(field(&o, "verdict"), "n/a");
}

#[test]
fn measure_two_mode_bosons_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["measure", s(&file(&dir, "b.txt", TWO_MODE_BOSONS))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&o, "verdict"), "inconclusive");
    assert!(num(&o, "negativity_def1").abs() < 1e-12);
    assert!((num(&o, "negativity_def2") - 1.0).abs() < 1e-12);
}

#[test]
fn measure_maximally_correlated_fermions() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["measure", s(&file(&dir, "f.txt", HALF_HALF))]);
    assert!((num(&o, "shifted_entropy") - LN2).abs() < 1e-12);
    assert!((num(&o, "negativity") - 2.0).abs() < 1e-12);
    assert!((num(&o, "slater_concurrence") - 1.0).abs() < 1e-12);
    let bits = qcorr(&["--log2", "measure", s(&file(&dir, "f.txt", HALF_HALF))]);
    assert_eq!(field(&bits, "entropy_unit"), "bits");
    assert!((num(&bits, "shifted_entropy") - 1.0).abs() < 1e-12);
    assert!((num(&bits, "entropy") - 2.0).abs() < 1e-12);
}

#[test]
fn unnormalized_input_warns() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["measure", s(&file(&dir, "u.txt", "fermion 4 2\n1 1 0 0 3 0\n"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn state_file_round_trip() {
    let dir = TempDir::new().unwrap();
    let input = "fermion 5 2\n0 0 0 1 1 0.3 -0.1\n0 1 0 1 0 0.123456789 0.5\n1 0 1 0 0 -0.7 0.2\n";
    let out = dir.path().join("out.txt");
    let o = qcorr(&["measure", s(&file(&dir, "in.txt", input)), "--write-state", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = qcorr::io::read_state(&out).unwrap();
    let out2 = dir.path().join("out2.txt");
    qcorr(&["measure", s(&out), "--write-state", s(&out2)]);
    let second = qcorr::io::read_state(&out2).unwrap();
    let dev = (first.amps() - second.amps()).camax();
    assert!(dev <= 1e-15, "{dev}");
    assert!(!second.renormalized());
}

#[test]
fn malformed_files_exit_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["measure", s(&file(&dir, "m.txt", "fermion 4 2\n1 1 0 0 1 0\n1 1 1 0 1 0\n"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = qcorr(&["measure", s(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wrong_sector_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["slater", s(&file(&dir, "t.txt", "fermion 4 3\n1 1 1 0 1 0\n"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qcorr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(qcorr(&["witness", "x", "--variant", "zz"]).status.code(), Some(1));
    assert_eq!(qcorr(&["--help"]).status.code(), Some(0));
}

#[test]
fn slater_command_reports_decomposition() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["slater", s(&file(&dir, "f.txt", HALF_HALF))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&o, "slater_rank"), "2");
    assert!((num(&o, "slater_concurrence") - 1.0).abs() < 1e-12);
    assert!((num(&o, "half_negativity") - 1.0).abs() < 1e-12);
    assert!((num(&o, "line_search_robustness") - 1.0).abs() < 1e-6);
}

#[test]
fn witness_of_slater_determinant_is_zero() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["witness", s(&file(&dir, "s.txt", SLATER))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(num(&o, "robustness").abs() < 1e-9);
}

#[test]
fn witness_of_correlated_state_is_dumped() {
    let dir = TempDir::new().unwrap();
    let w = dir.path().join("w.txt");
    let o = qcorr(&["witness", s(&file(&dir, "f.txt", HALF_HALF)), "--dump-witness", s(&w)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = num(&o, "robustness");
    assert!((r - 1.0).abs() < 0.05, "{r}");
    let text = std::fs::read_to_string(&w).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("6"));
    assert_eq!(lines.count(), 36);
}

#[test]
fn random_robustness_near_three_halves() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["witness", "--variant", "rr", s(&file(&dir, "f.txt", HALF_HALF))]);
    let code = o.status.code();
    assert!(code == Some(0) || code == Some(3), "{code:?}");
    if code == Some(3) {
        assert_eq!(field(&o, "converged"), "false");
    }
    let r = num(&o, "robustness");
    assert!((r - 1.5).abs() < 0.1, "{r}");
}

#[test]
fn cut_cap_gives_exit_three() {
    let dir = TempDir::new().unwrap();
    let o = qcorr(&["witness", "--max-cuts", "1", s(&file(&dir, "f.txt", HALF_HALF))]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(field(&o, "converged"), "false");
    assert!(stderr(&o).contains("lower bound"));
}

#[test]
fn manybody_tight_binding() {
    let o = qcorr(&["manybody", "--model", "tight-binding", "--L", "4", "--N", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((num(&o, "entropy") - LN2).abs() < 1e-9);
    assert!(num(&o, "shifted_entropy").abs() < 1e-9);
}

#[test]
fn manybody_hubbard_exceeds_free_value() {
    let o = qcorr(&["manybody", "--model", "hubbard", "--u", "4", "--L", "4", "--N", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(num(&o, "entropy") > LN2 + 1e-3);
}

#[test]
fn manybody_correlator_file() {
    let dir = TempDir::new().unwrap();
    let c = file(&dir, "c.txt", "1 4 1 2\n0 0.5 0\n1 0 0\n2 0 0\n3 0 0\n");
    let o = qcorr(&["manybody", "--correlators", s(&c)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((num(&o, "entropy") - 4f64.ln()).abs() < 1e-12);
    for k in 0..4 {
        assert!((num(&o, &format!("lambda_{k}")) - 0.25).abs() < 1e-12);
    }
    let bad = file(&dir, "bad.txt", "1 4 1 3\n0 0.5 0\n1 0 0\n2 0 0\n3 0 0\n");
    assert_eq!(qcorr(&["manybody", "--correlators", s(&bad)]).status.code(), Some(2));
}

#[test]
fn manybody_correlators_round_trip() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("t.txt");
    let args = ["manybody", "--model", "hubbard", "--dim", "2", "--L", "2", "--twist", "0.3", "--u", "2"];
    let o = qcorr(&[&args[..], &["--write-correlators", s(&table)]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let back = qcorr(&["manybody", "--correlators", s(&table)]);
    assert!((num(&o, "entropy") - num(&back, "entropy")).abs() < 1e-12);
}

#[test]
fn manybody_degenerate_state_falls_back_to_negativity() {
    let o = qcorr(&["manybody", "--spin", "0", "--L", "4", "--N", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    num(&o, "negativity");
}

#[test]
fn csv_output_is_versioned_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = file(&dir, "f.txt", HALF_HALF);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    qcorr(&["--csv", s(&a), "measure", s(&input)]);
    qcorr(&["--csv", s(&b), "measure", s(&input)]);
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap().replace(s(&b), s(&a));
    assert_eq!(ta, tb);
    let mut lines = ta.lines();
    assert_eq!(lines.next(), Some("# qcorr-csv v1"));
    assert_eq!(lines.next(), Some("command,input_sha256,name,value"));
    assert!(ta.contains(",slater_concurrence,1.000000000000e0"));
}

#[test]
fn verify_subset_and_injected_fault() {
    let ok = qcorr(&["verify", "--only", "6,9"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert_eq!(stdout(&ok).lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let bad = qcorr(&["verify", "--only", "6", "--inject-fault", "6"]);
    assert_ne!(bad.status.code(), Some(0));
    assert!(stdout(&bad).contains("[FAIL]"));
}

#[test]
fn verify_verdicts_do_not_depend_on_seed() {
    for seed in ["0", "17"] {
        let o = qcorr(&["--seed", seed, "verify", "--only", "1,2,5"]);
        assert_eq!(o.status.code(), Some(0), "seed {seed}: {}", stdout(&o));
    }
}
