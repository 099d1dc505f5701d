//! End-to-end runs of the `tcohom` binary against golden files and fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> PathBuf {
    manifest().join("tests/fixtures").join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(manifest().join("tests/golden").join(name)).expect("golden file exists")
}

fn tcohom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcohom")).args(args).env_remove("TCOHOM_PRECISION").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 stderr")
}

fn status(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn bott_chern_table_matches_golden() {
    let o = tcohom(&["table", "--theory", "bott-chern", "--trunc", "2,2,2"]);
    assert_eq!(status(&o), 0);
    assert_eq!(stdout(&o), golden("bott_chern.txt"));
}

#[test]
fn bott_chern_csv_matches_golden() {
    let o = tcohom(&["table", "--theory", "bott-chern", "--format", "csv"]);
    assert_eq!(stdout(&o), golden("bott_chern.csv"));
}

#[test]
fn dolbeault_table_matches_golden() {
    assert_eq!(stdout(&tcohom(&["table", "--theory", "dolbeault"])), golden("dolbeault.txt"));
}

#[test]
fn delconj_table_matches_golden() {
    assert_eq!(stdout(&tcohom(&["table", "--theory", "delconj"])), golden("delconj.txt"));
}

#[test]
fn derham_table_matches_golden() {
    assert_eq!(stdout(&tcohom(&["table", "--theory", "derham"])), golden("derham.txt"));
}

#[test]
fn aeppli_table_carries_the_hausdorff_stamp() {
    let out = stdout(&tcohom(&["table", "--theory", "aeppli"]));
    assert!(out.lines().nth(1) == Some("[hausdorff-completed]"), "{out}");
}

#[test]
fn aeppli_table_matches_golden() {
    assert_eq!(stdout(&tcohom(&["table", "--theory", "aeppli"])), golden("aeppli.txt"));
}

#[test]
fn lattice_file_gives_the_same_table_as_the_default() {
    let lat = fixture("sqrt2.json");
    let o = tcohom(&["table", "--theory", "bott-chern", "--lattice", path(&lat)]);
    assert_eq!(stdout(&o), golden("bott_chern.txt"));
}

#[test]
fn all_tables_end_with_delta_and_third_lines() {
    let out = stdout(&tcohom(&["table", "--all", "--trunc", "1,2,1"]));
    let tail: Vec<&str> = out.lines().rev().take(2).collect();
    assert!(tail[1].starts_with("Delta^k (k = 0..4) = "), "{out}");
    assert_eq!(tail[0], "h_T^(1,1)+1 = 1");
    for title in ["de Rham", "Dolbeault", "del-conjugate", "Bott-Chern", "Aeppli", "third"] {
        assert!(out.contains(&format!("{title} cohomology (N=1 K=2 M=1)")), "{title} missing");
    }
}

#[test]
fn all_tables_csv_has_one_header_and_delta_rows() {
    let out = stdout(&tcohom(&["table", "--theory", "all", "--format", "csv", "--trunc", "1,2,1"]));
    assert_eq!(out.lines().filter(|l| l.starts_with("theory,")).count(), 1);
    assert_eq!(out.lines().filter(|l| l.starts_with("delta,")).count(), 5);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = ["table", "--all", "--format", "csv", "--trunc", "1,2,1"];
    assert_eq!(tcohom(&args).stdout, tcohom(&args).stdout);
    let check = ["check", "--suite", "leibniz", "--seed", "5", "--cases", "20"];
    assert_eq!(tcohom(&check).stdout, tcohom(&check).stdout);
}

#[test]
fn classify_sqrt2_is_theta_with_estimates() {
    let o = tcohom(&["classify", "--lattice", path(&fixture("sqrt2.json"))]);
    assert_eq!(status(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("classification: Theta"));
    assert!(out.contains("C_est: 0.25") && out.contains("delta_est: 0.5"), "{out}");
}

#[test]
fn classify_rational_pair_is_not_toroidal() {
    let o = tcohom(&["classify", "--lattice", path(&fixture("rational.json"))]);
    assert_eq!(status(&o), 0);
    assert!(stdout(&o).contains("classification: NotToroidal"));
}

#[test]
fn classify_liouville_is_wild_evidence() {
    let o = tcohom(&["classify", "--lattice", path(&fixture("liouville.json"))]);
    assert_eq!(status(&o), 0);
    assert!(stdout(&o).contains("classification: WildEvidence"));
}

#[test]
fn classify_json_is_parseable() {
    let o = tcohom(&["classify", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["classification"], "Theta");
}

#[test]
fn missing_and_malformed_lattice_files_exit_64() {
    let o = tcohom(&["classify", "--lattice", "/nonexistent/lattice.json"]);
    assert_eq!(status(&o), 64);
    assert!(stderr(&o).contains("cannot read"));
    let o = tcohom(&["classify", "--lattice", path(&fixture("malformed.json"))]);
    assert_eq!(status(&o), 64);
    assert!(stderr(&o).contains("tau.im"));
}

#[test]
fn bad_flags_exit_64() {
    assert_eq!(status(&tcohom(&["table", "--theory", "hodge"])), 64);
    assert_eq!(status(&tcohom(&["table", "--theory", "derham", "--trunc", "2,1,2"])), 64);
    assert_eq!(status(&tcohom(&["table", "--theory", "derham", "--tol", "0.5"])), 64);
    assert_eq!(status(&tcohom(&["classify", "--precision", "8"])), 64);
    assert_eq!(status(&tcohom(&["frobnicate"])), 64);
}

#[test]
fn precision_comes_from_the_environment_unless_flagged() {
    let run = |env: &str, args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_tcohom"))
            .args(args)
            .env("TCOHOM_PRECISION", env)
            .output()
            .expect("binary runs")
    };
    let j =
        |o: &Output| serde_json::from_slice::<serde_json::Value>(&o.stdout).expect("json")["precision_bits"].clone();
    assert_eq!(j(&run("256", &["classify", "--format", "json"])), 256);
    assert_eq!(j(&run("256", &["classify", "--format", "json", "--precision", "192"])), 192);
    assert_eq!(status(&run("lots", &["classify"])), 64);
}

#[test]
fn apply_deldelbar_kills_closed_constants() {
    let o = tcohom(&["apply", "--op", "deldelbar", path(&fixture("dz1_dzb1.json"))]);
    assert_eq!(status(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["entries"].as_array().map(Vec::len), Some(0));
}

#[test]
fn apply_d_on_t4_gives_the_two_volume_terms() {
    let o = tcohom(&["apply", "--op", "d", path(&fixture("t4_dz1_dzb1.json"))]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["degree"], 3);
    assert_eq!(v["entries"].as_array().map(Vec::len), Some(2));
}

#[test]
fn apply_missing_form_exits_64() {
    assert_eq!(status(&tcohom(&["apply", "--op", "d", "/nonexistent/form.json"])), 64);
}

#[test]
fn solve_umeno_keeps_the_nonexact_class() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("dz1_dz2_dzb1.json");
    let o = tcohom(&["solve", "--solver", "umeno", path(&input), "--output", path(dir.path())]);
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("dz1^dz2^dzb1 = 1"));
    let residual: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("residual.json")).unwrap()).unwrap();
    let original: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&input).unwrap()).unwrap();
    assert_eq!(residual["entries"], original["entries"]);
    let psi: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("psi.json")).unwrap()).unwrap();
    assert_eq!(psi["entries"].as_array().map(Vec::len), Some(0));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    for key in ["kind", "D", "delta", "shell_sums"] {
        assert!(cert.get(key).is_some(), "certificate lacks {key}");
    }
}

#[test]
fn solve_aeppli11_on_the_t4_generator() {
    for route in ["periodic", "cover"] {
        let dir = tempfile::tempdir().unwrap();
        let o = tcohom(&[
            "solve",
            "--solver",
            "aeppli11",
            "--path",
            route,
            path(&fixture("t4_dz1_dzb1.json")),
            "--output",
            path(dir.path()),
        ]);
        assert_eq!(status(&o), 0, "{}", stderr(&o));
        let out = stdout(&o);
        let values: Vec<&str> = out.lines().skip(1).map(|l| l.rsplit(" = ").next().unwrap()).collect();
        assert_eq!(values, ["0", "1", "0", "0"], "{route}: {out}");
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution.json")).unwrap()).unwrap();
        assert!(summary["cover_flag"].is_string());
    }
}

#[test]
fn solve_deldelbar_on_a_nonexact_class_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = tcohom(&["solve", "--solver", "deldelbar", path(&fixture("dz1_dzb1.json")), "--output", path(dir.path())]);
    assert_eq!(status(&o), 3);
    assert!(stderr(&o).contains("not d-exact"), "{}", stderr(&o));
}

#[test]
fn diagnose_sqrt2_stays_above_the_envelope() {
    let o = tcohom(&["diagnose", "--shells", "20"]);
    assert_eq!(status(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,min_abs_A,fitted_envelope"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (c[1], c[2])
        })
        .collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|(m, e)| *e > 0.0 && m >= e));
    assert!(stderr(&o).contains("theta-like"));
}

#[test]
fn diagnose_liouville_is_wild_like() {
    let o = tcohom(&["diagnose", "--lattice", path(&fixture("liouville.json"))]);
    assert!(stderr(&o).contains("wild-like decay"), "{}", stderr(&o));
}

#[test]
fn diagnose_zero_shells_prints_only_the_header() {
    let o = tcohom(&["diagnose", "--shells", "0"]);
    assert_eq!(status(&o), 0);
    assert_eq!(stdout(&o), "n,min_abs_A,fitted_envelope\n");
}

#[test]
fn check_passes_on_the_default_lattice() {
    let o = tcohom(&["check", "--cases", "40"]);
    assert_eq!(status(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("[PASS]")).count(), 7);
}

#[test]
fn check_outcome_does_not_depend_on_the_seed() {
    for seed in ["1", "99"] {
        let o = tcohom(&["check", "--suite", "d2", "--seed", seed, "--cases", "30"]);
        assert_eq!(status(&o), 0);
        assert!(stdout(&o).starts_with("[PASS] d2"));
    }
}

#[test]
fn check_skips_lattice_dependent_suites_on_a_wild_lattice() {
    let o = tcohom(&["check", "--lattice", path(&fixture("liouville.json")), "--suite", "acyclicity"]);
    assert_eq!(status(&o), 0);
    assert!(stdout(&o).starts_with("[SKIP] acyclicity"), "{}", stdout(&o));
}
