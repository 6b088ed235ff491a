use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semicocycle")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn model(dir: &TempDir, file: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(file);
    let mut args = vec!["model"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", path_str(&out)]);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn write(dir: &TempDir, file: &str, text: &str) -> PathBuf {
    let p = dir.path().join(file);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let iho = model(&dir, "iho.json", &["--name", "iho", "--dim", "8"]);
    let shg = model(&dir, "shg.json", &["--name", "shg", "--dim", "3", "--omega", "1", "--coupling", "0.5"]);
    let ok = run(&["validate", "--generator", path_str(&iho), "--seed", "1", "--probes", "20"]);
    assert_eq!(code(&ok), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(report["verdicts"]["form_inequality"], true);
    // The printed number-term sign breaks the form inequality.
    let bad = run(&["validate", "--generator", path_str(&shg), "--seed", "1", "--probes", "20"]);
    assert_eq!(code(&bad), 1);
    assert_eq!(code(&run(&["validate", "--generator", path_str(&iho)])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["validate", "--generator", path_str(&missing), "--seed", "1"])), 2);
}

#[test]
fn mismatched_blocks_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"h_dim": 1, "noise_dim": 1, "blocks": [[[[[0,0]]], [[[0,0]]]], [[[[0,0]]], [[[0,0],[0,0]]]]]}"#,
    );
    let o = run(&["validate", "--generator", path_str(&bad), "--seed", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("blocks[1][1]"));
}

#[test]
fn seeded_outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let g = model(&dir, "bd.json", &["--name", "bd", "--dim", "7", "--lambda", "const:1"]);
    let schur = |seq: bool| {
        let mut args = vec!["schur", "--generator", path_str(&g), "--seed", "5", "--trials", "20"];
        if seq {
            args.insert(0, "--sequential");
        }
        let o = run(&args);
        assert_eq!(code(&o), 0);
        stdout(&o)
    };
    let first = schur(false);
    assert_eq!(first, schur(false));
    assert_eq!(first, schur(true));
    let validate = || stdout(&run(&["validate", "--generator", path_str(&g), "--seed", "3", "--probes", "30"]));
    assert_eq!(validate(), validate());
}

#[test]
fn reconstruct_at_time_zero_is_inner_product() {
    let dir = TempDir::new().unwrap();
    let g = model(&dir, "cayley.json", &["--name", "cayley", "--dim", "4"]);
    let u = write(&dir, "u.json", r#"{"entries": [[1,0],[0,1],[0,0],[0,0]]}"#);
    let v = write(&dir, "v.json", r#"{"entries": [[2,0],[0,0],[0,0],[1,0]]}"#);
    let f = write(&dir, "f.json", r#"{"T": "1", "segments": [{"t0": "0", "value": [[0.3, 0]]}]}"#);
    let trace = dir.path().join("trace.csv");
    let o = run(&[
        "reconstruct", "--generator", path_str(&g), "--u", path_str(&u), "--v", path_str(&v),
        "--f", path_str(&f), "--g", path_str(&f), "--t", "0", "--normalized",
        "--trace", path_str(&trace), "--trace-steps", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let z: [f64; 2] = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(z, [2.0, 0.0]);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().next(), Some("t,re,im"));
}

#[test]
fn reconstruct_beyond_support_is_rejected() {
    let dir = TempDir::new().unwrap();
    let g = model(&dir, "cayley.json", &["--name", "cayley", "--dim", "3"]);
    let u = write(&dir, "u.json", r#"{"entries": [[1,0],[0,0],[0,0]]}"#);
    let f = write(&dir, "f.json", r#"{"T": "1", "segments": [{"t0": "0", "value": [[1, 0]]}]}"#);
    let o = run(&[
        "reconstruct", "--generator", path_str(&g), "--u", path_str(&u), "--v", path_str(&u),
        "--f", path_str(&f), "--g", path_str(&f), "--t", "1.5",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn empty_grids_still_write_headers() {
    let dir = TempDir::new().unwrap();
    let g = model(&dir, "iho.json", &["--name", "iho", "--dim", "4"]);
    let qds = run(&["qds", "--generator", path_str(&g), "--times", ""]);
    assert_eq!(code(&qds), 0);
    assert_eq!(stdout(&qds), "t,defect,min_diag_defect_index,min_choi_eig\n");
    let trotter = run(&["trotter", "--generator", path_str(&g), "--times", "", "--schedule", "2,4"]);
    assert_eq!(code(&trotter), 0);
    assert_eq!(stdout(&trotter), "n,t,error\n");
}

#[test]
fn qds_grid_rows_and_cp_column() {
    let dir = TempDir::new().unwrap();
    let g = model(&dir, "cayley.json", &["--name", "cayley", "--dim", "5"]);
    let out = dir.path().join("qds.csv");
    let o = run(&["qds", "--generator", path_str(&g), "--tmax", "1", "--steps", "4", "--cp", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.split(',').count() == 4 && !r.ends_with(',')));
}

#[test]
fn semigroup_reports_contraction() {
    let dir = TempDir::new().unwrap();
    let g = model(&dir, "iho.json", &["--name", "iho", "--dim", "6"]);
    let o = run(&["semigroup", "--generator", path_str(&g), "--c", "1:0.5", "--d", "-0.5", "--t", "0.75"]);
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["contraction"], true);
    assert!(r["op_norm"].as_f64().unwrap() <= 1.0 + 1e-10);
    assert_eq!(code(&run(&["semigroup", "--generator", path_str(&g), "--c", "1,2", "--t", "1"])), 2);
    assert_eq!(code(&run(&["semigroup", "--generator", path_str(&g), "--t", "-1"])), 2);
}
