use std::fs;
use std::process::Command;

use loggas::cli::{dispatch_to, parse_coeffs, parse_run_config};

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut argv = vec!["loggas"];
    argv.extend_from_slice(args);
    let code = dispatch_to(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn fekete_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (code, _) = run(&["--out", dir.path().to_str().unwrap(), "fekete", "--n", "16", "--seed", "7"]);
        assert_eq!(code, 0);
    }
    let pa = fs::read(a.path().join("points.csv")).unwrap();
    let pb = fs::read(b.path().join("points.csv")).unwrap();
    assert_eq!(pa, pb);
    assert!(a.path().join("fekete.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fekete");
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn renorm_lattice_prints_the_constant() {
    let (code, out) = run(&["renorm", "--lattice", "--N", "8"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "-5.773861090033");
}

#[test]
fn sample_writes_samples_and_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, _) = run(&["--out", d, "sample", "--n", "4", "--beta", "2", "--steps", "4000", "--chains", "2"]);
    assert_eq!(code, 0);
    let samples = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("chain,sample,x0,x1,x2,x3\n"));
    let stats: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["config"]["n"], 4);
    assert!(stats["statistics"]["f_n"]["mean"].is_number());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, r#"{"schema_version": 1, "n": 3, "beta": 4.0}"#).unwrap();
    let (code, out) = run(&["--config", path.to_str().unwrap(), "partition", "--n", "2"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["n"], 2);
    assert_eq!(report["beta"], 4.0);
}

#[test]
fn exit_codes_from_the_binary() {
    let bin = env!("CARGO_BIN_EXE_loggas");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(code(&["--version"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["fekete", "--n", "abc"]), Some(2));
    assert_eq!(code(&["fekete", "--n", "0"]), Some(1));
    assert_eq!(code(&["fekete", "--n", "4", "--potential", "cubic"]), Some(1));
    assert_eq!(code(&["partition", "--n", "9", "--beta", "2", "--method", "quadrature"]), Some(1));
    assert_eq!(code(&["--threads", "2", "verify", "--only", "1"]), Some(0));
}

#[test]
fn verify_field_csv() {
    let (code, out) = run(&["verify-field", "--N", "1", "--random", "0"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("config_id,N,periodic_w,w_quadrature,eta,y_cut,rel_err"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(row[6].parse::<f64>().unwrap() < 1e-2);
}

#[test]
fn parsers_reject_garbage() {
    assert!(parse_coeffs(",,").is_err());
    assert!(parse_coeffs("1e400").is_err());
    assert!(parse_run_config("{}").is_err());
    assert!(parse_run_config(r#"{"schema_version": 1, "n": -1}"#).is_err());
}
