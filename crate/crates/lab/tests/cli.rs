use std::path::{Path, PathBuf};

use fns_core::solver::{exact_solution, ExactKind};
use fns_lab::output::config_digest;
use fns_lab::{read_field_snapshot, run_command, RunManifest, EXIT_ERROR, EXIT_FAILED, EXIT_OK};

fn fns(args: &[&str]) -> i32 {
    run_command(std::iter::once("fns").chain(args.iter().copied()))
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|x| x.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn recurrences_report_g_and_f() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fns(&["recurrences", "--nmax", "40", "--out", &out_arg(dir.path())]), EXIT_OK);
    let rows = csv_rows(dir.path().join("sequences.csv"));
    assert_eq!(rows[0], ["sequence", "n", "value", "ln_value", "normalized", "bound_constant"]);
    let g: Vec<&str> = rows[1..6].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(g, ["1", "2", "8", "40", "224"]);
    assert_eq!(rows.len(), 1 + 41 + 41);
    assert!(rows.iter().skip(42).all(|r| r[0] == "F"));
    let m = manifest(dir.path());
    assert!(m.pass && m.command == "recurrences");
    assert_eq!(m.config_digest, config_digest("recurrences", &m.config));
    assert!(m.outputs.iter().all(|p| Path::new(p).exists()));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let code = fns(&[
            "simulate", "--initial", "gevrey_random", "--amplitude", "0.05", "--n", "32", "--t-end", "0.05",
            "--dt", "0.005", "--output-every", "2", "--seed", "9", "--out", &out_arg(d.path()),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    for f in ["trajectory.csv", "kato.csv", "final.fns1"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    assert_eq!(manifest(a.path()).config_digest, manifest(b.path()).config_digest);
    assert_eq!(manifest(a.path()).config["seed"], 9);
}

#[test]
fn simulate_shear_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let code = fns(&[
        "simulate", "--initial", "shear", "--amplitude", "1", "--n", "32", "--gamma", "1.5", "--t-end", "0.2",
        "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code, EXIT_OK);
    let s = read_field_snapshot(&dir.path().join("final.fns1")).unwrap();
    assert!((s.time - 0.2).abs() < 1e-15);
    let exact = exact_solution(ExactKind::Shear, 1.5, 1.0, 0.2, s.field.grid).unwrap();
    assert!(s.field.relative_l2_error(&exact) < 1e-10);
    let rows = csv_rows(dir.path().join("trajectory.csv"));
    assert_eq!(rows[0], ["time", "energy", "dissipation", "norm_L2", "norm_L6", "norm_L12", "norm_Linf"]);
}

#[test]
fn simulate_restarts_from_a_snapshot() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let common = ["--initial", "taylor_green", "--amplitude", "1", "--n", "16", "--dt", "0.01"];
    let mut a = vec!["simulate", "--t-end", "0.1", "--out"];
    let fa = out_arg(first.path());
    a.push(&fa);
    a.extend(common);
    assert_eq!(fns(&a), EXIT_OK);
    let init = first.path().join("final.fns1").display().to_string();
    let fb = out_arg(second.path());
    let b = [
        "simulate", "--initial", "snapshot", "--initial-path", &init, "--n", "16", "--dt", "0.01", "--t-end", "0.1",
        "--out", &fb,
    ];
    assert_eq!(fns(&b), EXIT_OK);
    let s = read_field_snapshot(&second.path().join("final.fns1")).unwrap();
    let exact = exact_solution(ExactKind::TaylorGreen, 1.5, 1.0, 0.2, s.field.grid).unwrap();
    assert!(s.field.relative_l2_error(&exact) < 1e-10);
    let bad = ["simulate", "--initial", "snapshot", "--initial-path", &init, "--n", "32", "--out", &fb];
    assert_eq!(fns(&bad), EXIT_ERROR);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"nmax": 12, "gamma": 1.5}"#).unwrap();
    let out = dir.path().join("o");
    let (c, o) = (cfg.display().to_string(), out_arg(&out));
    assert_eq!(fns(&["recurrences", "--config", &c, "--gamma", "2", "--out", &o]), EXIT_OK);
    let m = manifest(&out);
    assert_eq!(m.config["nmax"], 12);
    assert_eq!(m.config["gamma"], 2.0);
    std::fs::write(&cfg, r#"{"nmax": 12, "gama": 1.5}"#).unwrap();
    assert_eq!(fns(&["recurrences", "--config", &c, "--out", &o]), EXIT_ERROR);
    std::fs::write(&cfg, r#"{"q_list": [6, "inf"], "n": 16, "t_end": 0.01, "dt": 0.01}"#).unwrap();
    assert_eq!(fns(&["simulate", "--config", &c, "--out", &o]), EXIT_OK);
    assert_eq!(manifest(&out).config["q_list"], serde_json::json!([6.0, "inf"]));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(fns(&["recurrences", "--bogus", "1"]), EXIT_ERROR);
    assert_eq!(fns(&["no-such-command"]), EXIT_ERROR);
    assert_eq!(fns(&["radius", "--out", &o]), EXIT_ERROR);
    assert_eq!(fns(&["kernel-table", "--kind", "poisson", "--out", &o]), EXIT_ERROR);
    assert_eq!(fns(&["recurrences", "--threads", "0", "--out", &o]), EXIT_ERROR);
    assert_eq!(fns(&["simulate", "--gamma", "0.5", "--out", &o]), EXIT_ERROR);
}

#[test]
fn failed_verification_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let code = fns(&[
        "simulate", "--amplitude", "0.05", "--n", "32", "--t-end", "0.05", "--dt", "0.005", "--out", &o,
    ]);
    assert_eq!(code, EXIT_OK);
    let snap = dir.path().join("final.fns1").display().to_string();
    let report = ["derivative-report", "--snapshot", &snap, "--kmax", "6", "--out", &o];
    assert_eq!(fns(&report), EXIT_OK);
    let rows = csv_rows(dir.path().join("derivative_report.csv"));
    assert_eq!(rows.len(), 1 + 3 * 7);
    let strict = ["derivative-report", "--snapshot", &snap, "--kmax", "6", "--factor", "0.5", "--out", &o];
    assert_eq!(fns(&strict), EXIT_FAILED);
    assert!(!manifest(dir.path()).pass);
}

#[test]
fn kernel_table_and_verification_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(fns(&["kernel-table", "--d", "1", "--gamma", "2", "--samples", "64", "--out", &o]), EXIT_OK);
    let rows = csv_rows(dir.path().join("kernel_table.csv"));
    assert_eq!(rows[0], ["x1", "value"]);
    assert_eq!(rows.len(), 65);
    let peak: f64 = rows[33][1].parse().unwrap();
    assert!((peak - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    let code = fns(&[
        "verify-kernels", "--gamma", "1.5", "--d", "2", "--kmax", "3", "--samples", "64", "--out", &o,
    ]);
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(dir.path().join("verify_kernels.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows[1..].iter().all(|r| r[9] == "true"));
}

#[test]
fn radius_and_bench_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let code = fns(&[
        "simulate", "--amplitude", "0.02", "--n", "64", "--t-end", "0.04", "--dt", "0.002", "--output-every", "5",
        "--write-snapshots", "true", "--out", &o,
    ]);
    assert_eq!(code, EXIT_OK);
    let snaps: Vec<String> = (1..=4)
        .map(|i| dir.path().join(format!("snapshot_{i:05}.fns1")).display().to_string())
        .collect();
    let list = snaps.join(",");
    assert_eq!(fns(&["radius", "--snapshots", &list, "--r0", "0.3", "--out", &o]), EXIT_OK);
    let rows = csv_rows(dir.path().join("radius.csv"));
    assert_eq!(rows.len(), 5);
    let r: Vec<f64> = rows[1..].iter().map(|x| x[2].parse().unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]) && r[0] > 0.3, "{r:?}");
    assert!(dir.path().join("radius_growth.csv").exists());

    let code = fns(&[
        "bench-inequalities", "--leibniz-n", "32", "--leibniz-trials", "40", "--f-nmax", "30", "--out", &o,
    ]);
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(dir.path().join("bench_reports.csv"));
    assert_eq!(rows.len(), 1 + 6);
    let seq = csv_rows(dir.path().join("bench_sequences.csv"));
    assert_eq!(seq.len(), 1 + 1 + 24);
}
