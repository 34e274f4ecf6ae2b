//! End-to-end runs of the compiled binary: pipelines, exit codes, and the
//! file formats the subcommands promise each other.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdsamp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn config_path(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn gen_operator_reports_tight_frame_bounds() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "gen-operator",
        "--kind",
        "tight-frame",
        "--n",
        "144",
        "--d",
        "120",
        "--seed",
        "7",
        "--out",
        &path_str(&dir, "op"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("144x120"), "{}", text);
    assert!(text.contains("frame bounds: (1, 1)"), "{}", text);
    assert!(dir.path().join("op.csv").exists());
    assert!(dir.path().join("op.json").exists());
}

#[test]
fn gen_operator_dif2d_has_expected_shape() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "gen-operator",
        "--kind",
        "dif2d",
        "--N",
        "14",
        "--out",
        &path_str(&dir, "dif"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("364x196"), "{}", stdout(&out));
}

#[test]
fn gen_operator_haar_rejects_non_power_of_two() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "gen-operator",
        "--kind",
        "haar",
        "--N",
        "6",
        "--out",
        &path_str(&dir, "haar"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("power of 2"), "{}", stderr(&out));
}

fn frame_pipeline(dir: &TempDir) -> (String, String, String) {
    let op = path_str(dir, "op");
    let sig = path_str(dir, "sig");
    let meas = path_str(dir, "meas");
    let out = run(&[
        "gen-operator",
        "--kind",
        "tight-frame",
        "--n",
        "144",
        "--d",
        "120",
        "--seed",
        "7",
        "--out",
        &op,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&[
        "gen-signal",
        "--operator",
        &op,
        "--cosparsity",
        "110",
        "--seed",
        "3",
        "--out",
        &sig,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&[
        "sample",
        "--scheme",
        "frame",
        "--operator",
        &op,
        "--signal",
        &sig,
        "--gamma",
        "0.9",
        "--seed",
        "5",
        "--out",
        &meas,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    (op, sig, meas)
}

#[test]
fn frame_pipeline_recovers_the_planted_signal() {
    let dir = TempDir::new().unwrap();
    let (op, sig, meas) = frame_pipeline(&dir);
    let rec = path_str(&dir, "rec");
    let out = run(&[
        "recover",
        "--scheme",
        "frame",
        "--measurement",
        &meas,
        "--operator",
        &op,
        "--truth",
        &sig,
        "--out",
        &rec,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let rel: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rel_error = "))
        .expect("rel_error line")
        .parse()
        .unwrap();
    assert!(rel <= 1e-6, "rel_error {}", rel);
    assert!(dir.path().join("rec.x_hat.csv").exists());
    assert!(dir.path().join("rec.w_hat.csv").exists());
    let report = std::fs::read_to_string(dir.path().join("rec.report.json")).unwrap();
    assert!(report.contains("\"converged\": true"), "{}", report);
    assert!(report.contains("\"rel_error\""), "{}", report);
}

#[test]
fn recover_exits_two_when_the_solver_stalls() {
    let dir = TempDir::new().unwrap();
    let (op, _sig, meas) = frame_pipeline(&dir);
    let out = run(&[
        "recover",
        "--scheme",
        "frame",
        "--measurement",
        &meas,
        "--operator",
        &op,
        "--program",
        "iht",
        "--max-iters",
        "1",
        "--out",
        &path_str(&dir, "stall"),
    ]);
    assert_eq!(code(&out), 2, "{}\n{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("converged = false"), "{}", stdout(&out));
}

#[test]
fn recover_names_the_missing_file() {
    let dir = TempDir::new().unwrap();
    let (op, _sig, _meas) = frame_pipeline(&dir);
    let ghost = path_str(&dir, "ghost");
    let out = run(&[
        "recover",
        "--scheme",
        "frame",
        "--measurement",
        &ghost,
        "--operator",
        &op,
        "--out",
        &path_str(&dir, "x"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("ghost"), "{}", stderr(&out));
}

#[test]
fn recover_names_both_files_on_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    let (_op, _sig, meas) = frame_pipeline(&dir);
    let other = path_str(&dir, "other");
    let out = run(&[
        "gen-operator",
        "--kind",
        "tight-frame",
        "--n",
        "30",
        "--d",
        "20",
        "--seed",
        "1",
        "--out",
        &other,
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "recover",
        "--scheme",
        "frame",
        "--measurement",
        &meas,
        "--operator",
        &other,
        "--out",
        &path_str(&dir, "x"),
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("meas.a.csv"), "{}", err);
    assert!(err.contains("other.csv"), "{}", err);
}

#[test]
fn dif_pipeline_round_trips_an_image() {
    let dir = TempDir::new().unwrap();
    let op = path_str(&dir, "dif");
    let img = path_str(&dir, "img");
    let meas = path_str(&dir, "dmeas");
    assert_eq!(
        code(&run(&[
            "gen-operator",
            "--kind",
            "dif2d",
            "--N",
            "14",
            "--out",
            &op
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "gen-signal",
            "--image",
            "--N",
            "14",
            "--components",
            "4",
            "--seed",
            "11",
            "--out",
            &img
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "sample", "--scheme", "dif", "--operator", &op, "--signal", &img, "--gamma", "0.95",
            "--m2", "2", "--seed", "21", "--out", &meas
        ])),
        0
    );
    let out = run(&[
        "recover",
        "--scheme",
        "dif",
        "--measurement",
        &meas,
        "--operator",
        &op,
        "--truth",
        &img,
        "--out",
        &path_str(&dir, "drec"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rel: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("rel_error = "))
        .expect("rel_error line")
        .parse()
        .unwrap();
    assert!(rel <= 1e-3, "rel_error {}", rel);
}

#[test]
fn experiment_smoke_run_hits_full_rate_at_gamma_one() {
    let dir = TempDir::new().unwrap();
    let base = path_str(&dir, "exp");
    let out = run(&[
        "experiment",
        "--config",
        &config_path("fig1_desk.json"),
        "--trials",
        "1",
        "--gammas",
        "1.0",
        "--out",
        &base,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = std::fs::read_to_string(dir.path().join("exp.summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("gamma,scheme,rate,mse,trials"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "1", "rate should be 1 at gamma 1: {}", line);
    }
    assert!(dir.path().join("exp.trials.csv").exists());
}

#[test]
fn experiment_is_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let mut outputs: Vec<(String, String)> = Vec::new();
    for workers in ["1", "2"] {
        let base = path_str(&dir, &format!("w{}", workers));
        let out = run(&[
            "experiment",
            "--config",
            &config_path("fig1_desk.json"),
            "--trials",
            "3",
            "--gammas",
            "0.6,1.0",
            "--workers",
            workers,
            "--out",
            &base,
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push((
            std::fs::read_to_string(format!("{}.trials.csv", base)).unwrap(),
            std::fs::read_to_string(format!("{}.summary.csv", base)).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "trials CSVs differ");
    assert_eq!(outputs[0].1, outputs[1].1, "summary CSVs differ");
}

#[test]
fn report_prints_the_summary_table() {
    let dir = TempDir::new().unwrap();
    let base = path_str(&dir, "exp");
    let out = run(&[
        "experiment",
        "--config",
        &config_path("fig2_desk.json"),
        "--trials",
        "1",
        "--gammas",
        "1.0",
        "--out",
        &base,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["report", "--summary", &format!("{}.summary.csv", base)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("dif_scheme"), "{}", text);
    assert!(text.contains("analysis_baseline"), "{}", text);
}

#[test]
fn report_rejects_a_non_summary_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("junk.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    let out = run(&["report", "--summary", &path.display().to_string()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not a summary CSV"), "{}", stderr(&out));
}

#[test]
fn selftest_passes_clean() {
    let out = run(&["selftest"]);
    assert_eq!(code(&out), 0, "{}\n{}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("ok   oracle_agreement"), "{}", text);
    assert!(text.contains("selftest passed"), "{}", text);
}

#[test]
fn selftest_catches_an_injected_fault() {
    let out = run(&["selftest", "--inject-fault", "haar_orthonormality"]);
    assert_eq!(code(&out), 3, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("FAIL haar_orthonormality"), "{}", text);
    assert!(
        text.contains("selftest failed: haar_orthonormality"),
        "{}",
        text
    );
}

#[test]
fn selftest_rejects_an_unknown_fault_name() {
    let out = run(&["selftest", "--inject-fault", "bogus"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown fault"), "{}", stderr(&out));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("experiment"), "{}", stdout(&out));
}

#[test]
fn baseline_scheme_needs_no_operator_to_sample() {
    let dir = TempDir::new().unwrap();
    let op = path_str(&dir, "op");
    let sig = path_str(&dir, "sig");
    let meas = path_str(&dir, "bmeas");
    assert_eq!(
        code(&run(&[
            "gen-operator",
            "--kind",
            "tight-frame",
            "--n",
            "36",
            "--d",
            "30",
            "--seed",
            "2",
            "--out",
            &op
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "gen-signal",
            "--operator",
            &op,
            "--cosparsity",
            "29",
            "--seed",
            "4",
            "--out",
            &sig
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "sample", "--scheme", "baseline", "--signal", &sig, "--m", "28", "--seed", "6",
            "--out", &meas
        ])),
        0
    );
    let out = run(&[
        "recover",
        "--scheme",
        "baseline",
        "--measurement",
        &meas,
        "--operator",
        &op,
        "--truth",
        &sig,
        "--out",
        &path_str(&dir, "brec"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rel: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("rel_error = "))
        .expect("rel_error line")
        .parse()
        .unwrap();
    assert!(rel <= 1e-4, "rel_error {}", rel);
}

#[test]
fn sample_meta_records_noise_norms() {
    let dir = TempDir::new().unwrap();
    let (_op, _sig, meas) = frame_pipeline(&dir);
    let meta = std::fs::read_to_string(PathBuf::from(format!("{}.meta.json", meas))).unwrap();
    assert!(meta.contains("\"scheme\": \"frame\""), "{}", meta);
    assert!(meta.contains("\"m\": 108"), "{}", meta);
    assert!(meta.contains("\"e_norm\": 0.0"), "{}", meta);
}
