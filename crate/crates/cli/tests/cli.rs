//! End-to-end checks of the command-line surface: exit codes, output
//! blocks, file formats, and determinism.

use ramcomp::graphs;
use ramcomp::linalg::DenseMatrix;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ramcomp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn grab(block: &str, key: &str) -> String {
    block
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing key {key} in:\n{block}"))
        .to_string()
}

fn write_small_fixture(dir: &Path) -> (String, String, String) {
    // Rank-1 4x4 matrix, fully sampled.
    let x = DenseMatrix::from_fn(4, 4, |i, j| ((i + 1) * (j + 1)) as f64);
    let mask = graphs::SampleSet::new(
        4,
        4,
        (0..4).flat_map(|r| (0..4).map(move |c| (r, c))).collect(),
    )
    .unwrap();
    let x_path = dir.join("x.csv");
    let mask_path = dir.join("full.coo");
    let out_path = dir.join("xhat.csv");
    std::fs::write(&x_path, x.to_csv()).unwrap();
    std::fs::write(&mask_path, mask.to_coordinate_text()).unwrap();
    (
        x_path.to_string_lossy().into_owned(),
        mask_path.to_string_lossy().into_owned(),
        out_path.to_string_lossy().into_owned(),
    )
}

#[test]
fn help_exits_zero_everywhere() {
    for args in [
        vec!["--help"],
        vec!["graph", "--help"],
        vec!["graph", "lps", "--help"],
        vec!["graph", "validate", "--help"],
        vec!["analyze", "--help"],
        vec!["complete", "--help"],
        vec!["certify", "--help"],
        vec!["phase", "--help"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "args: {args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn graph_lps_writes_canonical_mask_and_reports_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let mask_path = dir.path().join("m.coo");
    let out = run(&[
        "graph",
        "lps",
        "--p",
        "13",
        "--q",
        "5",
        "--out",
        mask_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let block = stdout(&out);
    assert_eq!(grab(&block, "n_rows"), "60");
    assert_eq!(grab(&block, "d_r"), "14");

    let text = std::fs::read_to_string(&mask_path).unwrap();
    assert!(text.starts_with("60 60 840\n"));
    // Canonical form round-trips bit-exactly.
    let parsed = graphs::SampleSet::from_coordinate_text(&text).unwrap();
    assert_eq!(parsed.to_coordinate_text(), text);

    let validated = run(&["graph", "validate", "--mask", mask_path.to_str().unwrap()]);
    assert_eq!(validated.status.code(), Some(0));
    let vblock = stdout(&validated);
    assert_eq!(grab(&vblock, "sigma1"), grab(&block, "sigma1"));

    // Identical invocation produces identical bytes.
    let again = run(&[
        "graph",
        "lps",
        "--p",
        "13",
        "--q",
        "5",
        "--out",
        mask_path.to_str().unwrap(),
    ]);
    assert_eq!(out.stdout, again.stdout);
    assert_eq!(std::fs::read_to_string(&mask_path).unwrap(), text);
}

#[test]
fn graph_rejects_bad_parameters_with_exit_2() {
    let out = run(&["graph", "lps", "--p", "4", "--q", "13"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["graph", "lps", "--p", "7", "--q", "13"]);
    assert_eq!(out.status.code(), Some(2));
    // Colliding generators are a construction failure, not a usage error.
    let out = run(&["graph", "lps", "--p", "29", "--q", "5"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_rejects_irregular_masks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.coo");
    std::fs::write(&path, "2 2 3\n1 1\n1 2\n2 1\n").unwrap();
    let out = run(&["graph", "validate", "--mask", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_flat_matrix_on_flat_mask_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    // Character-built rank-2 matrix with mu0 = 1 on the quadratic-form
    // mask: the certificate is feasible.
    let n = 64usize;
    let chi = |a: usize, i: usize| -> f64 {
        if (i & a).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let x = DenseMatrix::from_fn(n, n, |i, j| {
        (2.0 * chi(0, i) * chi(0, j) + chi(1, i) * chi(6, j)) / n as f64
    });
    let mask = graphs::quadratic_form_mask(3).unwrap();
    let x_path = dir.path().join("x.csv");
    let mask_path = dir.path().join("m.coo");
    std::fs::write(&x_path, x.to_csv()).unwrap();
    std::fs::write(&mask_path, mask.to_coordinate_text()).unwrap();

    let out = run(&[
        "analyze",
        "--matrix",
        x_path.to_str().unwrap(),
        "--rank",
        "2",
        "--mask",
        mask_path.to_str().unwrap(),
    ]);
    let block = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{block}");
    assert_eq!(grab(&block, "feasible"), "true");
    let mu0: f64 = grab(&block, "mu0").parse().unwrap();
    assert!((mu0 - 1.0).abs() < 1e-9);
    assert!(block.contains("prior_degree_requirement="));

    // A canonical-basis spike reports maximal coherence and is infeasible.
    let spike = DenseMatrix::from_fn(n, n, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
    let spike_path = dir.path().join("spike.csv");
    std::fs::write(&spike_path, spike.to_csv()).unwrap();
    let out = run(&[
        "analyze",
        "--matrix",
        spike_path.to_str().unwrap(),
        "--rank",
        "1",
        "--mask",
        mask_path.to_str().unwrap(),
    ]);
    let block = stdout(&out);
    assert_eq!(out.status.code(), Some(1), "{block}");
    let mu0: f64 = grab(&block, "mu0").parse().unwrap();
    assert!((mu0 - 64.0).abs() < 1e-6);

    // Theta can be pinned from the command line.
    let out = run(&[
        "analyze",
        "--matrix",
        x_path.to_str().unwrap(),
        "--rank",
        "2",
        "--mask",
        mask_path.to_str().unwrap(),
        "--theta-override",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_missing_file_exits_2() {
    let out = run(&[
        "analyze",
        "--matrix",
        "/nonexistent/x.csv",
        "--rank",
        "2",
        "--mask",
        "/nonexistent/m.coo",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn complete_full_mask_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (x_path, mask_path, out_path) = write_small_fixture(dir.path());
    let out = run(&[
        "complete",
        "--obs",
        &x_path,
        "--mask",
        &mask_path,
        "--mode",
        "exact",
        "--truth",
        &x_path,
        "--out",
        &out_path,
    ]);
    let block = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{block}");
    assert_eq!(grab(&block, "relative_error"), "0.0");
    assert_eq!(grab(&block, "success"), "true");
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(written, std::fs::read_to_string(&x_path).unwrap());
}

#[test]
fn complete_three_entry_example_fills_the_missing_cell() {
    let dir = tempfile::tempdir().unwrap();
    let obs = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 0.0]).unwrap();
    let mask = graphs::SampleSet::new(2, 2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
    let obs_path = dir.path().join("obs.csv");
    let mask_path = dir.path().join("m.coo");
    let out_path = dir.path().join("xhat.csv");
    std::fs::write(&obs_path, obs.to_csv()).unwrap();
    std::fs::write(&mask_path, mask.to_coordinate_text()).unwrap();
    let out = run(&[
        "complete",
        "--obs",
        obs_path.to_str().unwrap(),
        "--mask",
        mask_path.to_str().unwrap(),
        "--mode",
        "exact",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let xhat = DenseMatrix::from_csv(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!((xhat.get(1, 1) - 1.0).abs() < 1e-6);
}

#[test]
fn complete_stable_requires_eps_and_matches_exact_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (x_path, mask_path, out_path) = write_small_fixture(dir.path());

    let out = run(&[
        "complete",
        "--obs",
        &x_path,
        "--mask",
        &mask_path,
        "--mode",
        "stable",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let exact = run(&[
        "complete",
        "--obs",
        &x_path,
        "--mask",
        &mask_path,
        "--mode",
        "exact",
        "--out",
        &out_path,
    ]);
    let exact_file = std::fs::read_to_string(&out_path).unwrap();
    let stable = run(&[
        "complete",
        "--obs",
        &x_path,
        "--mask",
        &mask_path,
        "--mode",
        "stable",
        "--eps",
        "0",
        "--out",
        &out_path,
    ]);
    assert_eq!(exact.status.code(), Some(0));
    assert_eq!(stable.status.code(), Some(0));
    assert_eq!(exact_file, std::fs::read_to_string(&out_path).unwrap());
}

#[test]
fn certify_reports_decay_and_square_root_rank_at_zero_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let (x_path, mask_path, _) = write_small_fixture(dir.path());
    let out = run(&[
        "certify",
        "--matrix",
        &x_path,
        "--rank",
        "1",
        "--mask",
        &mask_path,
        "--iterations",
        "0",
        "--samples",
        "5",
    ]);
    let block = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{block}");
    let dev: f64 = grab(&block, "deviation_T").parse().unwrap();
    assert!((dev - 1.0).abs() < 1e-9, "sqrt(rank) = 1 for rank 1");

    // Full mask: one iteration zeroes the deviation.
    let out = run(&[
        "certify",
        "--matrix",
        &x_path,
        "--rank",
        "1",
        "--mask",
        &mask_path,
        "--iterations",
        "3",
        "--samples",
        "5",
    ]);
    let block = stdout(&out);
    let dev: f64 = grab(&block, "deviation_T").parse().unwrap();
    assert!(dev < 1e-10);
    assert_eq!(grab(&block, "verdict"), "pass");
}

#[test]
fn phase_rejects_invalid_range_and_guards_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "phase", "--p", "13", "--q", "5", "--rank-min", "5", "--rank-max", "3", "--trials", "1",
        "--seed", "0", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Degree 38 > 30 without --full.
    let out = run(&[
        "phase", "--p", "37", "--q", "5", "--rank-min", "1", "--rank-max", "1", "--trials", "1",
        "--seed", "0", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_writes_sweep_and_baseline_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let args = |jobs: &str| {
        vec![
            "phase".to_string(),
            "--p".into(),
            "13".into(),
            "--q".into(),
            "5".into(),
            "--rank-min".into(),
            "1".into(),
            "--rank-max".into(),
            "1".into(),
            "--trials".into(),
            "2".into(),
            "--seed".into(),
            "7".into(),
            "--max-iterations".into(),
            "700".into(),
            "--baseline".into(),
            "--jobs".into(),
            jobs.to_string(),
            "--out".into(),
            out_path.to_string_lossy().into_owned(),
        ]
    };
    let first = bin().args(args("1")).output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", stdout(&first));
    let sweep1 = std::fs::read(&out_path).unwrap();
    let baseline_path = dir.path().join("sweep.baseline.csv");
    let baseline1 = std::fs::read(&baseline_path).unwrap();
    let block = stdout(&first);
    assert!(block.contains("critical_rank="));
    assert!(block.contains("baseline_critical_rank="));

    let second = bin().args(args("2")).output().unwrap();
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(sweep1, std::fs::read(&out_path).unwrap());
    assert_eq!(baseline1, std::fs::read(&baseline_path).unwrap());

    let text = String::from_utf8(sweep1).unwrap();
    assert!(text.starts_with(
        "rank,trials,successes,success_rate,mean_relative_error,mean_iterations\n"
    ));
}
