//! End-to-end tests of the `madv` binary: run outputs, exit codes, audit.

use monotone_adversary::adversary::{run_adaptive, Adversary, Distribution};
use monotone_adversary::domain::build_class_oig_lb;
use monotone_adversary::transcript;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_madv");

fn run_madv(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn madv")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_manifest_and_csv_with_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.cfg",
        "experiment=coupon\nn=100\nseed=5\ntrials=40\nc=2\n",
    );
    let out_dir = dir.path().join("out");
    let out = run_madv(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("experiment=coupon n=100 trials=40"));

    let manifest = std::fs::read_to_string(out_dir.join("coupon.manifest")).unwrap();
    assert!(manifest.contains("master_seed 5"));
    assert!(manifest.contains("resolved trials=40"));
    assert!(manifest.contains("output coupon_n100.csv"));

    let csv = std::fs::read_to_string(out_dir.join("coupon_n100.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // header + one row per trial + summary line
    assert_eq!(lines.len(), 42);
    assert!(lines[0].starts_with("trial,seed,"));
    assert!(lines[41].starts_with("summary,"));
    for (i, row) in lines[1..41].iter().enumerate() {
        assert!(row.starts_with(&format!("{i},")), "row {i}: {row}");
    }
}

#[test]
fn sweep_with_svg_emits_chart_and_per_n_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.cfg",
        "experiment=oig_lb\nn=8,16\nseed=3\ntrials=30\n",
    );
    let out_dir = dir.path().join("out");
    let out = run_madv(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--svg"]);
    assert!(out.status.success());
    assert!(out_dir.join("oig_lb_n8.csv").exists());
    assert!(out_dir.join("oig_lb_n16.csv").exists());
    let svg = std::fs::read_to_string(out_dir.join("oig_lb.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let manifest = std::fs::read_to_string(out_dir.join("oig_lb.manifest")).unwrap();
    assert!(manifest.contains("output oig_lb.svg"));
}

#[test]
fn malformed_config_fails_without_creating_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "experiment=coupon\nn=100\ntrials=10\n");
    let out_dir = dir.path().join("out");
    let out = run_madv(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error code=malformed"), "stderr: {stderr}");
    // validation happens before any file is touched
    assert!(!out_dir.exists());
}

#[test]
fn unknown_experiment_and_missing_file_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.cfg", "experiment=warp\nn=10\nseed=1\n");
    let out = run_madv(&["run", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("code=malformed"));

    let out = run_madv(&["run", dir.path().join("nope.cfg").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("code=io"));
}

#[test]
fn threshold_failure_sets_exit_code_but_still_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.cfg",
        "experiment=coupon\nn=100\nseed=5\ntrials=40\nc=2\nmax_mean=0\n",
    );
    let out_dir = dir.path().join("out");
    let out = run_madv(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("pass=false"));
    assert!(out_dir.join("coupon_n100.csv").exists());
}

#[test]
fn worker_count_does_not_change_output_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.cfg",
        "experiment=oblivious_ub\nn=20\nm=10\nseed=9\ntrials=25\n",
    );
    let mut bytes = Vec::new();
    for (sub, workers) in [("a", "1"), ("b", "3")] {
        let out_dir = dir.path().join(sub);
        let out = run_madv(&[
            "run",
            &cfg,
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(out.status.success());
        bytes.push(std::fs::read(out_dir.join("oblivious_ub_n20.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

fn sample_transcript_text() -> String {
    let class = build_class_oig_lb(6).unwrap();
    let dist = Distribution::uniform_x(class.domain());
    let t = run_adaptive(&dist, &class, &Adversary::Pairing, 4, 4, 11, 0).unwrap();
    transcript::to_text(&t)
}

#[test]
fn audit_accepts_clean_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, sample_transcript_text()).unwrap();
    let out = run_madv(&["audit", path.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("audit ok n=4 m=4 adversary=pairing"));
}

#[test]
fn audit_flags_flipped_label() {
    // rewrite one data row's label field to 1
    let mut lines: Vec<String> = sample_transcript_text().lines().map(String::from).collect();
    let idx = lines.iter().position(|l| l.starts_with("clean")).unwrap();
    let mut parts: Vec<&str> = lines[idx].split_whitespace().collect();
    parts[2] = "1";
    lines[idx] = parts.join(" ");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let out = run_madv(&["audit", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("violation"));
    assert!(stdout.contains("monotonicity"));
}

#[test]
fn audit_rejects_malformed_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, "m 1\nseed 2\n").unwrap();
    let out = run_madv(&["audit", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("code=malformed"));
}
