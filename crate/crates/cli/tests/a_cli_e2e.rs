use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cramer_wold::data::{generate, write_csv, SyntheticSpec};
use cramer_wold::{cw2_sample_normal, Bandwidth};

fn cwdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn value(out: &Output, key: &str) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout);
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in:\n{stdout}"))
        .to_string()
}

fn write_normal(dir: &Path, name: &str, dim: usize, n: usize, seed: u64) -> PathBuf {
    let p = dir.join(name);
    let d = generate(&SyntheticSpec::standard_normal(dim, n, seed)).unwrap();
    write_csv(&d.data, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dist_of_a_file_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_normal(dir.path(), "x.csv", 4, 30, 1);
    let out = cwdist(&["dist", s(&x), s(&x)]);
    assert!(out.status.success());
    assert_eq!(value(&out, "result.squared_distance").parse::<f64>().unwrap(), 0.0);
    assert_eq!(value(&out, "status"), "ok");
}

#[test]
fn dist_to_prior_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_normal(dir.path(), "x.csv", 5, 40, 2);
    let data = cramer_wold::data::load_csv(&x, false).unwrap().data;
    let want = cw2_sample_normal(&data, Bandwidth::silverman(40).unwrap(), None).unwrap();
    let out = cwdist(&["dist", s(&x)]);
    assert!(out.status.success());
    let got: f64 = value(&out, "result.squared_distance").parse().unwrap();
    assert_eq!(got.to_bits(), want.squared_distance.to_bits());

    let out = cwdist(&["dist", s(&x), "--gamma", "0.5", "--mode", "exact"]);
    assert_eq!(value(&out, "config.gamma"), "0.5");
    assert_eq!(value(&out, "config.gamma_source"), "explicit");
    assert_eq!(value(&out, "config.mode"), "exact");
}

#[test]
fn oracle_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_normal(dir.path(), "x.csv", 3, 10, 3);
    let out = cwdist(&["oracle", s(&x), s(&x), "--directions", "500", "--seed", "4"]);
    assert!(out.status.success());
    assert_eq!(value(&out, "result.mc_estimate").parse::<f64>().unwrap(), 0.0);
    assert_eq!(value(&out, "result.z_score").parse::<f64>().unwrap(), 0.0);

    let out = cwdist(&["oracle", s(&x), "--directions", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn normality_of_symmetric_pair() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("pair.csv");
    std::fs::write(&x, "1,0,0\n-1,0,0\n").unwrap();
    let out = cwdist(&["normality", s(&x)]);
    assert!(out.status.success());
    assert_eq!(value(&out, "result.skewness").parse::<f64>().unwrap(), 0.0);
    assert_eq!(value(&out, "result.kurtosis").parse::<f64>().unwrap(), 1.0);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = cwdist(&["normality", s(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn train_writes_checkpoint_and_records() {
    let dir = tempfile::tempdir().unwrap();
    write_normal(dir.path(), "train.csv", 3, 120, 5);
    let cfg = dir.path().join("job.cfg");
    std::fs::write(
        &cfg,
        "# toy run\ndata = train.csv\nencoder_hidden = 8\ndecoder_hidden = 8\nlatent_dim = 2\nbatch_size = 16\nepochs = 5\n",
    )
    .unwrap();
    let report = dir.path().join("report.txt");
    let out = cwdist(&["--out", s(&report), "--seed", "3", "train", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("model.ckpt").exists());
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        assert!(row.split(',').all(|v| v.parse::<f64>().unwrap().is_finite()), "{row}");
    }
    assert_eq!(std::fs::read(&report).unwrap(), out.stdout);

    std::fs::write(&cfg, "data = train.csv\nbatch_size = many\n").unwrap();
    let out = cwdist(&["train", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("batch_size"));
}

#[test]
fn bench_arguments() {
    let out = cwdist(&["bench", "--batch-sizes", "16", "--repeats", "2", "--dim", "3"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("result.mean_batch_s.n16="));
    assert!(!stdout.contains("ratio"));

    let out = cwdist(&["bench", "--repeats", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cwdist(&["--threads", "0", "bench"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_prints_sections() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_normal(dir.path(), "x.csv", 2, 8, 6);
    let out = cwdist(&["--dump", "normality", s(&x)]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for section in ["[run]", "[config]", "[results]"] {
        assert!(stdout.contains(section), "{stdout}");
    }
}
