//! The command implementations behind `cwdist`. Each is a thin wrapper over
//! one library call and returns a [`RunReport`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use cramer_wold::cwae::{
    save_checkpoint, train, training_phi_mode, write_records_csv, TrainConfig, TRAIN_CONFIG_KEYS,
};
use cramer_wold::data::{generate, load_csv, load_idx, split, Dataset, SyntheticSpec};
use cramer_wold::{
    cw2_monte_carlo, cw2_normal_monte_carlo, cw2_sample_normal, cw2_sample_normal_with_grad,
    cw2_sample_sample, mardia, Bandwidth, PhiMode, Sample,
};

use crate::error::CliError;
use crate::report::{fmt_f64, RunReport, Status};

/// `|z|` above this marks an oracle validation failure.
pub const ORACLE_Z_LIMIT: f64 = 4.0;
/// Accepted time ratio when the batch size doubles.
pub const BENCH_RATIO_RANGE: (f64, f64) = (2.5, 6.0);

fn is_idx(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".idx") || name.contains("idx3") || name.ends_with("ubyte")
}

/// Loads a dataset from CSV, or from IDX when the file name says so.
pub fn load_dataset(path: &Path, labels: Option<&Path>, header: bool) -> Result<Dataset, CliError> {
    if is_idx(path) {
        Ok(load_idx(path, labels)?)
    } else {
        Ok(load_csv(path, header)?)
    }
}

fn load_sample(path: &Path, header: bool) -> Result<Sample, CliError> {
    Ok(load_dataset(path, None, header)?.data)
}

fn mode_name(mode: Option<PhiMode>) -> &'static str {
    mode.map_or("auto", PhiMode::as_str)
}

fn resolve_gamma(explicit: Option<f64>, n: usize, k: Option<usize>) -> Result<Bandwidth, CliError> {
    Ok(match (explicit, k) {
        (Some(g), _) => Bandwidth::new(g)?,
        (None, Some(k)) => Bandwidth::for_pair(n, k)?,
        (None, None) => Bandwidth::silverman(n)?,
    })
}

fn command_line(name: &str, x: &Path, y: Option<&Path>) -> String {
    match y {
        Some(y) => format!("{name} {} {}", x.display(), y.display()),
        None => format!("{name} {}", x.display()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistOptions {
    pub x: PathBuf,
    pub y: Option<PathBuf>,
    pub gamma: Option<f64>,
    pub mode: Option<PhiMode>,
    pub header: bool,
}

/// Squared CW distance between two samples, or to `N(0, I)` without `y`.
pub fn cmd_dist(opts: &DistOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let x = load_sample(&opts.x, opts.header)?;
    let y = opts.y.as_deref().map(|p| load_sample(p, opts.header)).transpose()?;
    let gamma = resolve_gamma(opts.gamma, x.len(), y.as_ref().map(Sample::len))?;
    let loaded = start.elapsed().as_secs_f64();
    let t = Instant::now();
    let cw = match &y {
        Some(y) => cw2_sample_sample(&x, y, gamma, opts.mode)?,
        None => cw2_sample_normal(&x, gamma, opts.mode)?,
    };
    let compute = t.elapsed().as_secs_f64();

    let mut r = RunReport::new(command_line("dist", &opts.x, opts.y.as_deref()));
    r.config("x", opts.x.display())
        .config("y", opts.y.as_ref().map_or("N(0,I)".to_string(), |p| p.display().to_string()))
        .config("gamma", fmt_f64(gamma.value()))
        .config("gamma_source", if opts.gamma.is_some() { "explicit" } else { "silverman" })
        .config("mode_requested", mode_name(opts.mode))
        .config("mode", cw.mode);
    r.result_f64("squared_distance", cw.squared_distance)
        .result_f64("pre_clamp", cw.pre_clamp)
        .result("n", cw.n)
        .result("k", cw.k.map_or("none".to_string(), |k| k.to_string()))
        .result("dim", cw.dim);
    r.timing("load", loaded).timing("compute", compute);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub x: PathBuf,
    pub y: Option<PathBuf>,
    pub gamma: Option<f64>,
    pub mode: Option<PhiMode>,
    pub directions: usize,
    pub seed: u64,
    pub header: bool,
}

/// Closed form against the Monte-Carlo slicing estimate. The report status
/// is a validation failure when `|z| > 4`.
pub fn cmd_oracle_validate(opts: &OracleOptions) -> Result<RunReport, CliError> {
    if opts.directions < 2 {
        return Err(CliError::Usage(format!(
            "--directions must be at least 2, got {}",
            opts.directions
        )));
    }
    let x = load_sample(&opts.x, opts.header)?;
    let y = opts.y.as_deref().map(|p| load_sample(p, opts.header)).transpose()?;
    let gamma = resolve_gamma(opts.gamma, x.len(), y.as_ref().map(Sample::len))?;

    let t = Instant::now();
    let closed = match &y {
        Some(y) => cw2_sample_sample(&x, y, gamma, opts.mode)?,
        None => cw2_sample_normal(&x, gamma, opts.mode)?,
    };
    let closed_time = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let mc = match &y {
        Some(y) => cw2_monte_carlo(&x, y, gamma, opts.directions, opts.seed)?,
        None => cw2_normal_monte_carlo(&x, gamma, opts.directions, opts.seed)?,
    };
    let mc_time = t.elapsed().as_secs_f64();
    let z = mc.z_score(closed.squared_distance);

    let mut r = RunReport::new(command_line("oracle", &opts.x, opts.y.as_deref()));
    r.config("gamma", fmt_f64(gamma.value()))
        .config("mode", closed.mode)
        .config("directions", opts.directions)
        .config("seed", opts.seed)
        .config("z_limit", fmt_f64(ORACLE_Z_LIMIT));
    r.result_f64("closed_form", closed.squared_distance)
        .result_f64("mc_estimate", mc.estimate)
        .result_f64("std_error", mc.std_error)
        .result_f64("z_score", z);
    r.timing("closed_form", closed_time).timing("monte_carlo", mc_time);
    if !(z.abs() <= ORACLE_Z_LIMIT) {
        r.status = Status::ValidationFailed;
    }
    Ok(r)
}

/// Mardia skewness and kurtosis of a sample.
pub fn cmd_normality(x_path: &Path, header: bool) -> Result<RunReport, CliError> {
    let x = load_sample(x_path, header)?;
    let t = Instant::now();
    let m = mardia(&x)?;
    let elapsed = t.elapsed().as_secs_f64();
    let mut r = RunReport::new(format!("normality {}", x_path.display()));
    r.config("x", x_path.display());
    r.result_f64("skewness", m.skewness)
        .result_f64("kurtosis", m.kurtosis)
        .result_f64("normalized_kurtosis", m.normalized_kurtosis)
        .result("n", m.n)
        .result("dim", m.dim);
    r.timing("compute", elapsed);
    Ok(r)
}

/// A training run: the network configuration plus where data comes from and
/// where outputs go.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainJob {
    pub config: TrainConfig,
    pub data: PathBuf,
    pub labels: Option<PathBuf>,
    pub data_header: bool,
    pub valid_data: Option<PathBuf>,
    pub valid_fraction: f64,
    pub checkpoint: PathBuf,
    pub records: PathBuf,
}

/// Keys of a training config file besides [`TRAIN_CONFIG_KEYS`].
pub const TRAIN_JOB_KEYS: [&str; 7] = [
    "data",
    "labels",
    "data_header",
    "valid_data",
    "valid_fraction",
    "checkpoint",
    "records",
];

impl TrainJob {
    /// Parses a flat `key = value` file. Relative paths are resolved against
    /// `base_dir`.
    pub fn from_text(text: &str, base_dir: &Path) -> Result<TrainJob, CliError> {
        let mut config = TrainConfig::default();
        let mut data = None;
        let mut labels = None;
        let mut data_header = false;
        let mut valid_data = None;
        let mut valid_fraction = 0.1;
        let mut checkpoint = base_dir.join("model.ckpt");
        let mut records = base_dir.join("records.csv");
        let bad = |key: &str, value: &str| {
            CliError::Config(format!("config field '{key}': cannot use '{value}'"))
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "data" => data = Some(base_dir.join(value)),
                "labels" => labels = Some(base_dir.join(value)),
                "data_header" => data_header = value.parse().map_err(|_| bad(key, value))?,
                "valid_data" => valid_data = Some(base_dir.join(value)),
                "valid_fraction" => {
                    valid_fraction = value.parse().map_err(|_| bad(key, value))?;
                }
                "checkpoint" => checkpoint = base_dir.join(value),
                "records" => records = base_dir.join(value),
                _ => config.set(key, value).map_err(|e| CliError::Config(e.to_string()))?,
            }
        }
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let data = data.ok_or_else(|| CliError::Config("config field 'data' is required".into()))?;
        Ok(TrainJob {
            config,
            data,
            labels,
            data_header,
            valid_data,
            valid_fraction,
            checkpoint,
            records,
        })
    }
}

/// Trains from a config file; writes the checkpoint and the per-epoch CSV.
pub fn cmd_train(config_path: &Path, seed: Option<u64>) -> Result<RunReport, CliError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| CliError::Io {
        path: config_path.to_path_buf(),
        source: e,
    })?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut job = TrainJob::from_text(&text, base)?;
    if let Some(s) = seed {
        job.config.seed = s;
    }
    let data = load_dataset(&job.data, job.labels.as_deref(), job.data_header)?;
    let (train_set, valid_set) = match &job.valid_data {
        Some(p) => (data, load_dataset(p, None, job.data_header)?),
        None => split(&data, job.valid_fraction, job.config.seed)?,
    };

    let t = Instant::now();
    let (params, records) = train(&job.config, &train_set.data, &valid_set.data)?;
    let train_time = t.elapsed().as_secs_f64();
    save_checkpoint(&job.checkpoint, &params, &job.config)?;
    write_records_csv(&job.records, &records)?;

    let mut r = RunReport::new(format!("train {}", config_path.display()));
    for line in job.config.to_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            r.config(k, v);
        }
    }
    r.config("train_points", train_set.len())
        .config("valid_points", valid_set.len())
        .config("checkpoint", job.checkpoint.display())
        .config("records", job.records.display());
    r.result("num_params", params.num_params()).result("epochs_recorded", records.len());
    if let Some(last) = records.last() {
        r.result("final_epoch", last.epoch)
            .result_f64("final_rec_error", last.reconstruction_error)
            .result_f64("final_cw_pre_log", last.cw_pre_log)
            .result_f64("final_cw_post_log", last.cw_post_log)
            .result_f64("final_skewness", last.mardia.skewness)
            .result_f64("final_kurtosis", last.mardia.kurtosis)
            .result_f64("final_normalized_kurtosis", last.mardia.normalized_kurtosis);
    }
    r.timing("train", train_time);
    debug_assert!(TRAIN_CONFIG_KEYS.iter().all(|k| !TRAIN_JOB_KEYS.contains(k)));
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub batch_sizes: Vec<usize>,
    pub dim: usize,
    pub repeats: usize,
    pub seed: u64,
    pub mode: Option<PhiMode>,
}

/// Mean time of one CW cost-plus-gradient evaluation per batch size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub batch_size: usize,
    pub mean_seconds: f64,
}

/// Times `cw2_sample_normal_with_grad` for each batch size. When one size is
/// twice the previous, the time ratio must fall in [`BENCH_RATIO_RANGE`].
pub fn cmd_bench(opts: &BenchOptions) -> Result<RunReport, CliError> {
    if opts.repeats == 0 {
        return Err(CliError::Usage("--repeats must be positive".into()));
    }
    if opts.batch_sizes.is_empty() {
        return Err(CliError::Usage("--batch-sizes needs at least one size".into()));
    }
    if let Some(&n) = opts.batch_sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("batch size {n} is below 2")));
    }
    let mode = training_phi_mode(opts.dim, opts.mode)?;
    let mut rows = Vec::with_capacity(opts.batch_sizes.len());
    for &n in &opts.batch_sizes {
        let x = generate(&SyntheticSpec::standard_normal(opts.dim, n, opts.seed))?.data;
        let gamma = Bandwidth::silverman(n)?;
        // warm-up, also surfaces errors before timing
        let (warm, _) = cw2_sample_normal_with_grad(&x, gamma, Some(mode))?;
        let mut sink = warm.pre_clamp;
        let t = Instant::now();
        for _ in 0..opts.repeats {
            let (rep, grad) = cw2_sample_normal_with_grad(&x, gamma, Some(mode))?;
            sink += rep.pre_clamp + grad[0];
        }
        let mean_seconds = t.elapsed().as_secs_f64() / opts.repeats as f64;
        std::hint::black_box(sink);
        rows.push(BenchRow {
            batch_size: n,
            mean_seconds,
        });
    }

    let mut r = RunReport::new("bench");
    r.config(
        "batch_sizes",
        opts.batch_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    )
    .config("dim", opts.dim)
    .config("repeats", opts.repeats)
    .config("seed", opts.seed)
    .config("mode", mode);
    for row in &rows {
        r.result_f64(&format!("mean_batch_s.n{}", row.batch_size), row.mean_seconds);
    }
    let (lo, hi) = BENCH_RATIO_RANGE;
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let ratio = b.mean_seconds / a.mean_seconds;
        r.result_f64(&format!("ratio.n{}_n{}", b.batch_size, a.batch_size), ratio);
        if b.batch_size == 2 * a.batch_size && !(lo..=hi).contains(&ratio) {
            r.status = Status::ValidationFailed;
        }
    }
    let total: f64 = rows.iter().map(|row| row.mean_seconds * opts.repeats as f64).sum();
    r.timing("total", total);
    Ok(r)
}

/// Ratio entries of a bench report, in order.
pub fn bench_ratios(report: &RunReport) -> Vec<f64> {
    report
        .results
        .iter()
        .filter(|(k, _)| k.starts_with("ratio."))
        .filter_map(|(_, v)| v.parse().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_parses_paths_relative_to_base() {
        let job = TrainJob::from_text(
            "data = d.csv\nepochs = 3\nbatch_size = 4\nrecords = out/r.csv\n",
            Path::new("/tmp/run"),
        )
        .unwrap();
        assert_eq!(job.data, Path::new("/tmp/run/d.csv"));
        assert_eq!(job.records, Path::new("/tmp/run/out/r.csv"));
        assert_eq!(job.config.epochs, 3);
    }

    #[test]
    fn job_errors_name_the_field() {
        let e = TrainJob::from_text("data = d.csv\nlearning_rate = fast\n", Path::new("."))
            .unwrap_err();
        assert!(e.to_string().contains("learning_rate"), "{e}");
        let e = TrainJob::from_text("epochs = 2\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("data"), "{e}");
        let e = TrainJob::from_text("data = d.csv\nvalid_fraction = x\n", Path::new("."))
            .unwrap_err();
        assert!(e.to_string().contains("valid_fraction"), "{e}");
    }

    #[test]
    fn bench_rejects_zero_repeats() {
        let opts = BenchOptions {
            batch_sizes: vec![16],
            dim: 4,
            repeats: 0,
            seed: 0,
            mode: None,
        };
        assert!(matches!(cmd_bench(&opts), Err(CliError::Usage(_))));
    }

    #[test]
    fn single_batch_size_has_no_ratios() {
        let opts = BenchOptions {
            batch_sizes: vec![16],
            dim: 4,
            repeats: 2,
            seed: 0,
            mode: None,
        };
        let r = cmd_bench(&opts).unwrap();
        assert!(bench_ratios(&r).is_empty());
        assert!(r.get("mean_batch_s.n16").is_some());
    }

    #[test]
    fn idx_detection() {
        assert!(is_idx(Path::new("train-images-idx3-ubyte")));
        assert!(is_idx(Path::new("a.idx")));
        assert!(!is_idx(Path::new("a.csv")));
    }
}
