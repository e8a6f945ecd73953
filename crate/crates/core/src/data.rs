//! Dataset ingestion: numeric CSV, IDX binary (MNIST family), seeded
//! synthetic generators, and train/validation splitting.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, WeightedIndex};

use crate::error::{Error, Result};
use crate::sample::Sample;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// A sample together with optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub data: Sample,
    pub labels: Option<Vec<u32>>,
    pub source: String,
}

impl Dataset {
    pub fn new(data: Sample, labels: Option<Vec<u32>>, source: impl Into<String>) -> Result<Dataset> {
        if let Some(l) = &labels {
            if l.len() != data.len() {
                return Err(Error::invalid(format!(
                    "{} labels for {} points",
                    l.len(),
                    data.len()
                )));
            }
        }
        Ok(Dataset {
            data,
            labels,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    fn subset(&self, indices: &[usize], tag: &str) -> Result<Dataset> {
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Dataset::new(
            self.data.select(indices)?,
            labels,
            format!("{}[{tag}]", self.source),
        )
    }
}

/// Reads a rectangular numeric CSV, one point per row.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut data = Vec::new();
    let mut dim = None;
    for (row, record) in reader.records().enumerate() {
        // 1-based line number as seen in the file
        let line = row + 1 + has_header as usize;
        let record = record.map_err(|e| Error::format(path, format!("row {line}: {e}")))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::format(
                    path,
                    format!("row {line}: expected {d} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {line}, column {}: cannot parse '{field}' as a number", col + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    path,
                    format!("row {line}, column {}: non-finite value", col + 1),
                ));
            }
            data.push(v);
        }
    }
    let dim = dim.ok_or_else(|| Error::format(path, "file contains no data rows"))?;
    let sample = Sample::from_flat(data, dim)?;
    Dataset::new(sample, None, path.display().to_string())
}

/// Writes one point per row with shortest round-trip formatting.
pub fn write_csv(sample: &Sample, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for row in sample.rows() {
        let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(path, "truncated header"))
}

/// Reads an IDX image file (and optionally its label file). Pixels are
/// scaled to [0, 1] and each image is flattened row-major.
pub fn load_idx(images: impl AsRef<Path>, labels: Option<&Path>) -> Result<Dataset> {
    let path = images.as_ref();
    let bytes = read_all(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"),
        ));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let dim = rows * cols;
    let payload = &bytes[16..];
    if count == 0 || dim == 0 {
        return Err(Error::format(path, "IDX file declares no images"));
    }
    if payload.len() < count * dim {
        return Err(Error::format(
            path,
            format!(
                "truncated payload: {} bytes for {count} images of {rows}x{cols}",
                payload.len()
            ),
        ));
    }
    let data = payload[..count * dim]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    let sample = Sample::from_flat(data, dim)?;

    let labels = match labels {
        None => None,
        Some(lpath) => {
            let lbytes = read_all(lpath)?;
            let magic = be_u32(&lbytes, 0, lpath)?;
            if magic != IDX_LABELS_MAGIC {
                return Err(Error::format(
                    lpath,
                    format!("bad magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"),
                ));
            }
            let lcount = be_u32(&lbytes, 4, lpath)? as usize;
            if lcount != count {
                return Err(Error::format(
                    lpath,
                    format!("label count {lcount} does not match image count {count}"),
                ));
            }
            let payload = &lbytes[8..];
            if payload.len() < count {
                return Err(Error::format(
                    lpath,
                    format!("truncated payload: {} labels for {count} images", payload.len()),
                ));
            }
            Some(payload[..count].iter().map(|&b| u32::from(b)).collect())
        }
    };
    Dataset::new(sample, labels, path.display().to_string())
}

/// Writes an IDX image file from raw bytes (`count * rows * cols` of them).
pub fn write_idx_images(path: impl AsRef<Path>, rows: u32, cols: u32, pixels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let per = (rows * cols) as usize;
    if per == 0 || pixels.len() % per != 0 {
        return Err(Error::invalid("pixel buffer is not a whole number of images"));
    }
    let mut buf = Vec::with_capacity(16 + pixels.len());
    buf.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    buf.extend_from_slice(&((pixels.len() / per) as u32).to_be_bytes());
    buf.extend_from_slice(&rows.to_be_bytes());
    buf.extend_from_slice(&cols.to_be_bytes());
    buf.extend_from_slice(pixels);
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(8 + labels.len());
    buf.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    buf.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    buf.extend_from_slice(labels);
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// One isotropic component `weight · N(mean, variance · I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    pub variance: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    GaussianMixture(Vec<MixtureComponent>),
    /// Uniform on `[−1, 1]^D`.
    UniformCube,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub dim: usize,
    pub count: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// `count` draws from `N(0, I_dim)`.
    pub fn standard_normal(dim: usize, count: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            kind: SyntheticKind::GaussianMixture(vec![MixtureComponent {
                mean: vec![0.0; dim],
                variance: 1.0,
                weight: 1.0,
            }]),
            dim,
            count,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("synthetic dataset needs a positive count"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("synthetic dataset needs a positive dimension"));
        }
        if let SyntheticKind::GaussianMixture(components) = &self.kind {
            if components.is_empty() {
                return Err(Error::invalid("mixture has no components"));
            }
            let total: f64 = components.iter().map(|c| c.weight).sum();
            for (i, c) in components.iter().enumerate() {
                if !(c.weight > 0.0) {
                    return Err(Error::invalid(format!("component {i}: weight must be positive")));
                }
                if !(c.variance >= 0.0) || !c.variance.is_finite() {
                    return Err(Error::invalid(format!("component {i}: invalid variance")));
                }
                if c.mean.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        actual: c.mean.len(),
                    });
                }
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
            }
        }
        Ok(())
    }
}

/// Draws a reproducible synthetic dataset. Mixture labels record the
/// component each point came from.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.count * spec.dim);
    let labels = match &spec.kind {
        SyntheticKind::UniformCube => {
            for _ in 0..spec.count * spec.dim {
                data.push(rng.gen_range(-1.0..=1.0));
            }
            None
        }
        SyntheticKind::GaussianMixture(components) => {
            let chooser = WeightedIndex::new(components.iter().map(|c| c.weight))
                .map_err(|e| Error::invalid(e.to_string()))?;
            let mut labels = Vec::with_capacity(spec.count);
            for _ in 0..spec.count {
                let c = chooser.sample(&mut rng);
                let comp = &components[c];
                let sd = comp.variance.sqrt();
                for &m in &comp.mean {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    data.push(m + sd * z);
                }
                labels.push(c as u32);
            }
            Some(labels)
        }
    };
    let name = match spec.kind {
        SyntheticKind::UniformCube => "uniform-cube",
        SyntheticKind::GaussianMixture(_) => "gaussian-mixture",
    };
    Dataset::new(
        Sample::from_flat(data, spec.dim)?,
        labels,
        format!("synthetic:{name}:seed={}", spec.seed),
    )
}

/// Seeded random split; `valid_fraction` of the points (at least one) go to
/// the validation part.
pub fn split(dataset: &Dataset, valid_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&valid_fraction) || valid_fraction == 0.0 {
        return Err(Error::invalid(format!(
            "validation fraction must lie in (0, 1), got {valid_fraction}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::invalid("need at least two points to split"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_valid = ((n as f64 * valid_fraction).round() as usize).clamp(1, n - 1);
    let (valid, train) = order.split_at(n_valid);
    Ok((dataset.subset(train, "train")?, dataset.subset(valid, "valid")?))
}
