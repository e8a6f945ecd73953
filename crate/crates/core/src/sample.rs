//! Point clouds and smoothing bandwidths.

use crate::error::{Error, Result};

/// An `n × D` matrix of finite reals stored row-major; row `i` is one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Sample {
    /// Builds a sample from row-major data. `data.len()` must be `n * dim`.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Sample> {
        if dim == 0 {
            return Err(Error::invalid("sample dimension must be positive"));
        }
        if data.is_empty() {
            return Err(Error::Empty("sample has no points"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let n = data.len() / dim;
        Ok(Sample { data, n, dim })
    }

    /// Builds a sample from rows of equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Sample> {
        let first = rows.first().ok_or(Error::Empty("sample has no points"))?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Sample::from_flat(data, dim)
    }

    /// `n` points at the origin of `R^dim`.
    pub fn zeros(n: usize, dim: usize) -> Result<Sample> {
        Sample::from_flat(vec![0.0; n * dim], dim)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// New sample made of the rows listed in `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Sample> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n {
                return Err(Error::invalid(format!("row index {i} out of range {}", self.n)));
            }
            data.extend_from_slice(self.row(i));
        }
        Sample::from_flat(data, self.dim)
    }

    /// First `count` rows (all rows when `count >= n`).
    pub fn head(&self, count: usize) -> Sample {
        let count = count.clamp(1, self.n);
        Sample {
            data: self.data[..count * self.dim].to_vec(),
            n: count,
            dim: self.dim,
        }
    }

    /// Applies `f` to every point, producing a sample of dimension `out_dim`.
    pub fn map_rows(
        &self,
        out_dim: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<Sample> {
        let mut data = vec![0.0; self.n * out_dim];
        for (row, out) in self.rows().zip(data.chunks_exact_mut(out_dim)) {
            f(row, out);
        }
        Sample::from_flat(data, out_dim)
    }

    pub(crate) fn ensure_same_dim(&self, other: &Sample) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn squared_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Variance `γ` of the one-dimensional Gaussian smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(gamma: f64) -> Result<Bandwidth> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!(
                "bandwidth must be positive and finite, got {gamma}"
            )));
        }
        Ok(Bandwidth(gamma))
    }

    /// Silverman's rule of thumb for near-unit-variance data: `(4/(3n))^{2/5}`.
    pub fn silverman(n: usize) -> Result<Bandwidth> {
        if n == 0 {
            return Err(Error::domain("Silverman bandwidth needs n >= 1"));
        }
        Ok(Bandwidth((4.0 / (3.0 * n as f64)).powf(0.4)))
    }

    /// Bandwidth for comparing samples of sizes `n` and `k`: Silverman at
    /// `min(n, k)`, the larger of the two candidates.
    pub fn for_pair(n: usize, k: usize) -> Result<Bandwidth> {
        Bandwidth::silverman(n.min(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(4/(3n))^{2/5}`; see [`Bandwidth::silverman`].
pub fn silverman_gamma(n: usize) -> Result<Bandwidth> {
    Bandwidth::silverman(n)
}
