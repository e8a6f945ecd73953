//! Mardia's multivariate skewness and kurtosis, in the raw form used to
//! compare latent codes against the standard normal target: no centering and
//! no whitening.
//!
//! For `N(0, I_D)` the expected skewness is 0 and the expected kurtosis is
//! `D(D+2)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::sample::{dot, squared_norm, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MardiaStats {
    /// `b₁ = (1/n²) Σ_jk (x_jᵀ x_k)³`
    pub skewness: f64,
    /// `b₂ = (1/n) Σ_j ‖x_j‖⁴`
    pub kurtosis: f64,
    /// `b₂ − D(D+2)`
    pub normalized_kurtosis: f64,
    pub n: usize,
    pub dim: usize,
}

/// Mardia statistics of `x`.
pub fn mardia(x: &Sample) -> Result<MardiaStats> {
    if x.is_empty() {
        return Err(Error::Empty("Mardia statistics of an empty sample"));
    }
    let n = x.len();
    let dim = x.dim();
    let skewness = if use_moment_tensor(n, dim) {
        skewness_moment_tensor(x)
    } else {
        skewness_pairwise(x)
    };
    let kurtosis = compensated_sum(x.rows().map(|r| {
        let q = squared_norm(r);
        q * q
    })) / n as f64;
    let d = dim as f64;
    Ok(MardiaStats {
        skewness,
        kurtosis,
        normalized_kurtosis: kurtosis - d * (d + 2.0),
        n,
        dim,
    })
}

fn use_moment_tensor(n: usize, dim: usize) -> bool {
    let d = dim as f64;
    let tensor_cost = n as f64 * d * (d + 1.0) * (d + 2.0) / 6.0;
    let pair_cost = 0.5 * (n as f64) * (n as f64) * d;
    tensor_cost < pair_cost
}

/// Direct double sum over pairs; `O(n² D)`.
pub fn skewness_pairwise(x: &Sample) -> f64 {
    let n = x.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let xj = x.row(j);
            let mut acc = CompensatedSum::new();
            for k in (j + 1)..n {
                let ip = dot(xj, x.row(k));
                acc.add(ip * ip * ip);
            }
            let own = squared_norm(xj);
            2.0 * acc.value() + own * own * own
        })
        .collect();
    compensated_sum(rows) / (n as f64 * n as f64)
}

/// Same statistic through the third-moment tensor:
/// `Σ_jk (x_jᵀx_k)³ = Σ_abc M_abc²` with `M_abc = Σ_j x_ja x_jb x_jc`.
/// Costs `O(n D³/6)` and is nonnegative by construction.
pub fn skewness_moment_tensor(x: &Sample) -> f64 {
    let dim = x.dim();
    let triples: Vec<(usize, usize, usize)> = (0..dim)
        .flat_map(|a| (a..dim).flat_map(move |b| (b..dim).map(move |c| (a, b, c))))
        .collect();
    let terms: Vec<f64> = triples
        .par_iter()
        .map(|&(a, b, c)| {
            let m = x
                .rows()
                .map(|r| r[a] * r[b] * r[c])
                .collect::<CompensatedSum>()
                .value();
            let multiplicity = if a == b && b == c {
                1.0
            } else if a == b || b == c {
                3.0
            } else {
                6.0
            };
            multiplicity * m * m
        })
        .collect();
    let n = x.len() as f64;
    compensated_sum(terms) / (n * n)
}
