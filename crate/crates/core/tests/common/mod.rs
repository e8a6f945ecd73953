#![allow(dead_code)]

use cramer_wold::Sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` points with i.i.d. `N(shift, scale²)` coordinates.
pub fn gaussian_sample(n: usize, dim: usize, scale: f64, shift: f64, seed: u64) -> Sample {
    let mut r = rng(seed);
    let data = (0..n * dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            shift + scale * z
        })
        .collect();
    Sample::from_flat(data, dim).unwrap()
}

/// Random orthogonal matrix (row-major) by Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(dim: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while q.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        for _ in 0..2 {
            for u in &q {
                let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    q.into_iter().flatten().collect()
}

/// Applies `x ↦ Qx` to every point.
pub fn rotate(x: &Sample, q: &[f64]) -> Sample {
    let d = x.dim();
    x.map_rows(d, |row, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|j| q[i * d + j] * row[j]).sum();
        }
    })
    .unwrap()
}

/// `e^{-x} I₀(x)` from the ascending series of `I₀`.
pub fn scaled_i0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    (-x).exp() * sum
}
