//! Monte-Carlo evaluation of the Cramer-Wold distance straight from its
//! definition: project both samples on a random unit direction, smooth each
//! projection with `N(0, γ)`, take the squared `L2` distance of the two
//! smoothed densities, and average over directions.
//!
//! Nothing here evaluates `φ_D`; only one-dimensional Gaussian algebra is
//! used, so agreement with [`crate::distance`] checks the closed forms end
//! to end.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::sample::{dot, Bandwidth, Sample};

/// Uniform directions on the unit sphere of `R^dim`.
///
/// Direction `i` is drawn from its own generator seeded with `seed + i`, so a
/// direction depends only on `(seed, i, dim)` and never on evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct DirectionSampler {
    seed: u64,
    dim: usize,
}

impl DirectionSampler {
    pub fn new(seed: u64, dim: usize) -> Result<DirectionSampler> {
        if dim == 0 {
            return Err(Error::invalid("direction dimension must be positive"));
        }
        Ok(DirectionSampler { seed, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes direction `index` into `out` (length `dim`).
    pub fn fill(&self, index: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(index));
        loop {
            for v in out.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                out.iter_mut().for_each(|v| *v /= norm);
                return;
            }
        }
    }

    pub fn direction(&self, index: u64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.fill(index, &mut v);
        v
    }
}

/// Mean and standard error of a Monte-Carlo average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub num_directions: usize,
}

impl McEstimate {
    fn from_values(values: &[f64]) -> McEstimate {
        let n = values.len() as f64;
        let mean = compensated_sum(values.iter().copied()) / n;
        let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        let var = ss / (n - 1.0);
        McEstimate {
            estimate: mean,
            std_error: (var / n).sqrt(),
            num_directions: values.len(),
        }
    }

    /// `(closed_form − estimate) / std_error`; zero when both the error and
    /// the standard error vanish.
    pub fn z_score(&self, closed_form: f64) -> f64 {
        let diff = closed_form - self.estimate;
        if self.std_error == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        } else {
            diff / self.std_error
        }
    }
}

/// Which route [`l2_smoothed_1d`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Route {
    Pairwise,
    Expansion,
}

/// `Σ_pq w_p w_q exp(−(c_p − c_q)²/h)` for two weighted groups, by direct
/// summation over all ordered pairs in row-major order.
fn energy_pairwise(a: &[f64], wa: f64, b: &[f64], wb: f64, h: f64) -> f64 {
    let block = |u: &[f64], v: &[f64]| -> f64 {
        let mut acc = CompensatedSum::new();
        for &p in u {
            for &q in v {
                let d = p - q;
                acc.add((-d * d / h).exp());
            }
        }
        acc.value()
    };
    let aa = if a.is_empty() { 0.0 } else { wa * wa * block(a, a) };
    let bb = if b.is_empty() { 0.0 } else { wb * wb * block(b, b) };
    let ab = if a.is_empty() || b.is_empty() {
        0.0
    } else {
        wa * wb * block(a, b)
    };
    (aa + bb) + 2.0 * ab
}

/// Same quantity through `exp(−(x−y)²/h) = e^{−x²/h} e^{−y²/h} Σ_m (2xy/h)^m/m!`,
/// which turns the double sum into `Σ_m T_m²` with
/// `T_m = Σ_p w_p e^{−x_p²/h} x_p^m √((2/h)^m/m!)`. Every term is nonnegative,
/// so there is no cancellation between large sums, and the cost is linear in
/// the number of points.
fn energy_expansion(a: &[f64], wa: f64, b: &[f64], wb: f64, h: f64, scratch: &mut Vec<f64>) -> f64 {
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let center = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    let root = (2.0 / h).sqrt();

    // scratch layout: [x_a.., x_b.., u_a.., u_b..]
    let na = a.len();
    let total = na + b.len();
    scratch.clear();
    scratch.extend(a.iter().chain(b).map(|&v| (v - center) * root));
    scratch.extend(a.iter().chain(b).map(|&v| {
        let x = v - center;
        (-x * x / h).exp()
    }));
    let (xs, us) = scratch.split_at_mut(total);
    let r = radius * root;

    let mut acc = 0.0f64;
    let mut m = 0usize;
    let max_terms = (4.0 * r * r) as usize + 400;
    let mut tail_floor = 0.0;
    loop {
        let (ua, ub) = us.split_at(na);
        let sa: f64 = ua.iter().sum();
        let sb: f64 = ub.iter().sum();
        let t = wa * sa + wb * sb;
        acc += t * t;

        let abs_mass = wa.abs() * ua.iter().map(|v| v.abs()).sum::<f64>()
            + wb.abs() * ub.iter().map(|v| v.abs()).sum::<f64>();
        if m == 0 {
            tail_floor = 1e-22 * abs_mass * abs_mass;
        }
        let next = m + 1;
        let rho2 = r * r / next as f64;
        if rho2 < 0.5 {
            let tail = abs_mass * abs_mass * rho2 / (1.0 - rho2);
            if tail <= (1e-17 * acc).max(tail_floor) {
                break;
            }
        }
        if next > max_terms {
            break;
        }
        let step = (next as f64).sqrt().recip();
        for (u, &x) in us.iter_mut().zip(xs.iter()) {
            *u *= x * step;
        }
        m = next;
    }
    acc
}

fn check_l2_inputs(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("one-dimensional sample is empty"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("one-dimensional sample has non-finite values"));
    }
    Ok(())
}

/// Picks the cheaper route for the given sizes and spread.
pub fn l2_route(a: &[f64], b: &[f64], gamma: Bandwidth) -> L2Route {
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let r2 = 0.25 * (hi - lo) * (hi - lo) * 2.0 / (4.0 * gamma.value());
    let terms = 2.0 * r2 + 6.0 * r2.sqrt() + 20.0;
    let (n, k) = (a.len() as f64, b.len() as f64);
    let linear = (n + k) * terms;
    let pairwise = 5.0 * (n * n + k * k + n * k);
    if linear < pairwise {
        L2Route::Expansion
    } else {
        L2Route::Pairwise
    }
}

/// `‖λ_γ(a) − λ_γ(b)‖₂²` where `λ_γ(r) = (1/n) Σ_i N(r_i, γ)` is the
/// Gaussian-smoothed empirical density.
pub fn l2_smoothed_1d(a: &[f64], b: &[f64], gamma: Bandwidth) -> Result<f64> {
    let route = l2_route(a, b, gamma);
    l2_smoothed_1d_with(a, b, gamma, route)
}

/// [`l2_smoothed_1d`] through an explicitly chosen route.
pub fn l2_smoothed_1d_with(a: &[f64], b: &[f64], gamma: Bandwidth, route: L2Route) -> Result<f64> {
    check_l2_inputs(a, b)?;
    let h = 4.0 * gamma.value();
    let wa = 1.0 / a.len() as f64;
    let wb = -1.0 / b.len() as f64;
    let energy = match route {
        L2Route::Pairwise => energy_pairwise(a, wa, b, wb, h),
        L2Route::Expansion => energy_expansion(a, wa, b, wb, h, &mut Vec::new()),
    };
    Ok(energy / (PI * h).sqrt())
}

struct Scratch {
    dir: Vec<f64>,
    pa: Vec<f64>,
    pb: Vec<f64>,
    work: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Scratch {
        Scratch {
            dir: vec![0.0; dim],
            pa: Vec::new(),
            pb: Vec::new(),
            work: Vec::new(),
        }
    }
}

fn project(x: &Sample, dir: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(x.rows().map(|row| dot(row, dir)));
}

fn check_directions(num_directions: usize) -> Result<()> {
    if num_directions < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 directions, got {num_directions}"
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of the squared Cramer-Wold distance between samples.
pub fn cw2_monte_carlo(
    x: &Sample,
    y: &Sample,
    gamma: Bandwidth,
    num_directions: usize,
    seed: u64,
) -> Result<McEstimate> {
    x.ensure_same_dim(y)?;
    check_directions(num_directions)?;
    let sampler = DirectionSampler::new(seed, x.dim())?;
    let h = 4.0 * gamma.value();
    let norm = 1.0 / (PI * h).sqrt();
    let wa = 1.0 / x.len() as f64;
    let wb = -1.0 / y.len() as f64;
    let values: Vec<f64> = (0..num_directions as u64)
        .into_par_iter()
        .map_init(
            || Scratch::new(x.dim()),
            |s, idx| {
                sampler.fill(idx, &mut s.dir);
                project(x, &s.dir, &mut s.pa);
                project(y, &s.dir, &mut s.pb);
                let energy = match l2_route(&s.pa, &s.pb, gamma) {
                    L2Route::Pairwise => energy_pairwise(&s.pa, wa, &s.pb, wb, h),
                    L2Route::Expansion => {
                        energy_expansion(&s.pa, wa, &s.pb, wb, h, &mut s.work)
                    }
                };
                energy * norm
            },
        )
        .collect();
    Ok(McEstimate::from_values(&values))
}

/// Monte-Carlo estimate of the squared Cramer-Wold distance between a sample
/// and `N(0, I)`. On every slice the prior projects to `N(0, 1)`, smoothed to
/// `N(0, 1+γ)`, and all inner products follow from
/// `⟨N(r₁, γ₁), N(r₂, γ₂)⟩ = N(r₁ − r₂, γ₁ + γ₂)(0)`.
pub fn cw2_normal_monte_carlo(
    x: &Sample,
    gamma: Bandwidth,
    num_directions: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_directions(num_directions)?;
    let sampler = DirectionSampler::new(seed, x.dim())?;
    let g = gamma.value();
    let h = 4.0 * g;
    let n = x.len() as f64;
    let w = 1.0 / n;
    let self_norm = 1.0 / (PI * h).sqrt();
    // ⟨N(0,1+γ), N(0,1+γ)⟩ = N(0, 2+2γ)(0)
    let prior_self = 1.0 / (2.0 * PI * (2.0 + 2.0 * g)).sqrt();
    // ⟨N(a,γ), N(0,1+γ)⟩ = N(a, 1+2γ)(0)
    let cross_var = 1.0 + 2.0 * g;
    let cross_norm = 1.0 / (2.0 * PI * cross_var).sqrt();
    let values: Vec<f64> = (0..num_directions as u64)
        .into_par_iter()
        .map_init(
            || Scratch::new(x.dim()),
            |s, idx| {
                sampler.fill(idx, &mut s.dir);
                project(x, &s.dir, &mut s.pa);
                let energy = match l2_route(&s.pa, &[], gamma) {
                    L2Route::Pairwise => energy_pairwise(&s.pa, w, &[], 0.0, h),
                    L2Route::Expansion => energy_expansion(&s.pa, w, &[], 0.0, h, &mut s.work),
                };
                let cross = s
                    .pa
                    .iter()
                    .map(|a| (-a * a / (2.0 * cross_var)).exp())
                    .collect::<CompensatedSum>()
                    .value()
                    * cross_norm
                    * w;
                (energy * self_norm + prior_self) - 2.0 * cross
            },
        )
        .collect();
    Ok(McEstimate::from_values(&values))
}
