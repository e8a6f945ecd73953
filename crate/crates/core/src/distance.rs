//! Closed-form squared Cramer-Wold distances.
//!
//! For samples `X = (x_i)`, `Y = (y_j)` in `R^D` and smoothing variance `γ`,
//!
//! ```text
//! d²(X, Y) = 1/(2√(πγ)) · [ 1/n² Σ_ii' φ(‖x_i−x_i'‖²/4γ)
//!                         + 1/k² Σ_jj' φ(‖y_j−y_j'‖²/4γ)
//!                         − 2/(nk) Σ_ij φ(‖x_i−y_j‖²/4γ) ]
//! ```
//!
//! and against the standard normal prior,
//!
//! ```text
//! d²(X, N(0,I)) = 1/(2n²√π) · [ γ^{−1/2} Σ_ij φ(‖x_i−x_j‖²/4γ) + n²(1+γ)^{−1/2}
//!                               − 2n(γ+½)^{−1/2} Σ_i φ(‖x_i‖²/(2+4γ)) ]
//! ```
//!
//! Pairwise sums run over rows in a fixed order with compensated summation;
//! rows may be evaluated in parallel but are always combined in row order, so
//! results do not depend on the thread count.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::sample::{squared_distance, squared_norm, Bandwidth, Sample};
use crate::special::{Phi, PhiMode};

/// Result of a distance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwReport {
    /// Squared distance, clamped at zero.
    pub squared_distance: f64,
    /// The value before clamping; slightly negative values are rounding noise.
    pub pre_clamp: f64,
    pub gamma: Bandwidth,
    pub mode: PhiMode,
    /// Size of the first sample.
    pub n: usize,
    /// Size of the second sample; `None` when compared against `N(0, I)`.
    pub k: Option<usize>,
    pub dim: usize,
}

/// A radial Gaussian `N(mean, variance_scale · I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGaussian {
    pub mean: Vec<f64>,
    pub variance_scale: f64,
}

impl RadialGaussian {
    pub fn new(mean: Vec<f64>, variance_scale: f64) -> Result<RadialGaussian> {
        if !(variance_scale >= 0.0) || !variance_scale.is_finite() {
            return Err(Error::domain(format!(
                "variance scale must be finite and nonnegative, got {variance_scale}"
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("radial Gaussian mean has non-finite entries"));
        }
        Ok(RadialGaussian {
            mean,
            variance_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `Σ_i Σ_i' φ(‖x_i − x_i'‖² · scale)` over all ordered pairs, diagonal included.
fn self_pair_sum(x: &Sample, phi: &Phi, scale: f64) -> f64 {
    let n = x.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut acc = CompensatedSum::new();
            for j in (i + 1)..n {
                acc.add(phi.value(squared_distance(xi, x.row(j)) * scale));
            }
            acc.value()
        })
        .collect();
    // φ(0) = 1 on the diagonal; off-diagonal pairs appear twice.
    n as f64 + 2.0 * compensated_sum(rows)
}

/// `Σ_i Σ_j φ(‖x_i − y_j‖² · scale)`, rows of `x` outermost.
fn cross_pair_sum(x: &Sample, y: &Sample, phi: &Phi, scale: f64) -> f64 {
    let rows: Vec<f64> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            y.rows()
                .map(|yj| phi.value(squared_distance(xi, yj) * scale))
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    compensated_sum(rows)
}

/// Total order on samples used to make the two-sample evaluation order
/// independent of argument order.
fn canonical_order(a: &Sample, b: &Sample) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.as_flat()
            .iter()
            .zip(b.as_flat())
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Squared Cramer-Wold distance between two samples.
///
/// Samples of different sizes get weights `1/n²`, `1/k²` and `2/(nk)` on the
/// three pair sums; for `n = k` this is the equal-size formula verbatim. The
/// result is symmetric in its arguments bit for bit.
pub fn cw2_sample_sample(
    x: &Sample,
    y: &Sample,
    gamma: Bandwidth,
    mode: Option<PhiMode>,
) -> Result<CwReport> {
    x.ensure_same_dim(y)?;
    let dim = x.dim();
    let phi = Phi::new(dim, mode)?;
    let g = gamma.value();
    let scale = 1.0 / (4.0 * g);

    let (first, second) = match canonical_order(x, y) {
        Ordering::Greater => (y, x),
        _ => (x, y),
    };
    let nf = first.len() as f64;
    let kf = second.len() as f64;
    let self_first = self_pair_sum(first, &phi, scale) / (nf * nf);
    let self_second = self_pair_sum(second, &phi, scale) / (kf * kf);
    let cross = cross_pair_sum(first, second, &phi, scale) / (nf * kf);

    let pre_clamp = ((self_first + self_second) - 2.0 * cross) / (2.0 * (PI * g).sqrt());
    Ok(CwReport {
        squared_distance: pre_clamp.max(0.0),
        pre_clamp,
        gamma,
        mode: phi.mode(),
        n: x.len(),
        k: Some(y.len()),
        dim,
    })
}

struct NormalTerms {
    scale_pair: f64,
    scale_radial: f64,
    coef_pair: f64,
    coef_const: f64,
    coef_radial: f64,
    prefactor: f64,
}

impl NormalTerms {
    fn new(n: usize, g: f64) -> NormalTerms {
        let nf = n as f64;
        NormalTerms {
            scale_pair: 1.0 / (4.0 * g),
            scale_radial: 1.0 / (2.0 + 4.0 * g),
            coef_pair: 1.0 / g.sqrt(),
            coef_const: nf * nf / (1.0 + g).sqrt(),
            coef_radial: 2.0 * nf / (g + 0.5).sqrt(),
            prefactor: 1.0 / (2.0 * nf * nf * PI.sqrt()),
        }
    }
}

/// Squared Cramer-Wold distance between a sample and the standard normal
/// distribution `N(0, I_D)`, without sampling from the prior.
pub fn cw2_sample_normal(x: &Sample, gamma: Bandwidth, mode: Option<PhiMode>) -> Result<CwReport> {
    let dim = x.dim();
    let phi = Phi::new(dim, mode)?;
    let t = NormalTerms::new(x.len(), gamma.value());

    let pair = self_pair_sum(x, &phi, t.scale_pair);
    let radial = x
        .rows()
        .map(|xi| phi.value(squared_norm(xi) * t.scale_radial))
        .collect::<CompensatedSum>()
        .value();
    let pre_clamp =
        t.prefactor * ((t.coef_pair * pair + t.coef_const) - t.coef_radial * radial);
    Ok(CwReport {
        squared_distance: pre_clamp.max(0.0),
        pre_clamp,
        gamma,
        mode: phi.mode(),
        n: x.len(),
        k: None,
        dim,
    })
}

/// [`cw2_sample_normal`] together with the gradient of its pre-clamp value
/// with respect to every coordinate of `x` (row-major, same layout as `x`).
///
/// Only regimes with a derivative (asymptotic, `D = 2` Bessel) are accepted.
pub fn cw2_sample_normal_with_grad(
    x: &Sample,
    gamma: Bandwidth,
    mode: Option<PhiMode>,
) -> Result<(CwReport, Vec<f64>)> {
    let dim = x.dim();
    let phi = Phi::new(dim, mode)?;
    if !phi.mode().is_differentiable() {
        return Err(Error::Unsupported(format!(
            "gradient of the CW prior distance in {} mode",
            phi.mode()
        )));
    }
    let report = cw2_sample_normal(x, gamma, Some(phi.mode()))?;
    let g = gamma.value();
    let t = NormalTerms::new(x.len(), g);
    let n = x.len();

    // ∂/∂x_i of Σ_jj' φ(‖x_j−x_j'‖²/4γ) = Σ_j φ'(s_ij)·(x_i − x_j)/γ
    // ∂/∂x_i of Σ_j φ(‖x_j‖²/(2+4γ))    = φ'(r_i)·2x_i/(2+4γ)
    let pair_coef = t.prefactor * t.coef_pair / g;
    let radial_coef = t.prefactor * t.coef_radial * 2.0 * t.scale_radial;
    let grads: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut acc = vec![CompensatedSum::new(); dim];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let xj = x.row(j);
                let d = phi
                    .derivative(squared_distance(xi, xj) * t.scale_pair)
                    .unwrap_or(0.0);
                for c in 0..dim {
                    acc[c].add(d * (xi[c] - xj[c]));
                }
            }
            let dr = phi
                .derivative(squared_norm(xi) * t.scale_radial)
                .unwrap_or(0.0);
            (0..dim)
                .map(|c| pair_coef * acc[c].value() - radial_coef * dr * xi[c])
                .collect()
        })
        .collect();
    Ok((report, grads.into_iter().flatten().collect()))
}

/// Cramer-Wold scalar product of two radial Gaussians:
/// `(2π(α+β+2γ))^{−1/2} · φ(‖x−y‖² / (2(α+β+2γ)))`.
pub fn cw_scalar_product_radial(
    a: &RadialGaussian,
    b: &RadialGaussian,
    gamma: Bandwidth,
    mode: Option<PhiMode>,
) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let phi = Phi::new(a.dim(), mode)?;
    let total = a.variance_scale + b.variance_scale + 2.0 * gamma.value();
    let s = squared_distance(&a.mean, &b.mean) / (2.0 * total);
    Ok(phi.value(s) / (2.0 * PI * total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::phi;

    fn sample(rows: &[&[f64]]) -> Sample {
        Sample::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let x = sample(&[&[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5], &[2.0, 0.0, -0.7]]);
        let g = Bandwidth::silverman(3).unwrap();
        let r = cw2_sample_sample(&x, &x, g, None).unwrap();
        assert!(r.squared_distance.abs() <= 1e-10);
        assert_eq!(r.k, Some(3));
    }

    #[test]
    fn single_points_reduce_to_one_minus_phi() {
        let x = sample(&[&[0.0, 0.0, 0.0, 0.0, 0.0]]);
        let y = sample(&[&[1.0, 0.5, -0.5, 0.0, 2.0]]);
        let g = Bandwidth::new(0.7).unwrap();
        let r = cw2_sample_sample(&x, &y, g, None).unwrap();
        let s = 5.5 / (4.0 * 0.7);
        let expected = (1.0 - phi(5, s, None).unwrap()) / (PI * 0.7).sqrt();
        assert!((r.squared_distance - expected).abs() < 1e-14);
    }

    #[test]
    fn single_origin_point_against_normal() {
        let x = Sample::zeros(1, 20).unwrap();
        let g = Bandwidth::new(1.0).unwrap();
        let r = cw2_sample_normal(&x, g, None).unwrap();
        let expected = (1.0 + 0.5f64.sqrt() - 2.0 / 1.5f64.sqrt()) / (2.0 * PI.sqrt());
        assert!((r.squared_distance - expected).abs() < 1e-15);
        assert!((r.squared_distance - 0.0209).abs() < 1e-4);
    }

    #[test]
    fn origin_cluster_against_normal_matches_single_point() {
        // With every point at the origin each pair term is φ(0) = 1, so the
        // n-point value coincides with the one-point value.
        let g = Bandwidth::new(1.0).unwrap();
        let one = cw2_sample_normal(&Sample::zeros(1, 20).unwrap(), g, None).unwrap();
        let four = cw2_sample_normal(&Sample::zeros(4, 20).unwrap(), g, None).unwrap();
        let expected = (16.0 + 16.0 / 2f64.sqrt() - 8.0 * 4.0 / 1.5f64.sqrt())
            / (2.0 * 16.0 * PI.sqrt());
        assert!((four.squared_distance - expected).abs() < 1e-15);
        assert!((four.squared_distance - one.squared_distance).abs() < 1e-15);
    }

    #[test]
    fn argument_order_does_not_change_bits() {
        let x = sample(&[&[0.1, 0.2], &[1.0, -1.0], &[2.0, 0.0]]);
        let y = sample(&[&[0.3, 0.1], &[-1.0, 0.4]]);
        let g = Bandwidth::for_pair(3, 2).unwrap();
        for mode in [None, Some(PhiMode::ExactSeries), Some(PhiMode::AsymptoticLargeD)] {
            let a = cw2_sample_sample(&x, &y, g, mode).unwrap();
            let b = cw2_sample_sample(&y, &x, g, mode).unwrap();
            assert_eq!(a.pre_clamp.to_bits(), b.pre_clamp.to_bits());
        }
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let x = sample(&[&[0.1, 0.2]]);
        let y = sample(&[&[0.1, 0.2, 0.3]]);
        let g = Bandwidth::new(1.0).unwrap();
        assert!(matches!(
            cw2_sample_sample(&x, &y, g, None),
            Err(Error::DimensionMismatch { .. })
        ));
        let a = RadialGaussian::new(vec![0.0; 2], 0.1).unwrap();
        let b = RadialGaussian::new(vec![0.0; 3], 0.1).unwrap();
        assert!(cw_scalar_product_radial(&a, &b, g, None).is_err());
        assert!(RadialGaussian::new(vec![0.0; 2], -0.1).is_err());
    }

    #[test]
    fn one_dimensional_sample_rejected() {
        let x = Sample::from_flat(vec![0.0, 1.0], 1).unwrap();
        let g = Bandwidth::new(1.0).unwrap();
        assert!(matches!(cw2_sample_normal(&x, g, None), Err(Error::Domain(_))));
    }

    #[test]
    fn radial_product_special_cases() {
        let g = Bandwidth::new(0.4).unwrap();
        let a = RadialGaussian::new(vec![0.5, -0.2, 1.0], 0.3).unwrap();
        let v = cw_scalar_product_radial(&a, &a, g, None).unwrap();
        assert!((v - (2.0 * PI * (0.6 + 0.8)).powf(-0.5)).abs() < 1e-15);

        let p = RadialGaussian::new(vec![0.5, -0.2, 1.0], 0.0).unwrap();
        let q = RadialGaussian::new(vec![-0.5, 0.3, 0.0], 0.0).unwrap();
        let v = cw_scalar_product_radial(&p, &q, g, None).unwrap();
        let d2 = 1.0 + 0.25 + 1.0;
        let expected = phi(3, d2 / (4.0 * 0.4), None).unwrap() / (4.0 * PI * 0.4).sqrt();
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn prior_gradient_matches_finite_differences() {
        let x = sample(&[
            &[0.3, -1.2, 0.5],
            &[1.1, 0.4, -0.2],
            &[-0.6, 0.9, 1.4],
            &[0.05, 0.0, -0.8],
        ]);
        let g = Bandwidth::silverman(4).unwrap();
        let (_, grad) =
            cw2_sample_normal_with_grad(&x, g, Some(PhiMode::AsymptoticLargeD)).unwrap();
        let h = 1e-6;
        for idx in 0..x.as_flat().len() {
            let mut plus = x.as_flat().to_vec();
            let mut minus = plus.clone();
            plus[idx] += h;
            minus[idx] -= h;
            let fp = cw2_sample_normal(&Sample::from_flat(plus, 3).unwrap(), g, Some(PhiMode::AsymptoticLargeD))
                .unwrap()
                .pre_clamp;
            let fm = cw2_sample_normal(&Sample::from_flat(minus, 3).unwrap(), g, Some(PhiMode::AsymptoticLargeD))
                .unwrap()
                .pre_clamp;
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - grad[idx]).abs() < 1e-7 * (1.0 + grad[idx].abs()), "{idx}");
        }
        assert!(cw2_sample_normal_with_grad(&x, g, Some(PhiMode::ExactSeries)).is_err());
    }
}
