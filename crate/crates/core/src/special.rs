//! The kernel profile `φ_D(s) = ₁F₁(1/2; D/2; −s)`.
//!
//! `φ_D` is what remains of a one-dimensional Gaussian density after its
//! argument is averaged over the unit sphere in `R^D`. Three evaluation
//! regimes are provided:
//!
//! * [`PhiMode::ExactSeries`]: the confluent hypergeometric function itself,
//!   summed as a power series for moderate `s`. Beyond [`SERIES_SWITCH`] it
//!   uses the large-argument expansion when `s ≥ D`, and a Gauss-Legendre
//!   rule on the integral representation otherwise.
//! * [`PhiMode::AsymptoticLargeD`]: `(1 + 4s/(2D−3))^{−1/2}`, accurate for
//!   `D ≥ 20` and cheap enough to sit inside a training loop.
//! * [`PhiMode::BesselD2`]: for `D = 2`, `φ_2(s) = e^{−s/2} I₀(s/2)`, with `I₀`
//!   taken from the classical two-branch polynomial fits.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;

/// Above this argument the power series is abandoned.
pub const SERIES_SWITCH: f64 = 40.0;

/// Number of Gauss-Legendre nodes used for the large-argument branch.
pub const QUADRATURE_NODES: usize = 200;

/// Branch point of the `D = 2` polynomial approximation.
pub const BESSEL_D2_SWITCH: f64 = 7.5;

/// Dimension from which the asymptotic profile is used by default.
pub const ASYMPTOTIC_MIN_DIM: usize = 20;

/// Evaluation regime of `φ_D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiMode {
    ExactSeries,
    AsymptoticLargeD,
    BesselD2,
}

impl PhiMode {
    /// Default regime: Bessel for `D = 2`, asymptotic for `D ≥ 20`, exact otherwise.
    pub fn default_for(dim: usize) -> PhiMode {
        if dim == 2 {
            PhiMode::BesselD2
        } else if dim >= ASYMPTOTIC_MIN_DIM {
            PhiMode::AsymptoticLargeD
        } else {
            PhiMode::ExactSeries
        }
    }

    /// Resolves an optional explicit request against `dim`, rejecting
    /// combinations that have no meaning.
    pub fn resolve(requested: Option<PhiMode>, dim: usize) -> Result<PhiMode> {
        check_dim(dim)?;
        let mode = requested.unwrap_or_else(|| PhiMode::default_for(dim));
        if mode == PhiMode::BesselD2 && dim != 2 {
            return Err(Error::Unsupported(format!(
                "bessel2 mode is only defined for D = 2, got D = {dim}"
            )));
        }
        Ok(mode)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhiMode::ExactSeries => "exact",
            PhiMode::AsymptoticLargeD => "asymptotic",
            PhiMode::BesselD2 => "bessel2",
        }
    }

    /// Whether [`phi_derivative`] is available in this regime.
    pub fn is_differentiable(self) -> bool {
        !matches!(self, PhiMode::ExactSeries)
    }
}

impl fmt::Display for PhiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "exactseries" | "exact_series" => Ok(PhiMode::ExactSeries),
            "asymptotic" | "asymptoticlarged" | "asymptotic_large_d" => {
                Ok(PhiMode::AsymptoticLargeD)
            }
            "bessel2" | "besseld2" | "bessel_d2" => Ok(PhiMode::BesselD2),
            other => Err(Error::invalid(format!("unknown phi mode '{other}'"))),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

fn check_arg(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain(format!(
            "phi argument must be finite and nonnegative, got {s}"
        )));
    }
    Ok(())
}

/// `₁F₁(1/2; D/2; −s)` evaluated without approximation beyond floating point.
pub fn phi_exact(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_arg(s)?;
    Ok(exact_unchecked(dim, s))
}

/// `(1 + 4s/(2D−3))^{−1/2}`.
pub fn phi_asymptotic(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_arg(s)?;
    Ok(asymptotic_unchecked(dim, s))
}

/// `φ_2` through the two-branch polynomial approximation of `I₀`.
pub fn phi_bessel_d2(s: f64) -> Result<f64> {
    check_arg(s)?;
    Ok(bessel_d2_unchecked(s))
}

/// Dispatches to the regime selected by `mode` (or the default for `dim`).
pub fn phi(dim: usize, s: f64, mode: Option<PhiMode>) -> Result<f64> {
    let mode = PhiMode::resolve(mode, dim)?;
    check_arg(s)?;
    Ok(Phi::new_unchecked(dim, mode).value(s))
}

/// `d/ds (1 + 4s/(2D−3))^{−1/2}`.
pub fn phi_asymptotic_derivative(dim: usize, s: f64) -> Result<f64> {
    check_dim(dim)?;
    check_arg(s)?;
    Ok(asymptotic_derivative_unchecked(dim, s))
}

/// Derivative of the `D = 2` polynomial approximation, branch by branch.
pub fn phi_bessel_d2_derivative(s: f64) -> Result<f64> {
    check_arg(s)?;
    Ok(bessel_d2_derivative_unchecked(s))
}

/// Derivative of `φ_D` in a differentiable regime.
pub fn phi_derivative(dim: usize, s: f64, mode: Option<PhiMode>) -> Result<f64> {
    let mode = PhiMode::resolve(mode, dim)?;
    check_arg(s)?;
    Phi::new_unchecked(dim, mode).derivative(s)
}

/// A validated `(dimension, regime)` pair with its constants precomputed,
/// for evaluation inside pairwise loops.
#[derive(Debug, Clone, Copy)]
pub struct Phi {
    dim: usize,
    mode: PhiMode,
    /// `1 / (2 ∫_0^{π/2} cos^{D−2}θ dθ)`, the normalisation of the integral form.
    norm: f64,
}

impl Phi {
    pub fn new(dim: usize, mode: Option<PhiMode>) -> Result<Phi> {
        let mode = PhiMode::resolve(mode, dim)?;
        Ok(Phi::new_unchecked(dim, mode))
    }

    fn new_unchecked(dim: usize, mode: PhiMode) -> Phi {
        let norm = if mode == PhiMode::ExactSeries {
            0.5 / wallis(dim - 2)
        } else {
            f64::NAN
        };
        Phi { dim, mode, norm }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> PhiMode {
        self.mode
    }

    /// `φ_D(s)` for `s ≥ 0`.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        match self.mode {
            PhiMode::AsymptoticLargeD => asymptotic_unchecked(self.dim, s),
            PhiMode::BesselD2 => bessel_d2_unchecked(s),
            PhiMode::ExactSeries => exact_with_norm(self.dim, s, self.norm),
        }
    }

    /// `φ_D'(s)`; errors for the exact regime.
    #[inline]
    pub fn derivative(&self, s: f64) -> Result<f64> {
        match self.mode {
            PhiMode::AsymptoticLargeD => Ok(asymptotic_derivative_unchecked(self.dim, s)),
            PhiMode::BesselD2 => Ok(bessel_d2_derivative_unchecked(s)),
            PhiMode::ExactSeries => Err(Error::Unsupported(
                "derivative of the exact series regime".into(),
            )),
        }
    }
}

#[inline]
fn asymptotic_unchecked(dim: usize, s: f64) -> f64 {
    let denom = 2.0 * dim as f64 - 3.0;
    (1.0 + 4.0 * s / denom).sqrt().recip()
}

#[inline]
fn asymptotic_derivative_unchecked(dim: usize, s: f64) -> f64 {
    let denom = 2.0 * dim as f64 - 3.0;
    let base = 1.0 + 4.0 * s / denom;
    -(2.0 / denom) / (base * base.sqrt())
}

/// `∫_0^{π/2} cos^m θ dθ` by the Wallis recurrence.
fn wallis(m: usize) -> f64 {
    let (mut w, start) = if m % 2 == 0 {
        (std::f64::consts::FRAC_PI_2, 2)
    } else {
        (1.0, 3)
    };
    let mut k = start;
    while k <= m {
        w *= (k as f64 - 1.0) / k as f64;
        k += 2;
    }
    w
}

fn exact_unchecked(dim: usize, s: f64) -> f64 {
    exact_with_norm(dim, s, 0.5 / wallis(dim - 2))
}

fn exact_with_norm(dim: usize, s: f64, norm: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if s <= SERIES_SWITCH {
        kummer_series(dim, s)
    } else {
        large_argument(dim, s, norm).unwrap_or_else(|| integral_form(dim, s, norm))
    }
}

/// `Γ(b)/Γ(b−a) s^{−a} ₂F₀(a, 1+a−b;; 1/s)` with `a = 1/2`, `b = D/2`; the
/// companion term carries `e^{−s}` and is dropped, which needs `s ≥ 2b`.
/// Returns `None` when the terms start growing before they are negligible.
fn large_argument(dim: usize, s: f64, norm: f64) -> Option<f64> {
    if s < dim as f64 {
        return None;
    }
    let b = dim as f64 / 2.0;
    let c = 1.5 - b;
    let mut term: f64 = 1.0;
    let mut sum = 1.0;
    for k in 0..400 {
        let k = k as f64;
        let next = term * (0.5 + k) * (c + k) / ((k + 1.0) * s);
        if next.abs() > term.abs() {
            return None;
        }
        sum += next;
        term = next;
        if term.abs() <= 1e-17 * sum.abs() {
            // Γ(b)/Γ(b − 1/2) = √π · norm
            return Some(norm * std::f64::consts::PI.sqrt() * sum / s.sqrt());
        }
    }
    None
}

/// Power series after Kummer's transformation
/// `₁F₁(a; b; −s) = e^{−s} ₁F₁(b−a; b; s)`, whose terms are all positive.
fn kummer_series(dim: usize, s: f64) -> f64 {
    let b = dim as f64 / 2.0;
    let c = b - 0.5;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (c + k) * s / ((b + k) * (k + 1.0));
        sum += term;
        k += 1.0;
        if k > s && term < 1e-17 * sum {
            break;
        }
    }
    (-s).exp() * sum
}

fn legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(QUADRATURE_NODES))
}

/// `2·norm·∫_0^{θ_max} e^{−s sin²θ} cos^{D−2}θ dθ`, the integral representation
/// under `x = sin θ`. The upper limit is cut where the integrand has fallen
/// below `e^{−60}` of its peak at θ = 0.
fn integral_form(dim: usize, s: f64, norm: f64) -> f64 {
    const CUTOFF: f64 = 60.0;
    let power = (dim - 2) as i32;
    let mut upper = std::f64::consts::FRAC_PI_2;
    if CUTOFF < s {
        upper = upper.min((CUTOFF / s).sqrt().asin());
    }
    if power > 0 {
        upper = upper.min((-CUTOFF / power as f64).exp().acos());
    }
    let (nodes, weights) = legendre_rule();
    let half = 0.5 * upper;
    let integral: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| {
            let theta = half * (x + 1.0);
            let sin = theta.sin();
            w * (-s * sin * sin).exp() * theta.cos().powi(power)
        })
        .sum();
    2.0 * norm * half * integral
}

const I0_LOW: [f64; 7] = [
    1.0, 3.515_622_9, 3.089_942_4, 1.206_749_2, 0.265_973_2, 0.036_076_8, 0.004_581_3,
];

const I0_HIGH: [f64; 9] = [
    0.398_942_28,
    0.013_285_92,
    0.002_253_19,
    -0.001_575_65,
    0.009_162_8,
    -0.020_577_06,
    0.026_355_37,
    -0.016_476_33,
    0.003_923_77,
];

/// Small-argument branch: `e^{−s/2} Σ c_k t^{2k}` with `t = s/7.5`.
pub fn bessel_d2_low_branch(s: f64) -> f64 {
    let t = s / BESSEL_D2_SWITCH;
    let t2 = t * t;
    let poly = I0_LOW.iter().rev().fold(0.0, |acc, &c| acc * t2 + c);
    (-0.5 * s).exp() * poly
}

/// Large-argument branch: `√(2/s) Σ d_k t^{−k}`.
pub fn bessel_d2_high_branch(s: f64) -> f64 {
    let inv_t = BESSEL_D2_SWITCH / s;
    let poly = I0_HIGH.iter().rev().fold(0.0, |acc, &c| acc * inv_t + c);
    (2.0 / s).sqrt() * poly
}

fn bessel_d2_unchecked(s: f64) -> f64 {
    if s <= BESSEL_D2_SWITCH {
        bessel_d2_low_branch(s)
    } else {
        bessel_d2_high_branch(s)
    }
}

fn bessel_d2_derivative_unchecked(s: f64) -> f64 {
    if s <= BESSEL_D2_SWITCH {
        let t = s / BESSEL_D2_SWITCH;
        let t2 = t * t;
        let poly = I0_LOW.iter().rev().fold(0.0, |acc, &c| acc * t2 + c);
        // d/dt Σ c_k t^{2k} = Σ 2k c_k t^{2k−1}
        let dpoly = I0_LOW
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * t2 + 2.0 * k as f64 * c)
            * t;
        (-0.5 * s).exp() * (dpoly / BESSEL_D2_SWITCH - 0.5 * poly)
    } else {
        let u = BESSEL_D2_SWITCH / s;
        let poly = I0_HIGH.iter().rev().fold(0.0, |acc, &c| acc * u + c);
        let dpoly = I0_HIGH
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * u + k as f64 * c);
        let root = (2.0 / s).sqrt();
        -0.5 * root / s * poly - root * dpoly * BESSEL_D2_SWITCH / (s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `e^{−x} I₀(x)` from 60 terms of the ascending series.
    fn scaled_i0(x: f64) -> f64 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / (k as f64 * k as f64);
            sum += term;
        }
        (-x).exp() * sum
    }

    #[test]
    fn zero_argument_is_one_in_every_regime() {
        assert_eq!(phi_exact(20, 0.0).unwrap(), 1.0);
        assert_eq!(phi_asymptotic(20, 0.0).unwrap(), 1.0);
        assert_eq!(phi_bessel_d2(0.0).unwrap(), 1.0);
        assert_eq!(phi(64, 0.0, None).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(phi_exact(1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(phi_exact(5, -1e-3), Err(Error::Domain(_))));
        assert!(matches!(phi_asymptotic(1, 1.0), Err(Error::Domain(_))));
        assert!(phi_bessel_d2(f64::NAN).is_err());
        assert!(matches!(
            phi(5, 1.0, Some(PhiMode::BesselD2)),
            Err(Error::Unsupported(_))
        ));
        assert!(phi_derivative(5, 1.0, Some(PhiMode::ExactSeries)).is_err());
    }

    #[test]
    fn default_dispatch() {
        assert_eq!(PhiMode::default_for(2), PhiMode::BesselD2);
        assert_eq!(PhiMode::default_for(5), PhiMode::ExactSeries);
        assert_eq!(PhiMode::default_for(19), PhiMode::ExactSeries);
        assert_eq!(PhiMode::default_for(20), PhiMode::AsymptoticLargeD);
        assert_eq!(phi(2, 1.0, None).unwrap(), phi_bessel_d2(1.0).unwrap());
        let v = phi(20, 9.25, None).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_half_power_point() {
        let v = phi_asymptotic(20, 37.0 / 4.0).unwrap();
        assert!((v - 0.707_106_78).abs() < 1e-8);
    }

    #[test]
    fn asymptotic_derivative_closed_values() {
        let d0 = phi_asymptotic_derivative(20, 0.0).unwrap();
        assert!((d0 + 2.0 / 37.0).abs() < 1e-16);
        let d1 = phi_asymptotic_derivative(20, 9.25).unwrap();
        assert!((d1 + (2.0 / 37.0) * 2f64.powf(-1.5)).abs() < 1e-16);
    }

    #[test]
    fn exact_d2_matches_bessel_identity() {
        // φ_2(1) = e^{-1/2} I₀(1/2)
        let expected = scaled_i0(0.5);
        let got = phi_exact(2, 1.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-13);
        // quadrature branch
        for s in [41.0, 50.0, 300.0, 1e4] {
            let expected = scaled_i0(s / 2.0);
            if s <= 100.0 {
                let got = phi_exact(2, s).unwrap();
                assert!(((got - expected) / expected).abs() < 1e-12, "s={s}");
            }
        }
    }

    #[test]
    fn series_and_quadrature_agree_at_switch() {
        for dim in [2usize, 3, 5, 8, 20, 64, 200] {
            let norm = 0.5 / wallis(dim - 2);
            for s in [5.0, 20.0, 39.0, 40.0] {
                let a = kummer_series(dim, s);
                let b = integral_form(dim, s, norm);
                assert!(((a - b) / a).abs() < 1e-12, "D={dim} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn expansion_and_quadrature_agree() {
        for dim in [2usize, 3, 4, 7, 20, 33, 64, 120] {
            let norm = 0.5 / wallis(dim - 2);
            for s in [40.0, 64.0, 130.0, 500.0, 1e4] {
                if let Some(a) = large_argument(dim, s, norm) {
                    let b = integral_form(dim, s, norm);
                    assert!(((a - b) / b).abs() < 1e-12, "D={dim} s={s}: {a} vs {b}");
                }
            }
        }
        assert!(large_argument(64, 50.0, 0.5 / wallis(62)).is_none());
        assert!(large_argument(20, 45.0, 0.5 / wallis(18)).is_some());
    }

    #[test]
    fn odd_dimension_large_argument_matches_terminating_expansion() {
        // For D = 3, φ_3(s) = √π erf(√s) / (2√s); at s ≥ 40 erf(√s) = 1 to double precision.
        for s in [45.0f64, 100.0, 1e3, 1e5] {
            let expected = std::f64::consts::PI.sqrt() / (2.0 * s.sqrt());
            let got = phi_exact(3, s).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn bessel_branches_and_derivative() {
        let low = bessel_d2_low_branch(BESSEL_D2_SWITCH);
        let high = bessel_d2_high_branch(BESSEL_D2_SWITCH);
        assert!(((low - high) / low).abs() < 1e-6);
        let expected = scaled_i0(2.0);
        assert!(((phi_bessel_d2(4.0).unwrap() - expected) / expected).abs() < 1e-6);
        for s in [0.3, 2.0, 7.0, 8.0, 20.0, 60.0] {
            let h = 1e-5;
            let fd = (phi_bessel_d2(s + h).unwrap() - phi_bessel_d2(s - h).unwrap()) / (2.0 * h);
            let d = phi_bessel_d2_derivative(s).unwrap();
            assert!(((d - fd) / d).abs() < 1e-6, "s={s}: {d} vs {fd}");
            assert!(d < 0.0);
        }
    }

    #[test]
    fn mode_parsing_round_trips() {
        for mode in [PhiMode::ExactSeries, PhiMode::AsymptoticLargeD, PhiMode::BesselD2] {
            assert_eq!(mode.as_str().parse::<PhiMode>().unwrap(), mode);
        }
        assert!("gauss".parse::<PhiMode>().is_err());
    }

    #[test]
    fn wallis_values() {
        assert!((wallis(0) - std::f64::consts::FRAC_PI_2).abs() < 1e-16);
        assert_eq!(wallis(1), 1.0);
        assert!((wallis(3) - 2.0 / 3.0).abs() < 1e-16);
        assert!((wallis(4) - 3.0 * std::f64::consts::PI / 16.0).abs() < 1e-15);
    }
}
