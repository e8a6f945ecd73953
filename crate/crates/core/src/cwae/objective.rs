//! Reconstruction error, the CWAE cost `log d²_cw(E X, N(0,I)) + MSE`, and
//! its exact gradient.

use std::fmt;
use std::str::FromStr;

use crate::cwae::mlp::MlpParams;
use crate::distance::{cw2_sample_normal, cw2_sample_normal_with_grad};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::sample::{Bandwidth, Sample};
use crate::special::PhiMode;

/// Floor applied inside the logarithm of the CW term.
pub const DEFAULT_EPS_LOG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// Reconstruction error plus the log CW distance of the codes to `N(0, I)`.
    Cwae,
    /// Reconstruction error only.
    PlainAe,
}

impl ObjectiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Cwae => "cwae",
            ObjectiveKind::PlainAe => "plain_ae",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cwae" => Ok(ObjectiveKind::Cwae),
            "plain_ae" | "plainae" | "ae" => Ok(ObjectiveKind::PlainAe),
            other => Err(Error::invalid(format!("unknown objective '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConfig {
    pub objective: ObjectiveKind,
    pub eps_log: f64,
    /// Multiplier of the log-CW term; 1 reproduces the unweighted cost.
    pub cw_weight: f64,
    /// `None` picks [`training_phi_mode`]'s default.
    pub phi_mode: Option<PhiMode>,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            objective: ObjectiveKind::Cwae,
            eps_log: DEFAULT_EPS_LOG,
            cw_weight: 1.0,
            phi_mode: None,
        }
    }
}

/// Regime used for the CW term during training: the `D = 2` Bessel form for a
/// two-dimensional latent, the asymptotic form otherwise. The exact series
/// has no derivative and is rejected.
pub fn training_phi_mode(latent_dim: usize, requested: Option<PhiMode>) -> Result<PhiMode> {
    let mode = match requested {
        Some(m) => m,
        None if latent_dim == 2 => PhiMode::BesselD2,
        None => PhiMode::AsymptoticLargeD,
    };
    let mode = PhiMode::resolve(Some(mode), latent_dim)?;
    if !mode.is_differentiable() {
        return Err(Error::Unsupported(format!("training with phi mode '{mode}'")));
    }
    Ok(mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub total: f64,
    pub mse: f64,
    /// Squared CW distance of the codes to `N(0, I)`.
    pub cw_pre_log: f64,
    /// `ln(max(cw_pre_log, eps_log))`.
    pub cw_post_log: f64,
    pub gamma: Bandwidth,
}

/// Parameter gradients, split by source.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub total: Vec<f64>,
    pub cw_part: Vec<f64>,
}

fn squared_errors(x: &Sample, reconstruction: &[f64]) -> f64 {
    let per_point = x
        .rows()
        .zip(reconstruction.chunks_exact(x.dim()))
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>());
    compensated_sum(per_point)
}

/// `(1/n) Σ_i ‖x_i − D(E x_i)‖²`.
pub fn mse(x: &Sample, params: &MlpParams) -> Result<f64> {
    let pass = params.forward(x)?;
    Ok(squared_errors(x, pass.output()) / x.len() as f64)
}

fn check_cost_inputs(x: &Sample, cfg: &CostConfig) -> Result<()> {
    if cfg.objective == ObjectiveKind::Cwae && x.len() < 2 {
        return Err(Error::invalid("the CWAE cost needs a batch of at least 2 points"));
    }
    if !(cfg.eps_log > 0.0) {
        return Err(Error::domain("eps_log must be positive"));
    }
    Ok(())
}

fn breakdown(mse: f64, cw: f64, gamma: Bandwidth, cfg: &CostConfig) -> CostBreakdown {
    let cw_post_log = cw.max(cfg.eps_log).ln();
    let total = match cfg.objective {
        ObjectiveKind::Cwae => cw_post_log * cfg.cw_weight + mse,
        ObjectiveKind::PlainAe => mse,
    };
    CostBreakdown {
        total,
        mse,
        cw_pre_log: cw,
        cw_post_log,
        gamma,
    }
}

/// Cost of one batch. The bandwidth is Silverman's rule at the batch size.
pub fn cwae_cost(x: &Sample, params: &MlpParams, cfg: &CostConfig) -> Result<CostBreakdown> {
    check_cost_inputs(x, cfg)?;
    let mode = training_phi_mode(params.latent_dim(), cfg.phi_mode)?;
    let pass = params.forward(x)?;
    let gamma = Bandwidth::silverman(x.len())?;
    let codes = Sample::from_flat(
        pass.layer_output(params.encoder_layers() - 1).to_vec(),
        params.latent_dim(),
    )?;
    let cw = cw2_sample_normal(&codes, gamma, Some(mode))?.squared_distance;
    let mse = squared_errors(x, pass.output()) / x.len() as f64;
    Ok(breakdown(mse, cw, gamma, cfg))
}

/// Cost of one batch and its exact gradient with respect to every parameter.
pub fn grad_cwae(
    x: &Sample,
    params: &MlpParams,
    cfg: &CostConfig,
) -> Result<(CostBreakdown, Gradients)> {
    check_cost_inputs(x, cfg)?;
    let mode = training_phi_mode(params.latent_dim(), cfg.phi_mode)?;
    let pass = params.forward(x)?;
    let n = x.len();
    let enc = params.encoder_layers();
    let depth = params.layers().len();
    let gamma = Bandwidth::silverman(n)?;
    let codes = Sample::from_flat(pass.layer_output(enc - 1).to_vec(), params.latent_dim())?;

    let output = pass.output();
    let scale = 2.0 / n as f64;
    let grad_out: Vec<f64> = output
        .iter()
        .zip(x.as_flat())
        .map(|(y, t)| scale * (y - t))
        .collect();

    let mut total = vec![0.0; params.num_params()];
    let grad_latent = params.backward_range(&pass, enc, depth, grad_out, &mut total);
    params.backward_range(&pass, 0, enc, grad_latent, &mut total);

    let mut cw_part = vec![0.0; params.num_params()];
    let cw = match cfg.objective {
        ObjectiveKind::Cwae => {
            let (report, dcw) = cw2_sample_normal_with_grad(&codes, gamma, Some(mode))?;
            // d/dz ln(max(cw, eps)) vanishes on the floor
            if report.pre_clamp > cfg.eps_log {
                let factor = cfg.cw_weight / report.pre_clamp;
                let grad_codes: Vec<f64> = dcw.iter().map(|g| g * factor).collect();
                params.backward_range(&pass, 0, enc, grad_codes, &mut cw_part);
                total.iter_mut().zip(&cw_part).for_each(|(t, c)| *t += c);
            }
            report.squared_distance
        }
        ObjectiveKind::PlainAe => cw2_sample_normal(&codes, gamma, Some(mode))?.squared_distance,
    };
    let mse = squared_errors(x, output) / n as f64;
    Ok((breakdown(mse, cw, gamma, cfg), Gradients { total, cw_part }))
}
