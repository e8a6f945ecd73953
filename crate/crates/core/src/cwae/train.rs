//! Training configuration, per-epoch records and the minibatch Adam loop.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cwae::adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
use crate::cwae::mlp::{Activation, Architecture, MlpParams};
use crate::cwae::objective::{
    cwae_cost, grad_cwae, training_phi_mode, CostConfig, ObjectiveKind, DEFAULT_EPS_LOG,
};
use crate::distance::cw2_sample_normal;
use crate::error::{Error, Result};
use crate::normality::{mardia, MardiaStats};
use crate::sample::{Bandwidth, Sample};
use crate::special::PhiMode;

/// Everything that determines a training run besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub objective: ObjectiveKind,
    pub seed: u64,
    /// `None` selects the default training regime for the latent dimension.
    pub phi_mode: Option<PhiMode>,
    pub eps_log: f64,
    pub cw_weight: f64,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Validation statistics use at most this many codes.
    pub max_valid_codes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            encoder_hidden: vec![32, 32],
            decoder_hidden: vec![32, 32],
            latent_dim: 2,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Identity,
            batch_size: 64,
            epochs: 10,
            adam: AdamConfig::default(),
            objective: ObjectiveKind::Cwae,
            seed: 0,
            phi_mode: None,
            eps_log: DEFAULT_EPS_LOG,
            cw_weight: 1.0,
            clip_norm: None,
            max_valid_codes: 10_000,
        }
    }
}

/// Keys understood by [`TrainConfig::set`], in the order `to_text` writes them.
pub const TRAIN_CONFIG_KEYS: [&str; 18] = [
    "encoder_hidden",
    "decoder_hidden",
    "latent_dim",
    "hidden_activation",
    "output_activation",
    "batch_size",
    "epochs",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "objective",
    "seed",
    "phi_mode",
    "eps_log",
    "cw_weight",
    "clip_norm",
    "max_valid_codes",
];

fn field_error(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::invalid(format!("config field '{key}': cannot use '{value}': {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| field_error(key, value, e))
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|w| {
            let w: usize = parse_num(key, w.trim())?;
            if w == 0 {
                return Err(field_error(key, value, "widths must be positive"));
            }
            Ok(w)
        })
        .collect()
}

fn join_widths(w: &[usize]) -> String {
    if w.is_empty() {
        return "none".to_string();
    }
    w.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl TrainConfig {
    /// Sets one field from its text form. Unknown keys and bad values are
    /// errors naming the field.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "encoder_hidden" => self.encoder_hidden = parse_widths(key, value)?,
            "decoder_hidden" => self.decoder_hidden = parse_widths(key, value)?,
            "latent_dim" => self.latent_dim = parse_num(key, value)?,
            "hidden_activation" => {
                self.hidden_activation = value.parse().map_err(|e| field_error(key, value, e))?
            }
            "output_activation" => {
                self.output_activation = value.parse().map_err(|e| field_error(key, value, e))?
            }
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "learning_rate" => self.adam.learning_rate = parse_num(key, value)?,
            "beta1" => self.adam.beta1 = parse_num(key, value)?,
            "beta2" => self.adam.beta2 = parse_num(key, value)?,
            "epsilon" => self.adam.epsilon = parse_num(key, value)?,
            "objective" => self.objective = value.parse().map_err(|e| field_error(key, value, e))?,
            "seed" => self.seed = parse_num(key, value)?,
            "phi_mode" => {
                self.phi_mode = match value {
                    "auto" => None,
                    other => Some(other.parse().map_err(|e| field_error(key, value, e))?),
                }
            }
            "eps_log" => self.eps_log = parse_num(key, value)?,
            "cw_weight" => self.cw_weight = parse_num(key, value)?,
            "clip_norm" => {
                self.clip_norm = match value {
                    "none" | "off" => None,
                    other => Some(parse_num(key, other)?),
                }
            }
            "max_valid_codes" => self.max_valid_codes = parse_num(key, value)?,
            _ => return Err(Error::invalid(format!("unknown config field '{key}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    /// Missing keys keep their defaults.
    pub fn from_text(text: &str) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let phi = self.phi_mode.map_or("auto", PhiMode::as_str);
        let clip = self.clip_norm.map_or("none".to_string(), |c| format!("{c:?}"));
        let values = [
            join_widths(&self.encoder_hidden),
            join_widths(&self.decoder_hidden),
            self.latent_dim.to_string(),
            self.hidden_activation.to_string(),
            self.output_activation.to_string(),
            self.batch_size.to_string(),
            self.epochs.to_string(),
            format!("{:?}", self.adam.learning_rate),
            format!("{:?}", self.adam.beta1),
            format!("{:?}", self.adam.beta2),
            format!("{:?}", self.adam.epsilon),
            self.objective.to_string(),
            self.seed.to_string(),
            phi.to_string(),
            format!("{:?}", self.eps_log),
            format!("{:?}", self.cw_weight),
            clip,
            self.max_valid_codes.to_string(),
        ];
        for (k, v) in TRAIN_CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::invalid(format!("config field '{key}': {why}")));
        if self.latent_dim == 0 {
            return bad("latent_dim", "must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.objective == ObjectiveKind::Cwae && self.batch_size < 2 {
            return bad("batch_size", "the CWAE objective needs at least 2");
        }
        if !(self.adam.learning_rate > 0.0) || !self.adam.learning_rate.is_finite() {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.adam.beta1) {
            return bad("beta1", "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.adam.beta2) {
            return bad("beta2", "must lie in [0, 1)");
        }
        if !(self.adam.epsilon > 0.0) {
            return bad("epsilon", "must be positive");
        }
        if !(self.eps_log > 0.0) {
            return bad("eps_log", "must be positive");
        }
        if !(self.cw_weight >= 0.0) || !self.cw_weight.is_finite() {
            return bad("cw_weight", "must be a nonnegative number");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad("clip_norm", "must be positive");
            }
        }
        if self.max_valid_codes < 2 {
            return bad("max_valid_codes", "must be at least 2");
        }
        if self.objective == ObjectiveKind::Cwae {
            training_phi_mode(self.latent_dim, self.phi_mode)
                .map_err(|e| Error::invalid(format!("config field 'phi_mode': {e}")))?;
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize) -> Architecture {
        Architecture {
            input_dim,
            encoder_hidden: self.encoder_hidden.clone(),
            latent_dim: self.latent_dim,
            decoder_hidden: self.decoder_hidden.clone(),
        }
    }

    pub fn cost_config(&self) -> CostConfig {
        CostConfig {
            objective: self.objective,
            eps_log: self.eps_log,
            cw_weight: self.cw_weight,
            phi_mode: self.phi_mode,
        }
    }
}

/// Validation metrics after one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    pub reconstruction_error: f64,
    pub cw_pre_log: f64,
    pub cw_post_log: f64,
    pub mardia: MardiaStats,
}

/// Reconstruction error, CW term and Mardia statistics of `params` on `valid`.
pub fn evaluate(
    params: &MlpParams,
    valid: &Sample,
    config: &TrainConfig,
    epoch: usize,
) -> Result<TrainRecord> {
    let valid = valid.head(config.max_valid_codes);
    let pass = params.forward(&valid)?;
    let reconstruction_error = valid
        .rows()
        .zip(pass.output().chunks_exact(valid.dim()))
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
        .sum::<f64>()
        / valid.len() as f64;
    let codes = Sample::from_flat(
        pass.layer_output(params.encoder_layers() - 1).to_vec(),
        params.latent_dim(),
    )?;
    let mode = training_phi_mode(params.latent_dim(), config.phi_mode)?;
    let gamma = Bandwidth::silverman(codes.len())?;
    let cw = cw2_sample_normal(&codes, gamma, Some(mode))?.squared_distance;
    Ok(TrainRecord {
        epoch,
        reconstruction_error,
        cw_pre_log: cw,
        cw_post_log: cw.max(config.eps_log).ln(),
        mardia: mardia(&codes)?,
    })
}

/// Minibatch Adam over `train`, one record per epoch on `valid`.
///
/// Initial weights and the per-epoch shuffles come from one ChaCha8 stream
/// seeded by `config.seed`. A zero-epoch run returns the initial parameters
/// and a single baseline record for epoch 0.
pub fn train(
    config: &TrainConfig,
    train: &Sample,
    valid: &Sample,
) -> Result<(MlpParams, Vec<TrainRecord>)> {
    config.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Empty("training or validation data"));
    }
    train.ensure_same_dim(valid)?;
    if config.batch_size > train.len() {
        return Err(Error::invalid(format!(
            "batch_size {} exceeds the {} training points",
            config.batch_size,
            train.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = MlpParams::random(
        &config.architecture(train.dim()),
        config.hidden_activation,
        config.output_activation,
        &mut rng,
    )?;
    if config.epochs == 0 {
        let record = evaluate(&params, valid, config, 0)?;
        return Ok((params, vec![record]));
    }

    let cost = config.cost_config();
    let mut state = AdamState::new(params.num_params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            // a lone trailing point has no CW bandwidth to speak of
            if batch.len() < 2 && config.objective == ObjectiveKind::Cwae {
                continue;
            }
            let x = train.select(batch)?;
            let (c, mut g) = grad_cwae(&x, &params, &cost)?;
            if !c.total.is_finite() {
                return Err(Error::invalid(format!("non-finite loss in epoch {epoch}")));
            }
            if let Some(max) = config.clip_norm {
                clip_global_norm(&mut g.total, max);
            }
            adam_step(params.values_mut(), &g.total, &mut state, &config.adam);
        }
        records.push(evaluate(&params, valid, config, epoch)?);
    }
    Ok((params, records))
}

/// Cost of `params` on a whole sample, for monitoring.
pub fn full_cost(params: &MlpParams, x: &Sample, config: &TrainConfig) -> Result<f64> {
    Ok(cwae_cost(x, params, &config.cost_config())?.total)
}
