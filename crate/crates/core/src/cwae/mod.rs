//! Autoencoder with the Cramer-Wold latent regularizer.

pub mod adam;
pub mod checkpoint;
pub mod mlp;
pub mod objective;
pub mod train;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, write_records_csv, RECORDS_CSV_HEADER};
pub use mlp::{Activation, Architecture, ForwardPass, LayerShape, MlpParams};
pub use objective::{
    cwae_cost, grad_cwae, mse, training_phi_mode, CostBreakdown, CostConfig, Gradients,
    ObjectiveKind, DEFAULT_EPS_LOG,
};
pub use train::{evaluate, full_cost, train, TrainConfig, TrainRecord, TRAIN_CONFIG_KEYS};
