//! Losses through the auditory model, Adam with global-norm clipping, and
//! the mini-batch training loop.

mod config;
mod losses;
mod optim;
mod trainer;

pub use config::{LossKind, TrainConfig};
pub use losses::{
    cnrhlc_value, elementwise_loss, loss_cnrhlc, loss_hlc, loss_nr, loss_nrhlc, loss_sdr, model_target,
    Elementwise, SDR_EPSILON,
};
pub use optim::{clip_global_norm, global_norm, AdamConfig, OptimizerState};
pub use trainer::{
    loss_curve_csv, write_loss_curve, LossParts, LossReport, PreparedExample, TrainOutcome, Trainer,
    TrainingExample, LOSS_CURVE_HEADER,
};
