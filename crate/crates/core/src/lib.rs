//! Spiking-network identification of buck-converter passives.
//!
//! A three-layer LIF network (or a feedforward baseline) reads a noisy startup
//! transient and emits `(L, C, Rs)`; a differentiable RK4 integration of the
//! averaged converter model turns those estimates back into waveforms, and the
//! normalized reconstruction error trains the network end to end.
//!
//! Module map:
//! - [`autodiff`]: tape-based reverse-mode differentiation with a spike op
//! - [`converter`]: averaged model, RK4, EMI synthesis, waveform CSV
//! - [`estimators`]: SNN and feedforward estimators, checkpoints
//! - [`training`]: reconstruction loss, Adam with cosine annealing, datasets
//! - [`efficiency`]: sparsity, MAC/SOP counts, energy projection
//! - [`monitoring`]: degradation tracking and event-driven fault detection

pub mod autodiff;
pub mod converter;
pub mod efficiency;
pub mod error;
pub mod estimators;
pub mod monitoring;
pub mod rng;
pub mod training;

pub use autodiff::{SurrogateConfig, Tape, Tensor, Var};
pub use converter::{ConverterParams, EmiConfig, Passives, Waveform};
pub use error::{Error, Result};
pub use estimators::{Checkpoint, Estimator, FfEstimator, Model, SnnConfig, SnnEstimator, SpikeRecord};
pub use training::{Acquisition, TrainConfig};
