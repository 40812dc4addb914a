//! Sparse-penalized deep neural network (SPDNN) estimation for weakly
//! dependent time series.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`]: feedforward networks with output truncation and a flat,
//!   column-major parameter vector.
//! * [`loss`]: Lipschitz losses and (empirical) risks.
//! * [`penalty`]: the clipped-L1 sparse penalty and parameter norms.
//! * [`train`]: manual backpropagation, Adam and early-stopped minibatch
//!   training of the penalized objective.
//! * [`dgp`]: ARX-ARCH simulators and lag embedding.
//! * [`bounds`]: numeric evaluation of covering-number, concentration and
//!   generalization bounds plus tuning schedules.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod data;
pub mod dgp;
pub mod error;
pub mod loss;
pub mod network;
pub mod penalty;
pub mod rng;
pub mod train;

pub use data::SupervisedSet;
pub use error::{Error, Result};
pub use loss::{LossKind, RiskEstimate};
pub use network::{Activation, Architecture, InitScheme, Network, ParamVector};
pub use penalty::PenaltyConfig;
pub use train::{TrainConfig, TrainedModel};
