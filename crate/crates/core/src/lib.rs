//! One-hidden-layer networks read two ways: as a feedforward MLP trained by
//! backpropagation, and as a conditional energy-based model trained from
//! samples of `P(k, y | x)`. The two share one parameter layout, so weights
//! move between them without conversion.
//!
//! The crate is `no_std` with `alloc`. File IO, configuration and the CLI
//! live in the companion `ebmlp` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod activation;
pub mod adam;
pub mod data;
pub mod ebm;
pub mod equivalence;
pub mod error;
pub(crate) mod float;
pub mod linalg;
pub mod mlp;
pub mod params;
pub mod rng;
pub mod sampling;
pub mod train;

pub use adam::{Adam, AdamConfig};
pub use data::{BatchSchedule, Dataset, Example, IdxFile, LabeledImages};
pub use ebm::{EbmModel, NegativeEstimator};
pub use equivalence::{symmetrized_kl, transfer_weights, EquivalenceReport};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use mlp::MlpModel;
pub use params::{Dims, GradientSet, Init, Params};
pub use sampling::{ExactSampler, GibbsSampler, SampleSet, Sampler, SamplerConfig, SimAnnealSampler};
pub use train::{StepRecord, TrainConfig, TrainingTrace};
