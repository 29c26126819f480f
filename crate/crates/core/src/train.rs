//! Training loops for the three tracks and the per-step trace they record.
//!
//! Step 0 of every trace is the evaluation before any update; step `t` is
//! recorded right after the `t`-th ADAM update. Both models are evaluated
//! through the feedforward reading of their weights, which is how EBM
//! weights are scored on the test set.

use alloc::vec::Vec;

use rand::Rng;

use crate::adam::{Adam, AdamConfig};
use crate::data::{BatchSchedule, Dataset};
use crate::ebm::{grad_conditional_ll, mean_conditional_log_likelihood, EbmModel, NegativeEstimator};
use crate::error::{Error, Result};
use crate::mlp::{accuracy, grad_backprop, mean_loss, MlpModel};
use crate::params::Params;
use crate::rng::{seeded, StdRng};
use crate::sampling::{Sampler, SamplerConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub adam: AdamConfig,
    /// Drives the batch order and, for EBM training, the sampler seeds.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 5,
            steps: 20,
            adam: AdamConfig::with_learning_rate(0.1),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        self.adam.validate()
    }
}

/// Metrics after one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Mean cross-entropy on the training set.
    pub train_loss: f64,
    /// Mean `log P(y | x)` on the training set, hidden units summed out exactly.
    pub ebm_loglik: f64,
    pub test_accuracy: f64,
    /// Largest weight magnitude across all four groups.
    pub max_abs_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub final_params: Params,
}

impl TrainingTrace {
    pub fn accuracies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.test_accuracy).collect()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }
}

/// Scores a parameter set on both readings.
pub fn evaluate(params: &Params, step: usize, train: &Dataset, test: &Dataset) -> Result<StepRecord> {
    let mlp = MlpModel::from(params.clone());
    let ebm = EbmModel::from(params.clone());
    let examples = train.examples();
    Ok(StepRecord {
        step,
        train_loss: mean_loss(&mlp, &examples)?,
        ebm_loglik: mean_conditional_log_likelihood(&ebm, &examples)?,
        test_accuracy: accuracy(&mlp, test)?,
        max_abs_weight: params.max_abs(),
    })
}

fn check_sets(train: &Dataset, test: &Dataset) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Backpropagation with ADAM.
#[derive(Clone, Debug)]
pub struct MlpTrainer {
    pub model: MlpModel,
    adam: Adam,
    schedule: BatchSchedule,
}

impl MlpTrainer {
    pub fn new(model: MlpModel, train: &Dataset, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            adam: Adam::for_params(config.adam, &model.params),
            schedule: BatchSchedule::new(train.len(), config.batch_size, config.seed)?,
            model,
        })
    }

    /// One update on the next batch.
    pub fn step(&mut self, train: &Dataset) -> Result<()> {
        let batch = train.batch(&self.schedule.next_batch());
        let grad = grad_backprop(&self.model, &batch)?;
        self.adam.step_params(&mut self.model.params, &grad)
    }
}

/// Conditional contrastive training: sampled likelihood gradient, negated and
/// handed to ADAM.
#[derive(Clone, Debug)]
pub struct EbmTrainer<S> {
    pub model: EbmModel,
    pub sampler: S,
    pub sampler_config: SamplerConfig,
    pub estimator: NegativeEstimator,
    adam: Adam,
    schedule: BatchSchedule,
    rng: StdRng,
}

impl<S: Sampler> EbmTrainer<S> {
    pub fn new(
        model: EbmModel,
        sampler: S,
        sampler_config: SamplerConfig,
        train: &Dataset,
        config: &TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        sampler_config.validate()?;
        Ok(Self {
            adam: Adam::for_params(config.adam, &model.params),
            schedule: BatchSchedule::new(train.len(), config.batch_size, config.seed)?,
            rng: seeded(config.seed.rotate_left(32) ^ 0x5eed),
            model,
            sampler,
            sampler_config,
            estimator: NegativeEstimator::default(),
        })
    }

    pub fn with_estimator(mut self, estimator: NegativeEstimator) -> Self {
        self.estimator = estimator;
        self
    }

    pub fn step(&mut self, train: &Dataset) -> Result<()> {
        let batch = train.batch(&self.schedule.next_batch());
        let cfg = SamplerConfig {
            seed: self.rng.random(),
            ..self.sampler_config
        };
        let ascent = grad_conditional_ll(&self.model, &batch, &self.sampler, &cfg, self.estimator)?;
        self.adam.step_params(&mut self.model.params, &ascent.neg())
    }
}

pub fn train_mlp(model: MlpModel, train: &Dataset, test: &Dataset, config: &TrainConfig) -> Result<TrainingTrace> {
    check_sets(train, test)?;
    let mut trainer = MlpTrainer::new(model, train, config)?;
    let mut records = Vec::with_capacity(config.steps + 1);
    records.push(evaluate(&trainer.model.params, 0, train, test)?);
    for step in 1..=config.steps {
        trainer.step(train)?;
        records.push(evaluate(&trainer.model.params, step, train, test)?);
    }
    Ok(TrainingTrace {
        seed: config.seed,
        records,
        final_params: trainer.model.params,
    })
}

pub fn train_ebm<S: Sampler>(
    model: EbmModel,
    train: &Dataset,
    test: &Dataset,
    sampler: S,
    sampler_config: SamplerConfig,
    config: &TrainConfig,
) -> Result<TrainingTrace> {
    train_ebm_with_estimator(
        model,
        train,
        test,
        sampler,
        sampler_config,
        NegativeEstimator::default(),
        config,
    )
}

pub fn train_ebm_with_estimator<S: Sampler>(
    model: EbmModel,
    train: &Dataset,
    test: &Dataset,
    sampler: S,
    sampler_config: SamplerConfig,
    estimator: NegativeEstimator,
    config: &TrainConfig,
) -> Result<TrainingTrace> {
    check_sets(train, test)?;
    let mut trainer = EbmTrainer::new(model, sampler, sampler_config, train, config)?.with_estimator(estimator);
    let mut records = Vec::with_capacity(config.steps + 1);
    records.push(evaluate(&trainer.model.params, 0, train, test)?);
    for step in 1..=config.steps {
        trainer.step(train)?;
        records.push(evaluate(&trainer.model.params, step, train, test)?);
    }
    Ok(TrainingTrace {
        seed: config.seed,
        records,
        final_params: trainer.model.params,
    })
}
