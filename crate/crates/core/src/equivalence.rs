//! Moving weights between the two readings and comparing them.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::data::{Dataset, Example};
use crate::ebm::{exact_grad_conditional_ll, mean_conditional_log_likelihood, EbmModel};
use crate::error::{check_len, Error, Result};
use crate::float::ln;
use crate::mlp::{accuracy, grad_backprop, mean_loss, MlpModel, LOSS_CLAMP};
use crate::params::{Dims, Init, Params};
use crate::rng::seeded;
use crate::sampling::{GibbsSampler, SamplerConfig};
use crate::train::{EbmTrainer, MlpTrainer, TrainConfig};

impl From<EbmModel> for MlpModel {
    fn from(m: EbmModel) -> Self {
        MlpModel { params: m.params }
    }
}

impl From<MlpModel> for EbmModel {
    fn from(m: MlpModel) -> Self {
        EbmModel { params: m.params }
    }
}

/// A model that can be reinterpreted as the other kind.
pub trait TransferWeights {
    type Target;

    fn transfer_weights(&self) -> Self::Target;
}

impl TransferWeights for EbmModel {
    type Target = MlpModel;

    fn transfer_weights(&self) -> MlpModel {
        self.clone().into()
    }
}

impl TransferWeights for MlpModel {
    type Target = EbmModel;

    fn transfer_weights(&self) -> EbmModel {
        self.clone().into()
    }
}

/// Copies `W1, W2, b, c` unchanged into the other reading.
pub fn transfer_weights<T: TransferWeights>(source: &T) -> T::Target {
    source.transfer_weights()
}

/// Mean over entries of `KL(p‖q) + KL(q‖p)` between Bernoulli
/// distributions, in nats. Entries are clamped to `[1e-12, 1 - 1e-12]`.
pub fn symmetrized_kl(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len("symmetrized_kl second argument", p.len(), q.len())?;
    if p.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let clamp = |v: f64| v.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
    let total: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let (a, b) = (clamp(a), clamp(b));
            // KL(a‖b) + KL(b‖a) collapses to this form.
            (a - b) * (ln(a / b) - ln((1.0 - a) / (1.0 - b)))
        })
        .sum();
    Ok(total / p.len() as f64)
}

/// Largest entrywise gap between the MLP descent gradient and the negated
/// exact EBM ascent gradient at the same parameters. Both readings agree to
/// first order in the weights, so the gap is second order.
pub fn gradient_discrepancy(params: &Params, batch: &[Example<'_>]) -> Result<f64> {
    let mlp = grad_backprop(&MlpModel::from(params.clone()), batch)?;
    let ebm = exact_grad_conditional_ll(&EbmModel::from(params.clone()), batch)?;
    let mut gap = 0.0f64;
    for (a, b) in mlp.iter().zip(ebm.iter()) {
        gap = gap.max(crate::float::abs(a + b));
    }
    Ok(gap)
}

/// Metrics of one lockstep step. "native" columns score a model with its own
/// weights; "inherited" columns score it with the other model's weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceRecord {
    pub step: usize,
    pub mlp_loss: f64,
    pub mlp_loss_inherited: f64,
    pub ebm_loglik: f64,
    pub ebm_loglik_inherited: f64,
    pub mlp_accuracy: f64,
    pub mlp_accuracy_inherited: f64,
    pub ebm_accuracy: f64,
    pub ebm_accuracy_inherited: f64,
    /// Symmetrized KL between the MLP outputs and the EBM output marginals
    /// on the test set.
    pub kl_nats: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub dims: Dims,
    pub seed: u64,
    pub records: Vec<EquivalenceRecord>,
}

impl EquivalenceReport {
    pub const CSV_HEADER: &'static str = "step,mlp_loss,mlp_loss_inherited,ebm_loglik,ebm_loglik_inherited,\
mlp_accuracy,mlp_accuracy_inherited,ebm_accuracy,ebm_accuracy_inherited,kl_nats";

    pub fn kl_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.kl_nats).collect()
    }

    /// One row per step, columns as in [`Self::CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.mlp_loss,
                r.mlp_loss_inherited,
                r.ebm_loglik,
                r.ebm_loglik_inherited,
                r.mlp_accuracy,
                r.mlp_accuracy_inherited,
                r.ebm_accuracy,
                r.ebm_accuracy_inherited,
                r.kl_nats
            );
        }
        s
    }
}

fn ebm_accuracy(model: &EbmModel, data: &Dataset) -> Result<f64> {
    let mut hits = 0usize;
    for i in 0..data.len() {
        if model.predict(data.input(i))? == data.target(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Compares an MLP and an EBM (normally trained side by side).
pub fn cross_evaluate(
    step: usize,
    mlp: &MlpModel,
    ebm: &EbmModel,
    train: &Dataset,
    test: &Dataset,
) -> Result<EquivalenceRecord> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let examples = train.examples();
    let mlp_from_ebm = transfer_weights(ebm);
    let ebm_from_mlp = transfer_weights(mlp);
    let mut p = Vec::new();
    let mut q = Vec::new();
    for i in 0..test.len() {
        p.extend(mlp.forward(test.input(i))?);
        q.extend(ebm.output_marginals(test.input(i))?);
    }
    Ok(EquivalenceRecord {
        step,
        mlp_loss: mean_loss(mlp, &examples)?,
        mlp_loss_inherited: mean_loss(&mlp_from_ebm, &examples)?,
        ebm_loglik: mean_conditional_log_likelihood(ebm, &examples)?,
        ebm_loglik_inherited: mean_conditional_log_likelihood(&ebm_from_mlp, &examples)?,
        mlp_accuracy: accuracy(mlp, test)?,
        mlp_accuracy_inherited: accuracy(&mlp_from_ebm, test)?,
        ebm_accuracy: ebm_accuracy(ebm, test)?,
        ebm_accuracy_inherited: ebm_accuracy(&ebm_from_mlp, test)?,
        kl_nats: symmetrized_kl(&p, &q)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceConfig {
    pub dims: Dims,
    pub init: Init,
    pub train: TrainConfig,
    /// Gibbs settings for the EBM's negative phase.
    pub sampler: SamplerConfig,
}

/// Trains an MLP by backpropagation and an EBM with Gibbs-sampled gradients
/// from the same initial weights and on the same batch sequence, recording
/// [`cross_evaluate`] before training and after every step.
pub fn run_equivalence_experiment(
    train: &Dataset,
    test: &Dataset,
    config: &EquivalenceConfig,
) -> Result<EquivalenceReport> {
    let init = Params::init(config.dims, config.init, &mut seeded(config.train.seed));
    let mut mlp = MlpTrainer::new(MlpModel::from(init.clone()), train, &config.train)?;
    let mut ebm = EbmTrainer::new(EbmModel::from(init), GibbsSampler, config.sampler, train, &config.train)?;
    let mut records = Vec::with_capacity(config.train.steps + 1);
    records.push(cross_evaluate(0, &mlp.model, &ebm.model, train, test)?);
    for step in 1..=config.train.steps {
        mlp.step(train)?;
        ebm.step(train)?;
        records.push(cross_evaluate(step, &mlp.model, &ebm.model, train, test)?);
    }
    Ok(EquivalenceReport {
        dims: config.dims,
        seed: config.train.seed,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_kl_values() {
        assert_eq!(symmetrized_kl(&[0.3, 0.9], &[0.3, 0.9]).unwrap(), 0.0);
        let v = symmetrized_kl(&[0.75, 0.75], &[0.25, 0.25]).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-12);
        assert!(symmetrized_kl(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn transfer_is_an_involution() {
        let ebm = EbmModel::init(Dims::new(4, 3, 1), Init::FanInUniform, &mut seeded(8));
        let back = transfer_weights(&transfer_weights(&ebm));
        assert_eq!(back, ebm);
    }

    #[test]
    fn zero_ebm_becomes_half_output_mlp() {
        let mlp = transfer_weights(&EbmModel::zeros(Dims::new(2, 2, 1)));
        assert_eq!(mlp.forward(&[0.9, 0.1]).unwrap(), [0.5]);
    }
}
