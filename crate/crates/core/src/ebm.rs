//! The conditional energy-based model.
//!
//! With inputs `x` clamped, hidden units `k` and outputs `y` are binary and
//!
//! ```text
//! E(x, k, y) = -(kᵀ W1 x + yᵀ W2 k + bᵀ k + cᵀ y),    P(k, y | x) ∝ exp(-E)
//! ```
//!
//! The leading minus sign makes `E[k | x, y] = σ(W1 x + W2ᵀ y + b)` and
//! `E[y | x, k] = σ(W2 k + c)`, so the same weights read as an MLP predict
//! the same label. Gradients are returned as the *ascent* direction of the
//! mean log conditional likelihood.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::activation::sigmoid_in_place;
use crate::data::Example;
use crate::error::{check_binary, check_len, check_unit_range, Error, Result};
use crate::float::{exp, log_sum_exp, softplus};
use crate::linalg::{axpy, dot};
use crate::params::{Dims, GradientSet, Init, Params};
use crate::rng::derive_seed;
use crate::sampling::{state_bits, Sampler, SamplerConfig};

/// Largest number of binary variables enumerated exactly by default.
pub const DEFAULT_ENUMERATION_BOUND: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct EbmModel {
    pub params: Params,
}

impl EbmModel {
    pub fn new(params: Params) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            params: Params::zeros(dims),
        }
    }

    pub fn init<R: Rng + ?Sized>(dims: Dims, init: Init, rng: &mut R) -> Self {
        Self {
            params: Params::init(dims, init, rng),
        }
    }

    pub fn dims(&self) -> Dims {
        self.params.dims()
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        check_len("input vector", self.dims().inputs, x.len())?;
        check_unit_range("input vector", x)
    }

    /// `W1 x + b`: the hidden units' input-driven field.
    pub fn hidden_field(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.params.w1.matvec(x);
        axpy(1.0, &self.params.hidden_bias, &mut f);
        f
    }

    /// `E[k | x, y] = σ(field + W2ᵀ y)` where `field = W1 x + b`.
    pub fn hidden_means(&self, field: &[f64], y: &[f64]) -> Vec<f64> {
        let mut a = self.params.w2.matvec_transposed(y);
        axpy(1.0, field, &mut a);
        sigmoid_in_place(&mut a);
        a
    }

    /// `E[y | x, k] = σ(W2 k + c)`.
    pub fn output_means(&self, k: &[f64]) -> Vec<f64> {
        let mut a = self.params.w2.matvec(k);
        axpy(1.0, &self.params.output_bias, &mut a);
        sigmoid_in_place(&mut a);
        a
    }

    pub fn energy(&self, x: &[f64], k: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.dims();
        check_len("input vector", d.inputs, x.len())?;
        check_len("hidden state", d.hidden, k.len())?;
        check_len("output state", d.outputs, y.len())?;
        check_unit_range("input vector", x)?;
        check_binary("hidden state", k)?;
        check_binary("output state", y)?;
        Ok(self.energy_with_field(&self.hidden_field(x), k, y))
    }

    fn energy_with_field(&self, field: &[f64], k: &[f64], y: &[f64]) -> f64 {
        let p = &self.params;
        let coupling = dot(y, &p.w2.matvec(k));
        -(dot(k, field) + coupling + dot(&p.output_bias, y))
    }

    /// Unnormalized `log P(y | x)` for every output assignment, with the
    /// hidden layer summed out analytically:
    /// `cᵀy + Σ_j softplus((W1 x + W2ᵀ y + b)_j)`.
    pub fn output_log_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let m = self.dims().outputs;
        check_bound(m, DEFAULT_ENUMERATION_BOUND)?;
        let field = self.hidden_field(x);
        Ok(self.output_log_weights_with_field(&field))
    }

    fn output_log_weights_with_field(&self, field: &[f64]) -> Vec<f64> {
        let m = self.dims().outputs;
        (0..1usize << m)
            .map(|idx| {
                let y = state_bits(idx as u64, m);
                let mut a = self.params.w2.matvec_transposed(&y);
                axpy(1.0, field, &mut a);
                dot(&self.params.output_bias, &y) + a.iter().map(|&z| softplus(z)).sum::<f64>()
            })
            .collect()
    }

    /// `P(y | x)` over all `2^M` output assignments (bit `l` of the index is `y_l`).
    pub fn output_distribution(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(normalize_log_weights(&self.output_log_weights(x)?))
    }

    /// Per-unit marginals `P(y_l = 1 | x)`.
    pub fn output_marginals(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dist = self.output_distribution(x)?;
        let m = self.dims().outputs;
        Ok((0..m)
            .map(|l| {
                dist.iter()
                    .enumerate()
                    .filter(|(idx, _)| idx >> l & 1 == 1)
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect())
    }

    /// Thresholds each output marginal at 0.5 (ties go to 0).
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .output_marginals(x)?
            .into_iter()
            .map(|p| if p > 0.5 { 1.0 } else { 0.0 })
            .collect())
    }
}

impl From<Params> for EbmModel {
    fn from(params: Params) -> Self {
        Self { params }
    }
}

fn check_bound(vars: usize, bound: usize) -> Result<()> {
    if vars > bound {
        Err(Error::EnumerationBound { vars, bound })
    } else {
        Ok(())
    }
}

fn normalize_log_weights(lw: &[f64]) -> Vec<f64> {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = lw.iter().map(|&v| exp(v - max)).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    w
}

fn state_index(bits: &[f64]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (usize::from(b == 1.0) << i))
}

/// The full joint `P(k, y | x)` obtained by enumerating every state.
#[derive(Clone, Debug, PartialEq)]
pub struct JointConditional {
    hidden: usize,
    outputs: usize,
    probs: Vec<f64>,
}

impl JointConditional {
    /// Probabilities indexed by state: bit `j < K` is `k_j`, bit `K + l` is `y_l`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_vars(&self) -> usize {
        self.hidden + self.outputs
    }

    pub fn prob(&self, k: &[f64], y: &[f64]) -> f64 {
        self.probs[state_index(k) | state_index(y) << self.hidden]
    }

    /// `P(y | x)` by summing the joint over `k`.
    pub fn output_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.outputs];
        for (idx, p) in self.probs.iter().enumerate() {
            out[idx >> self.hidden] += p;
        }
        out
    }
}

pub fn exact_conditional(model: &EbmModel, x: &[f64]) -> Result<JointConditional> {
    exact_conditional_with_bound(model, x, DEFAULT_ENUMERATION_BOUND)
}

pub fn exact_conditional_with_bound(model: &EbmModel, x: &[f64], bound: usize) -> Result<JointConditional> {
    model.check_input(x)?;
    let d = model.dims();
    let n = d.sampled_vars();
    check_bound(n, bound)?;
    let field = model.hidden_field(x);
    let log_weights: Vec<f64> = (0..1u64 << n)
        .map(|idx| {
            let bits = state_bits(idx, n);
            -model.energy_with_field(&field, &bits[..d.hidden], &bits[d.hidden..])
        })
        .collect();
    Ok(JointConditional {
        hidden: d.hidden,
        outputs: d.outputs,
        probs: normalize_log_weights(&log_weights),
    })
}

/// `log P(y | x)`. Always `<= 0`.
pub fn conditional_log_likelihood(model: &EbmModel, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("output state", model.dims().outputs, y.len())?;
    check_binary("output state", y)?;
    let lw = model.output_log_weights(x)?;
    Ok(lw[state_index(y)] - log_sum_exp(&lw))
}

/// Mean of [`conditional_log_likelihood`] over examples.
pub fn mean_conditional_log_likelihood(model: &EbmModel, examples: &[Example<'_>]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for ex in examples {
        total += conditional_log_likelihood(model, ex.input, ex.target)?;
    }
    Ok(total / examples.len() as f64)
}

fn check_batch(model: &EbmModel, batch: &[Example<'_>]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let m = model.dims().outputs;
    for ex in batch {
        model.check_input(ex.input)?;
        check_len("output state", m, ex.target.len())?;
        check_binary("output state", ex.target)?;
    }
    Ok(())
}

/// Accumulates one weighted `(k-expectation, y)` pair into a gradient.
fn accumulate(grad: &mut GradientSet, weight: f64, x: &[f64], hidden: &[f64], y: &[f64]) {
    grad.w1.add_outer(weight, hidden, x);
    grad.w2.add_outer(weight, y, hidden);
    axpy(weight, hidden, &mut grad.hidden_bias);
    axpy(weight, y, &mut grad.output_bias);
}

/// Data-clamped expectations: `x_i σ(W1 x + W2ᵀ y + b)_j` for `W1`,
/// `σ(·)_i y_j` for `W2`, and the same with the clamped unit set to 1 for
/// the biases, averaged over the batch.
pub fn positive_phase(model: &EbmModel, batch: &[Example<'_>]) -> Result<GradientSet> {
    check_batch(model, batch)?;
    let mut grad = Params::zeros(model.dims());
    let w = 1.0 / batch.len() as f64;
    for ex in batch {
        let field = model.hidden_field(ex.input);
        let hidden = model.hidden_means(&field, ex.target);
        accumulate(&mut grad, w, ex.input, &hidden, ex.target);
    }
    Ok(grad)
}

/// How the model-side hidden expectation is estimated from samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NegativeEstimator {
    /// Keep only the sampled `y` and use `σ(W1 x + W2ᵀ ỹ + b)` for the hidden units.
    #[default]
    RecomputeHidden,
    /// Use the sampled `k̃` directly.
    SampledHidden,
}

/// Model expectations with only `x` clamped, estimated from `config.reads`
/// samples per example. Example `i` of the batch is sampled with seed
/// `derive_seed(config.seed, i)`.
pub fn negative_phase<S: Sampler + ?Sized>(
    model: &EbmModel,
    batch: &[Example<'_>],
    sampler: &S,
    config: &SamplerConfig,
    estimator: NegativeEstimator,
) -> Result<GradientSet> {
    check_batch(model, batch)?;
    config.validate()?;
    let d = model.dims();
    let mut grad = Params::zeros(d);
    let per_example = 1.0 / batch.len() as f64;

    for (i, ex) in batch.iter().enumerate() {
        let cfg = SamplerConfig {
            seed: derive_seed(config.seed, i as u64),
            ..*config
        };
        let samples = sampler.sample(model, ex.input, &cfg)?;
        let reads = samples.total_reads() as f64;
        match estimator {
            NegativeEstimator::RecomputeHidden => {
                let mut by_output: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
                for (state, count) in samples.iter() {
                    *by_output.entry(state[d.hidden..].to_vec()).or_default() += count;
                }
                let field = model.hidden_field(ex.input);
                for (y_bits, count) in by_output {
                    let y: Vec<f64> = y_bits.iter().map(|&b| b as f64).collect();
                    let hidden = model.hidden_means(&field, &y);
                    accumulate(&mut grad, per_example * count as f64 / reads, ex.input, &hidden, &y);
                }
            }
            NegativeEstimator::SampledHidden => {
                for (state, count) in samples.iter() {
                    let bits: Vec<f64> = state.iter().map(|&b| b as f64).collect();
                    let (k, y) = bits.split_at(d.hidden);
                    accumulate(&mut grad, per_example * count as f64 / reads, ex.input, k, y);
                }
            }
        }
    }
    Ok(grad)
}

/// The negative phase with `P(y | x)` summed exactly (no sampling).
pub fn exact_negative_phase(model: &EbmModel, batch: &[Example<'_>]) -> Result<GradientSet> {
    check_batch(model, batch)?;
    let d = model.dims();
    check_bound(d.outputs, DEFAULT_ENUMERATION_BOUND)?;
    let mut grad = Params::zeros(d);
    let per_example = 1.0 / batch.len() as f64;
    for ex in batch {
        let field = model.hidden_field(ex.input);
        let dist = normalize_log_weights(&model.output_log_weights_with_field(&field));
        for (idx, p) in dist.into_iter().enumerate() {
            let y = state_bits(idx as u64, d.outputs);
            let hidden = model.hidden_means(&field, &y);
            accumulate(&mut grad, per_example * p, ex.input, &hidden, &y);
        }
    }
    Ok(grad)
}

/// Sampled ascent direction: positive phase minus sampled negative phase.
pub fn grad_conditional_ll<S: Sampler + ?Sized>(
    model: &EbmModel,
    batch: &[Example<'_>],
    sampler: &S,
    config: &SamplerConfig,
    estimator: NegativeEstimator,
) -> Result<GradientSet> {
    let mut grad = positive_phase(model, batch)?;
    grad.axpy(-1.0, &negative_phase(model, batch, sampler, config, estimator)?)?;
    Ok(grad)
}

/// Exact ascent direction of the mean log conditional likelihood.
pub fn exact_grad_conditional_ll(model: &EbmModel, batch: &[Example<'_>]) -> Result<GradientSet> {
    let mut grad = positive_phase(model, batch)?;
    grad.axpy(-1.0, &exact_negative_phase(model, batch)?)?;
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rng::seeded;

    fn tiny(w1: f64, w2: f64, b: f64, c: f64) -> EbmModel {
        EbmModel::new(
            Params::new(
                Matrix::from_vec(1, 1, vec![w1]).unwrap(),
                Matrix::from_vec(1, 1, vec![w2]).unwrap(),
                vec![b],
                vec![c],
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn energy_of_zero_model_is_zero() {
        let m = EbmModel::zeros(Dims::new(3, 2, 1));
        assert_eq!(m.energy(&[0.2, 0.9, 1.0], &[1.0, 0.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn energy_single_unit_value() {
        // -(1·0.5·1 + 1·(-0.25)·1) = -0.25
        let m = tiny(0.5, -0.25, 0.0, 0.0);
        assert_eq!(m.energy(&[1.0], &[1.0], &[1.0]).unwrap(), -0.25);
    }

    #[test]
    fn energy_with_hidden_off_is_output_bias_term() {
        let mut m = EbmModel::init(Dims::new(4, 3, 2), Init::FanInUniform, &mut seeded(4));
        m.params.output_bias = vec![0.7, -1.1];
        let e = m.energy(&[0.1, 0.5, 0.0, 1.0], &[0.0; 3], &[1.0, 1.0]).unwrap();
        assert!((e - -(0.7 - 1.1)).abs() < 1e-15);
    }

    #[test]
    fn energy_rejects_bad_states() {
        let m = EbmModel::zeros(Dims::new(2, 2, 1));
        assert!(matches!(
            m.energy(&[0.0, 0.0], &[0.5, 0.0], &[1.0]),
            Err(Error::NonBinary { .. })
        ));
        assert!(matches!(
            m.energy(&[0.0], &[0.0, 0.0], &[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_model_conditional_is_uniform() {
        let m = EbmModel::zeros(Dims::new(2, 3, 2));
        let joint = exact_conditional(&m, &[0.3, 0.8]).unwrap();
        assert_eq!(joint.probs().len(), 32);
        for p in joint.probs() {
            assert!((p - 1.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn strong_output_bias_four_state_enumeration() {
        // c = 10: P(k, y) ∝ exp(10 y), independent of k.
        let m = tiny(0.0, 0.0, 0.0, 10.0);
        let joint = exact_conditional(&m, &[0.4]).unwrap();
        let e10 = 10f64.exp();
        let z = 2.0 + 2.0 * e10;
        for k in [0.0, 1.0] {
            assert!((joint.prob(&[k], &[1.0]) - e10 / z).abs() < 1e-15);
            assert!((joint.prob(&[k], &[0.0]) - 1.0 / z).abs() < 1e-15);
        }
        let marginal = joint.output_marginal();
        assert!((marginal[1] - e10 / (1.0 + e10)).abs() < 1e-15);
        assert!((marginal[1] - 0.99995).abs() < 1e-5);
        let ll = conditional_log_likelihood(&m, &[0.4], &[0.0]).unwrap();
        assert!((ll - (1.0 / (1.0 + e10)).ln()).abs() < 1e-12);
    }

    #[test]
    fn enumeration_bound_is_enforced() {
        let m = EbmModel::zeros(Dims::new(1, 20, 1));
        assert_eq!(
            exact_conditional(&m, &[0.0]).unwrap_err(),
            Error::EnumerationBound { vars: 21, bound: 20 }
        );
        assert!(exact_conditional_with_bound(&m, &[0.0], 4).is_err());
    }

    #[test]
    fn zero_model_log_likelihood_is_log_half() {
        let m = EbmModel::zeros(Dims::new(3, 4, 1));
        let ll = conditional_log_likelihood(&m, &[0.1, 0.2, 0.3], &[1.0]).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_model_phases_cancel() {
        let m = EbmModel::zeros(Dims::new(3, 2, 1));
        let (x, y) = ([0.2, 0.0, 1.0], [1.0]);
        let batch = [Example { input: &x, target: &y }];
        let pos = positive_phase(&m, &batch).unwrap();
        for j in 0..2 {
            for (i, xi) in x.iter().enumerate() {
                assert_eq!(pos.w1[(j, i)], 0.5 * xi);
            }
            assert_eq!(pos.w2[(0, j)], 0.5);
        }
        let neg = exact_negative_phase(&m, &batch).unwrap();
        assert_eq!(neg.w1, pos.w1);
        let g = exact_grad_conditional_ll(&m, &batch).unwrap();
        assert!(g.w1.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_batch_is_rejected() {
        let m = EbmModel::zeros(Dims::new(1, 1, 1));
        assert_eq!(positive_phase(&m, &[]).unwrap_err(), Error::EmptyBatch);
    }
}
