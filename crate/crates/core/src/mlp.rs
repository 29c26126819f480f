//! The feedforward reading of the shared parameters:
//! `z = σ(W2 σ(W1 x + b) + c)` with sigmoid cross-entropy loss.

use alloc::vec::Vec;

use rand::Rng;

use crate::activation::sigmoid_in_place;
use crate::data::{Dataset, Example};
use crate::error::{check_binary, check_len, Error, Result};
use crate::float::ln;
use crate::linalg::axpy;
use crate::params::{Dims, GradientSet, Init, Params};

/// Predictions are clamped to `[LOSS_CLAMP, 1 - LOSS_CLAMP]` inside the loss.
pub const LOSS_CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub params: Params,
}

impl MlpModel {
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

    /// `σ(W1 x + b)`.
    pub fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        let mut h = self.params.w1.matvec(x);
        axpy(1.0, &self.params.hidden_bias, &mut h);
        sigmoid_in_place(&mut h);
        h
    }

    fn output_from_hidden(&self, h: &[f64]) -> Vec<f64> {
        let mut z = self.params.w2.matvec(h);
        axpy(1.0, &self.params.output_bias, &mut z);
        sigmoid_in_place(&mut z);
        z
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("input vector", self.dims().inputs, x.len())?;
        Ok(self.output_from_hidden(&self.hidden_activations(x)))
    }

    /// Thresholds each output at 0.5; exactly 0.5 maps to 0.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .forward(x)?
            .into_iter()
            .map(|z| if z > 0.5 { 1.0 } else { 0.0 })
            .collect())
    }
}

impl From<Params> for MlpModel {
    fn from(params: Params) -> Self {
        Self { params }
    }
}

/// `-Σ_j [y_j ln z_j + (1 - y_j) ln(1 - z_j)]`.
pub fn cross_entropy(y: &[f64], z: &[f64]) -> Result<f64> {
    check_len("prediction vector", y.len(), z.len())?;
    check_binary("target", y)?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction vector"));
    }
    Ok(y.iter()
        .zip(z)
        .map(|(&t, &p)| {
            let p = p.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
            -(t * ln(p) + (1.0 - t) * ln(1.0 - p))
        })
        .sum())
}

/// Batch-mean cross-entropy.
pub fn mean_loss(model: &MlpModel, examples: &[Example<'_>]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for ex in examples {
        total += cross_entropy(ex.target, &model.forward(ex.input)?)?;
    }
    Ok(total / examples.len() as f64)
}

/// Gradient of [`mean_loss`] (descent direction).
pub fn grad_backprop(model: &MlpModel, batch: &[Example<'_>]) -> Result<GradientSet> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let d = model.dims();
    let mut grad = Params::zeros(d);
    let w = 1.0 / batch.len() as f64;
    for ex in batch {
        check_len("input vector", d.inputs, ex.input.len())?;
        check_len("target", d.outputs, ex.target.len())?;
        check_binary("target", ex.target)?;
        let h = model.hidden_activations(ex.input);
        let z = model.output_from_hidden(&h);
        let err: Vec<f64> = z.iter().zip(ex.target).map(|(z, y)| z - y).collect();
        let mut back = model.params.w2.matvec_transposed(&err);
        for (b, hj) in back.iter_mut().zip(&h) {
            *b *= hj * (1.0 - hj);
        }
        grad.w2.add_outer(w, &err, &h);
        axpy(w, &err, &mut grad.output_bias);
        grad.w1.add_outer(w, &back, ex.input);
        axpy(w, &back, &mut grad.hidden_bias);
    }
    Ok(grad)
}

/// Exact-match fraction of thresholded predictions.
pub fn accuracy(model: &MlpModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut hits = 0usize;
    for i in 0..data.len() {
        if model.predict(data.input(i))? == data.target(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}
