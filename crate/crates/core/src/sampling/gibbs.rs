//! Block Gibbs sampling: all hidden units given the outputs, then all outputs
//! given the hidden units.

use alloc::vec::Vec;

use rand::Rng;

use super::{state_bits, SampleMeta, SampleSet, Sampler, SamplerConfig};
use crate::ebm::{EbmModel, DEFAULT_ENUMERATION_BOUND};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{seeded, StdRng};

/// One chain per call, started from a uniformly random state. After
/// `burn_in` sweeps a read is taken every `thin` sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GibbsSampler;

fn draw(means: &[f64], rng: &mut StdRng, out: &mut [f64]) {
    for (o, &p) in out.iter_mut().zip(means) {
        *o = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
    }
}

impl Sampler for GibbsSampler {
    fn name(&self) -> &'static str {
        "gibbs"
    }

    fn sample(&self, model: &EbmModel, x: &[f64], config: &SamplerConfig) -> Result<SampleSet> {
        config.validate()?;
        model.check_input(x)?;
        let d = model.dims();
        let mut rng = seeded(config.seed);
        let field = model.hidden_field(x);

        let mut coin = |n: usize| -> Vec<f64> { (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect() };
        let mut k = coin(d.hidden);
        let mut y = coin(d.outputs);

        let sweep = |k: &mut Vec<f64>, y: &mut Vec<f64>, rng: &mut StdRng| {
            draw(&model.hidden_means(&field, y), rng, k);
            draw(&model.output_means(k), rng, y);
        };
        for _ in 0..config.burn_in {
            sweep(&mut k, &mut y, &mut rng);
        }
        let mut reads = Vec::with_capacity(config.reads);
        for _ in 0..config.reads {
            for _ in 0..config.thin {
                sweep(&mut k, &mut y, &mut rng);
            }
            reads.push(k.iter().chain(&y).map(|&b| b as u8).collect::<Vec<u8>>());
        }
        let meta = SampleMeta {
            sampler: self.name(),
            beta: 1.0,
            seed: config.seed,
            clipped: 0,
        };
        Ok(SampleSet::from_reads(d.hidden, d.outputs, reads, meta))
    }
}

/// Transition matrix of the output marginal chain,
/// `T[y, y'] = Σ_k P(k | x, y) P(y' | x, k)`, rows and columns indexed by
/// output state (bit `l` is `y_l`). Its stationary distribution is `P(y | x)`.
pub fn output_transition_kernel(model: &EbmModel, x: &[f64]) -> Result<Matrix> {
    model.check_input(x)?;
    let d = model.dims();
    if d.sampled_vars() > DEFAULT_ENUMERATION_BOUND {
        return Err(Error::EnumerationBound {
            vars: d.sampled_vars(),
            bound: DEFAULT_ENUMERATION_BOUND,
        });
    }
    let field = model.hidden_field(x);
    let ny = 1usize << d.outputs;
    let mut t = Matrix::zeros(ny, ny);
    for from in 0..ny {
        let y = state_bits(from as u64, d.outputs);
        let hidden_p = model.hidden_means(&field, &y);
        for kidx in 0..1u64 << d.hidden {
            let k = state_bits(kidx, d.hidden);
            let pk: f64 = hidden_p
                .iter()
                .zip(&k)
                .map(|(&p, &b)| if b == 1.0 { p } else { 1.0 - p })
                .product();
            let out_p = model.output_means(&k);
            for to in 0..ny {
                let py: f64 = out_p
                    .iter()
                    .enumerate()
                    .map(|(l, &p)| if to >> l & 1 == 1 { p } else { 1.0 - p })
                    .product();
                t[(from, to)] += pk * py;
            }
        }
    }
    Ok(t)
}
