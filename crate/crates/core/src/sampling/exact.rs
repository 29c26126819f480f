//! Reference sampler drawing i.i.d. reads from the enumerated conditional.

use alloc::vec::Vec;

use rand::Rng;

use super::{SampleMeta, SampleSet, Sampler, SamplerConfig};
use crate::ebm::{exact_conditional_with_bound, EbmModel, DEFAULT_ENUMERATION_BOUND};
use crate::error::Result;
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactSampler {
    /// Largest `K + M` accepted.
    pub bound: usize,
}

impl Default for ExactSampler {
    fn default() -> Self {
        Self {
            bound: DEFAULT_ENUMERATION_BOUND,
        }
    }
}

impl Sampler for ExactSampler {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn sample(&self, model: &EbmModel, x: &[f64], config: &SamplerConfig) -> Result<SampleSet> {
        config.validate()?;
        let joint = exact_conditional_with_bound(model, x, self.bound)?;
        let d = model.dims();
        let n = d.sampled_vars();

        let mut cumulative = Vec::with_capacity(joint.probs().len());
        let mut acc = 0.0;
        for p in joint.probs() {
            acc += p;
            cumulative.push(acc);
        }
        let last = cumulative.len() - 1;

        let mut rng = seeded(config.seed);
        let reads = (0..config.reads).map(|_| {
            let u = rng.random::<f64>() * acc;
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            (0..n).map(|i| (idx >> i & 1) as u8).collect::<Vec<u8>>()
        });
        let meta = SampleMeta {
            sampler: self.name(),
            beta: 1.0,
            seed: config.seed,
            clipped: 0,
        };
        Ok(SampleSet::from_reads(
            d.hidden,
            d.outputs,
            reads.collect::<Vec<_>>(),
            meta,
        ))
    }
}
