//! Samplers over the conditional `P(k, y | x)` and the BQM/Ising pipeline an
//! annealer consumes.
//!
//! Every sampler returns a [`SampleSet`] whose assignments are laid out as
//! the `K` hidden bits followed by the `M` output bits.

mod anneal;
mod bqm;
mod exact;
mod gibbs;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

pub use anneal::{geometric_schedule, metropolis_anneal, SimAnnealSampler};
pub use bqm::{
    bqm_to_ising, build_conditional_bqm, clamp_to_hardware, clamp_to_range, ising_to_bqm, Bqm, ClampReport, Clip,
    Coefficient, HardwareRange, IsingModel,
};
pub use exact::ExactSampler;
pub use gibbs::{output_transition_kernel, GibbsSampler};

use crate::ebm::{EbmModel, DEFAULT_ENUMERATION_BOUND};
use crate::error::{Error, Result};

/// Effective inverse temperature used when programming the annealer.
pub const DEFAULT_BETA_EFF: f64 = 16.0;
/// Samples drawn per clamped input.
pub const DEFAULT_READS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Scale applied to the BQM coefficients (`Q = -[..] / beta_eff`).
    pub beta_eff: f64,
    pub reads: usize,
    /// Gibbs sweeps discarded before the first read.
    pub burn_in: usize,
    /// Gibbs sweeps between consecutive reads.
    pub thin: usize,
    /// Metropolis sweeps per simulated-annealing read.
    pub anneal_sweeps: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            beta_eff: DEFAULT_BETA_EFF,
            reads: DEFAULT_READS,
            burn_in: 100,
            thin: 1,
            anneal_sweeps: 1000,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let problem = if !(self.beta_eff > 0.0 && self.beta_eff.is_finite()) {
            "beta_eff must be positive and finite"
        } else if self.reads == 0 {
            "reads must be at least 1"
        } else if self.thin == 0 {
            "thin must be at least 1"
        } else if self.anneal_sweeps == 0 {
            "anneal_sweeps must be at least 1"
        } else {
            return Ok(());
        };
        Err(Error::InvalidConfig(problem.into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleMeta {
    pub sampler: &'static str,
    /// Inverse temperature the samples were drawn at, in the units of the
    /// model the sampler saw (1 for samplers working on the EBM directly).
    pub beta: f64,
    pub seed: u64,
    /// Number of Ising coefficients altered by hardware clamping.
    pub clipped: usize,
}

/// Distinct assignments with occurrence counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    hidden: usize,
    outputs: usize,
    entries: Vec<(Vec<u8>, usize)>,
    total_reads: usize,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn from_reads<I>(hidden: usize, outputs: usize, reads: I, meta: SampleMeta) -> Self
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut total_reads = 0;
        for r in reads {
            debug_assert_eq!(r.len(), hidden + outputs);
            debug_assert!(r.iter().all(|&b| b <= 1));
            *counts.entry(r).or_default() += 1;
            total_reads += 1;
        }
        Self {
            hidden,
            outputs,
            entries: counts.into_iter().collect(),
            total_reads,
            meta,
        }
    }

    pub fn total_reads(&self) -> usize {
        self.total_reads
    }

    pub fn num_vars(&self) -> usize {
        self.hidden + self.outputs
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], usize)> {
        self.entries.iter().map(|(s, c)| (s.as_slice(), *c))
    }

    /// Empirical frequencies indexed like [`crate::ebm::JointConditional::probs`].
    pub fn empirical_distribution(&self) -> Result<Vec<f64>> {
        let n = self.num_vars();
        if n > DEFAULT_ENUMERATION_BOUND {
            return Err(Error::EnumerationBound {
                vars: n,
                bound: DEFAULT_ENUMERATION_BOUND,
            });
        }
        let mut dist = vec![0.0; 1 << n];
        for (state, count) in self.iter() {
            let idx = state
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &b)| acc | (b as usize) << i);
            dist[idx] += count as f64 / self.total_reads as f64;
        }
        Ok(dist)
    }
}

/// Draws assignments of `(k, y)` approximately from `P(k, y | x)`.
pub trait Sampler {
    fn name(&self) -> &'static str;

    fn sample(&self, model: &EbmModel, x: &[f64], config: &SamplerConfig) -> Result<SampleSet>;
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn sample(&self, model: &EbmModel, x: &[f64], config: &SamplerConfig) -> Result<SampleSet> {
        (**self).sample(model, x, config)
    }
}

/// The `n` low bits of `idx` as 0.0/1.0 values, least significant first.
pub fn state_bits(idx: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (idx >> i & 1) as f64).collect()
}

/// `½ Σ |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "total_variation: lengths differ");
    0.5 * p.iter().zip(q).map(|(a, b)| crate::float::abs(a - b)).sum::<f64>()
}
