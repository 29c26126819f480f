//! Classical stand-in for the quantum annealer: the conditional is compiled to
//! a BQM, converted to Ising form, clamped to the hardware ranges, and
//! sampled by single-spin Metropolis annealing.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::bqm::{bqm_to_ising, build_conditional_bqm, clamp_to_range, HardwareRange, IsingModel};
use super::{SampleMeta, SampleSet, Sampler, SamplerConfig};
use crate::ebm::EbmModel;
use crate::error::{Error, Result};
use crate::float::{exp, ln};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimAnnealSampler {
    /// Inverse temperature of the first sweep.
    pub beta_start: f64,
    /// Inverse temperature of the last sweep. Defaults to `beta_eff`, at
    /// which the Ising Boltzmann distribution equals the model conditional.
    pub beta_sim: Option<f64>,
    /// Coefficient ranges; `None` disables clamping.
    pub clamp: Option<HardwareRange>,
}

impl Default for SimAnnealSampler {
    fn default() -> Self {
        Self {
            beta_start: 0.1,
            beta_sim: None,
            clamp: Some(HardwareRange::default()),
        }
    }
}

impl SimAnnealSampler {
    /// Ising model actually sampled for input `x`, with the number of
    /// clipped coefficients.
    pub fn compile(&self, model: &EbmModel, x: &[f64], beta_eff: f64) -> Result<(IsingModel, usize)> {
        let ising = bqm_to_ising(&build_conditional_bqm(model, x, beta_eff)?);
        Ok(match self.clamp {
            Some(range) => {
                let (clamped, report) = clamp_to_range(&ising, range);
                (clamped, report.len())
            }
            None => (ising, 0),
        })
    }
}

impl Sampler for SimAnnealSampler {
    fn name(&self) -> &'static str {
        "simulated-annealing"
    }

    fn sample(&self, model: &EbmModel, x: &[f64], config: &SamplerConfig) -> Result<SampleSet> {
        config.validate()?;
        let beta_end = self.beta_sim.unwrap_or(config.beta_eff);
        if !(self.beta_start > 0.0 && beta_end >= self.beta_start && beta_end.is_finite()) {
            return Err(Error::InvalidConfig(
                "annealing schedule needs 0 < beta_start <= beta_sim".into(),
            ));
        }
        let (ising, clipped) = self.compile(model, x, config.beta_eff)?;
        let schedule = geometric_schedule(self.beta_start, beta_end, config.anneal_sweeps);
        let graph = Adjacency::new(&ising);
        let mut rng = seeded(config.seed);
        let reads: Vec<Vec<u8>> = (0..config.reads)
            .map(|_| {
                graph
                    .anneal(&ising.h, &schedule, &mut rng)
                    .into_iter()
                    .map(|s| u8::from(s > 0))
                    .collect()
            })
            .collect();
        let d = model.dims();
        let meta = SampleMeta {
            sampler: self.name(),
            beta: beta_end,
            seed: config.seed,
            clipped,
        };
        Ok(SampleSet::from_reads(d.hidden, d.outputs, reads, meta))
    }
}

/// `sweeps` inverse temperatures spaced geometrically from `start` to `end`.
pub fn geometric_schedule(start: f64, end: f64, sweeps: usize) -> Vec<f64> {
    match sweeps {
        0 => Vec::new(),
        1 => vec![end],
        n => {
            let ratio = ln(end / start) / (n - 1) as f64;
            (0..n).map(|i| start * exp(ratio * i as f64)).collect()
        }
    }
}

/// One annealing read: a uniformly random spin state, then one Metropolis
/// sweep over all spins per schedule entry.
pub fn metropolis_anneal<R: Rng + ?Sized>(ising: &IsingModel, schedule: &[f64], rng: &mut R) -> Vec<i8> {
    Adjacency::new(ising).anneal(&ising.h, schedule, rng)
}

/// Symmetric neighbour lists of the coupling graph.
struct Adjacency {
    start: Vec<usize>,
    neighbours: Vec<(usize, f64)>,
}

impl Adjacency {
    fn new(ising: &IsingModel) -> Self {
        let n = ising.num_spins();
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (a, b, v) in ising.edges() {
            lists[a].push((b, v));
            lists[b].push((a, v));
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut neighbours = Vec::new();
        for l in lists {
            start.push(neighbours.len());
            neighbours.extend(l);
        }
        start.push(neighbours.len());
        Self { start, neighbours }
    }

    fn of(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbours[self.start[i]..self.start[i + 1]]
    }

    fn anneal<R: Rng + ?Sized>(&self, h: &[f64], schedule: &[f64], rng: &mut R) -> Vec<i8> {
        let n = h.len();
        let mut s: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        // Local field f_i = h_i + Σ_j J_ij s_j; flipping s_i changes E by 2 s_i f_i.
        let mut field = h.to_vec();
        for (i, &si) in s.iter().enumerate() {
            for &(j, v) in self.of(i) {
                field[j] += v * si as f64;
            }
        }
        for &beta in schedule {
            for i in 0..n {
                let delta = 2.0 * s[i] as f64 * field[i];
                if delta <= 0.0 || rng.random::<f64>() < exp(-beta * delta) {
                    s[i] = -s[i];
                    let change = 2.0 * s[i] as f64;
                    for &(j, v) in self.of(i) {
                        field[j] += v * change;
                    }
                }
            }
        }
        s
    }
}
