//! The parameter container shared by the energy-based and feedforward views.
//!
//! Both models are a one-hidden-layer network with input-to-hidden weights
//! (`hidden × inputs`), hidden-to-output weights (`outputs × hidden`), a
//! hidden bias and an output bias. Gradients use the same layout.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{check_len, Error, Result};
use crate::float::sqrt;
use crate::linalg::{self, Matrix};

/// Layer widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl Dims {
    pub const fn new(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs,
        }
    }

    /// Number of binary variables sampled in the conditional distribution.
    pub const fn sampled_vars(&self) -> usize {
        self.hidden + self.outputs
    }
}

/// Weight initialization schemes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Zero-mean Gaussian weights, zero biases.
    Gaussian { std: f64 },
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases of each layer.
    FanInUniform,
}

impl Default for Init {
    fn default() -> Self {
        Init::Gaussian { std: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub w1: Matrix,
    pub w2: Matrix,
    pub hidden_bias: Vec<f64>,
    pub output_bias: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type GradientSet = Params;

impl Params {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            w1: Matrix::zeros(dims.hidden, dims.inputs),
            w2: Matrix::zeros(dims.outputs, dims.hidden),
            hidden_bias: vec![0.0; dims.hidden],
            output_bias: vec![0.0; dims.outputs],
        }
    }

    pub fn new(w1: Matrix, w2: Matrix, hidden_bias: Vec<f64>, output_bias: Vec<f64>) -> Result<Self> {
        let p = Self {
            w1,
            w2,
            hidden_bias,
            output_bias,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn init<R: Rng + ?Sized>(dims: Dims, init: Init, rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        match init {
            Init::Gaussian { std } => {
                let normal = Normal::new(0.0, std).expect("standard deviation must be finite and >= 0");
                for w in p.w1.as_mut_slice().iter_mut().chain(p.w2.as_mut_slice()) {
                    *w = normal.sample(rng);
                }
            }
            Init::FanInUniform => {
                fill_uniform(p.w1.as_mut_slice(), dims.inputs, rng);
                fill_uniform(&mut p.hidden_bias, dims.inputs, rng);
                fill_uniform(p.w2.as_mut_slice(), dims.hidden, rng);
                fill_uniform(&mut p.output_bias, dims.hidden, rng);
            }
        }
        p
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.w1.cols(), self.w1.rows(), self.w2.rows())
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        check_len("hidden-to-output columns", d.hidden, self.w2.cols())?;
        check_len("hidden bias", d.hidden, self.hidden_bias.len())?;
        check_len("output bias", d.outputs, self.output_bias.len())?;
        if !self.is_finite() {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(())
    }

    pub fn check_dims(&self, dims: Dims) -> Result<()> {
        let own = self.dims();
        check_len("inputs", dims.inputs, own.inputs)?;
        check_len("hidden units", dims.hidden, own.hidden)?;
        check_len("outputs", dims.outputs, own.outputs)
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|g| g.iter().all(|v| v.is_finite()))
    }

    pub fn groups(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice(),
            self.w2.as_slice(),
            &self.hidden_bias,
            &self.output_bias,
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            self.w2.as_mut_slice(),
            &mut self.hidden_bias,
            &mut self.output_bias,
        ]
    }

    pub fn group_lens(&self) -> [usize; 4] {
        self.groups().map(<[f64]>::len)
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.group_lens().iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates over every scalar in group order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        let [a, b, c, d] = self.groups();
        a.iter().chain(b).chain(c).chain(d)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        let [a, b, c, d] = self.groups_mut();
        a.iter_mut().chain(b.iter_mut()).chain(c.iter_mut()).chain(d.iter_mut())
    }

    pub fn max_abs(&self) -> f64 {
        self.groups().iter().fold(0.0, |m, g| f64::max(m, linalg::max_abs(g)))
    }

    pub fn scale(&mut self, alpha: f64) {
        self.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &Params) -> Result<()> {
        other.check_dims(self.dims())?;
        for (dst, src) in self.groups_mut().into_iter().zip(other.groups()) {
            linalg::axpy(alpha, src, dst);
        }
        Ok(())
    }

    pub fn neg(&self) -> Params {
        let mut out = self.clone();
        out.scale(-1.0);
        out
    }

    /// Serializes to the flat binary container: the 8-byte magic, the three
    /// widths as little-endian `u32`, then every group as little-endian `f64`
    /// in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dims();
        let mut out = Vec::with_capacity(MODEL_MAGIC.len() + 12 + 8 * self.len());
        out.extend_from_slice(MODEL_MAGIC);
        for n in [d.inputs, d.hidden, d.outputs] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for v in self.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let rest = bytes.strip_prefix(MODEL_MAGIC).ok_or(Error::ModelBlob("bad magic"))?;
        if rest.len() < 12 {
            return Err(Error::ModelBlob("truncated header"));
        }
        let dim = |i: usize| u32::from_le_bytes(rest[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        let dims = Dims::new(dim(0), dim(1), dim(2));
        let mut p = Params::zeros(dims);
        let body = &rest[12..];
        if body.len() != 8 * p.len() {
            return Err(Error::ModelBlob("payload length does not match dimensions"));
        }
        for (v, chunk) in p.iter_mut().zip(body.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        p.validate()?;
        Ok(p)
    }
}

/// Leading bytes of a serialized parameter blob.
pub const MODEL_MAGIC: &[u8; 8] = b"EBMLP\x00\x01\x00";

fn fill_uniform<R: Rng + ?Sized>(dst: &mut [f64], fan_in: usize, rng: &mut R) {
    let bound = 1.0 / sqrt(fan_in.max(1) as f64);
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    dst.iter_mut().for_each(|v| *v = dist.sample(rng));
}
