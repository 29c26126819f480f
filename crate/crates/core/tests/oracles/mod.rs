//! Reference computations written with plain loops, independent of the
//! library's vectorized code paths.

#![allow(dead_code, clippy::needless_range_loop)]

use ebmlp_core::{Example, Params};

pub fn sigma(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn bits(idx: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| ((idx >> i) & 1) as f64).collect()
}

/// `-(kᵀW1x + yᵀW2k + bᵀk + cᵀy)` by explicit summation.
pub fn energy(p: &Params, x: &[f64], k: &[f64], y: &[f64]) -> f64 {
    let d = p.dims();
    let mut s = 0.0;
    for j in 0..d.hidden {
        for i in 0..d.inputs {
            s += k[j] * p.w1[(j, i)] * x[i];
        }
        s += p.hidden_bias[j] * k[j];
    }
    for l in 0..d.outputs {
        for j in 0..d.hidden {
            s += y[l] * p.w2[(l, j)] * k[j];
        }
        s += p.output_bias[l] * y[l];
    }
    -s
}

/// `P(k, y | x)` over every joint state by brute force. State index: bits
/// `0..K` are `k`, bits `K..K+M` are `y`.
pub fn joint(p: &Params, x: &[f64]) -> Vec<f64> {
    let d = p.dims();
    let n = d.hidden + d.outputs;
    let w: Vec<f64> = (0..1usize << n)
        .map(|idx| {
            let b = bits(idx, n);
            (-energy(p, x, &b[..d.hidden], &b[d.hidden..])).exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// `log P(y | x)` summing the brute-force joint over `k`.
pub fn log_conditional(p: &Params, x: &[f64], y: &[f64]) -> f64 {
    let d = p.dims();
    let yi = y.iter().enumerate().fold(0usize, |a, (l, &v)| a | ((v as usize) << l));
    let j = joint(p, x);
    let num: f64 = (0..1usize << d.hidden).map(|k| j[k | (yi << d.hidden)]).sum();
    num.ln()
}

pub fn mean_log_conditional(p: &Params, batch: &[Example<'_>]) -> f64 {
    batch.iter().map(|e| log_conditional(p, e.input, e.target)).sum::<f64>() / batch.len() as f64
}

pub fn mlp_forward(p: &Params, x: &[f64]) -> Vec<f64> {
    let d = p.dims();
    let h: Vec<f64> = (0..d.hidden)
        .map(|j| sigma((0..d.inputs).map(|i| p.w1[(j, i)] * x[i]).sum::<f64>() + p.hidden_bias[j]))
        .collect();
    (0..d.outputs)
        .map(|l| sigma((0..d.hidden).map(|j| p.w2[(l, j)] * h[j]).sum::<f64>() + p.output_bias[l]))
        .collect()
}

pub fn mean_cross_entropy(p: &Params, batch: &[Example<'_>]) -> f64 {
    let mut total = 0.0;
    for e in batch {
        for (z, y) in mlp_forward(p, e.input).iter().zip(e.target) {
            total -= y * z.ln() + (1.0 - y) * (1.0 - z).ln();
        }
    }
    total / batch.len() as f64
}

/// Central differences of `f` with respect to every scalar of `p`, in
/// [`Params::iter`] order.
pub fn finite_difference(p: &Params, h: f64, f: impl Fn(&Params) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut q = p.clone();
    for idx in 0..p.len() {
        let orig = *q.iter().nth(idx).unwrap();
        *q.iter_mut().nth(idx).unwrap() = orig + h;
        let up = f(&q);
        *q.iter_mut().nth(idx).unwrap() = orig - h;
        let down = f(&q);
        *q.iter_mut().nth(idx).unwrap() = orig;
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// `max_i |a_i - b_i| / max_i |b_i|`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    num / den.max(f64::MIN_POSITIVE)
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
