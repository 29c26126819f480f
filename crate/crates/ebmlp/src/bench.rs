//! Runtime scaling of one MLP output-layer product against one Gibbs sweep.
//!
//! Both are timed on a network with a single hidden unit and `size` output
//! units, so the work grows linearly in `size` for either method.

use std::hint::black_box;
use std::time::Instant;

use ebmlp_core::rng::seeded;
use ebmlp_core::{Dims, EbmModel, GibbsSampler, Init, MlpModel, Params, Sampler, SamplerConfig};
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: &'static str,
    pub size: usize,
    /// Median over the repeats of the per-call wall time.
    pub median_seconds: f64,
}

/// Calls per timed repeat, so that small sizes still take measurable time.
fn calls_for(size: usize) -> usize {
    (200_000 / size.max(1)).clamp(1, 20_000)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn time_per_call(repeats: usize, calls: usize, mut f: impl FnMut()) -> f64 {
    f();
    let samples = (0..repeats.max(1))
        .map(|_| {
            let t = Instant::now();
            for _ in 0..calls {
                f();
            }
            t.elapsed().as_secs_f64() / calls as f64
        })
        .collect();
    median(samples)
}

pub fn bench_runtime(sizes: &[usize], repeats: usize) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(2 * sizes.len());
    for &size in sizes {
        let dims = Dims::new(1, 1, size);
        let params = Params::init(dims, Init::Gaussian { std: 0.1 }, &mut seeded(size as u64));
        let mlp = MlpModel::from(params.clone());
        let ebm = EbmModel::new(params)?;
        let x = [1.0];
        let calls = calls_for(size);

        let h = mlp.hidden_activations(&x);
        let w2 = &mlp.params.w2;
        let mlp_time = time_per_call(repeats, calls, || {
            black_box(w2.matvec(black_box(&h)));
        });
        rows.push(BenchRow {
            method: "mlp",
            size,
            median_seconds: mlp_time,
        });

        let mut config = SamplerConfig {
            reads: 1,
            burn_in: 0,
            ..SamplerConfig::default()
        };
        let mut err = None;
        let gibbs_time = time_per_call(repeats, calls, || {
            config.seed = config.seed.wrapping_add(1);
            if let Err(e) = GibbsSampler.sample(&ebm, black_box(&x), &config) {
                err = Some(e);
            }
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        rows.push(BenchRow {
            method: "gibbs",
            size,
            median_seconds: gibbs_time,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = bench_runtime(&[2, 4], 3).unwrap();
        let text = to_csv(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,size,median_seconds");
        assert_eq!(lines.len(), 5);
    }
}
