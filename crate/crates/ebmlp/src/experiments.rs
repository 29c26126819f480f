//! The experiment tracks, per-trial summaries and the aggregate table row.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ebmlp_core::data::make_binary_task;
use ebmlp_core::equivalence::{run_equivalence_experiment, EquivalenceConfig, EquivalenceReport};
use ebmlp_core::rng::seeded;
use ebmlp_core::sampling::{bqm_to_ising, build_conditional_bqm, clamp_to_range, HardwareRange};
use ebmlp_core::train::{train_ebm_with_estimator, train_mlp};
use ebmlp_core::{Dataset, EbmModel, GibbsSampler, LabeledImages, MlpModel, Params, StepRecord, TrainingTrace};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Track};
use crate::error::{AppError, Result};
use crate::io;
use crate::report::{self, TraceRow};

/// Accuracy a trial must exceed to count as having reached 70%.
pub const THRESHOLD_70: f64 = 0.70;
/// Steps averaged by the success rule.
pub const SUCCESS_WINDOW: usize = 5;
pub const SUCCESS_MIN_ACCURACY: f64 = 0.65;
pub const SUCCESS_MIN_GAIN: f64 = 0.10;

/// First recorded step whose accuracy exceeds 0.70.
pub fn steps_to_70(records: &[StepRecord]) -> Option<usize> {
    records.iter().find(|r| r.test_accuracy > THRESHOLD_70).map(|r| r.step)
}

/// A trial succeeds when the mean accuracy over its last five steps is at
/// least 0.65 and at least 0.10 above the accuracy before training.
pub fn is_successful(accuracies: &[f64]) -> bool {
    let Some(&start) = accuracies.first() else {
        return false;
    };
    let tail = &accuracies[accuracies.len().saturating_sub(SUCCESS_WINDOW)..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    mean >= SUCCESS_MIN_ACCURACY && mean - start >= SUCCESS_MIN_GAIN
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    /// Test accuracy after the last step.
    pub final_accuracy: Option<f64>,
    /// `None` when 70% was never exceeded.
    pub steps_to_70: Option<usize>,
    pub success: bool,
    /// Set when the trial aborted; the run carries on with the next trial.
    pub error: Option<String>,
}

impl TrialSummary {
    pub fn from_trace(trial: usize, trace: &TrainingTrace) -> Self {
        Self::from_records(trial, trace.seed, &trace.records)
    }

    pub fn from_records(trial: usize, seed: u64, records: &[StepRecord]) -> Self {
        let acc: Vec<f64> = records.iter().map(|r| r.test_accuracy).collect();
        TrialSummary {
            trial,
            seed,
            final_accuracy: acc.last().copied(),
            steps_to_70: steps_to_70(records),
            success: is_successful(&acc),
            error: None,
        }
    }

    pub fn failed(trial: usize, seed: u64, error: String) -> Self {
        TrialSummary {
            trial,
            seed,
            final_accuracy: None,
            steps_to_70: None,
            success: false,
            error: Some(error),
        }
    }
}

/// One row of the accuracy / steps-to-70% / success-rate tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub trials: usize,
    pub successful: usize,
    /// Mean final accuracy over successful trials; `None` without any.
    pub mean_accuracy: Option<f64>,
    /// Median steps-to-70% over successful trials that reached it.
    pub median_steps_to_70: Option<f64>,
    pub success_rate_percent: f64,
}

pub fn summarize(trials: &[TrialSummary]) -> SummaryRow {
    let ok: Vec<&TrialSummary> = trials.iter().filter(|t| t.success).collect();
    let accs: Vec<f64> = ok.iter().filter_map(|t| t.final_accuracy).collect();
    let mut steps: Vec<usize> = ok.iter().filter_map(|t| t.steps_to_70).collect();
    steps.sort_unstable();
    let median = match steps.len() {
        0 => None,
        n if n % 2 == 1 => Some(steps[n / 2] as f64),
        n => Some((steps[n / 2 - 1] + steps[n / 2]) as f64 / 2.0),
    };
    SummaryRow {
        trials: trials.len(),
        successful: ok.len(),
        mean_accuracy: (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64),
        median_steps_to_70: median,
        success_rate_percent: if trials.is_empty() {
            0.0
        } else {
            100.0 * ok.len() as f64 / trials.len() as f64
        },
    }
}

/// Both MNIST splits, loaded once per run.
pub struct Splits {
    pub train: LabeledImages,
    pub test: LabeledImages,
}

impl Splits {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let dir = config.mnist_dir.clone().unwrap_or_else(io::default_mnist_dir);
        let pick = |explicit: &Option<PathBuf>, stem| match explicit {
            Some(p) => Ok(p.clone()),
            None => io::find_idx(&dir, stem),
        };
        Ok(Self {
            train: io::load_split(
                &pick(&config.train_images, io::TRAIN_IMAGES)?,
                &pick(&config.train_labels, io::TRAIN_LABELS)?,
            )?,
            test: io::load_split(
                &pick(&config.test_images, io::TEST_IMAGES)?,
                &pick(&config.test_labels, io::TEST_LABELS)?,
            )?,
        })
    }

    /// The balanced training set and full two-class test set for one seed.
    pub fn task(&self, config: &RunConfig, seed: u64) -> Result<(Dataset, Dataset)> {
        let (train, test) = make_binary_task(
            &self.train,
            &self.test,
            config.class_a,
            config.class_b,
            config.train_count,
            seed,
        )?;
        if train.input_len() != Some(config.inputs) {
            return Err(AppError::Config(format!(
                "inputs = {} but the images have {} pixels",
                config.inputs,
                train.input_len().unwrap_or(0)
            )));
        }
        Ok((train, test))
    }
}

/// Trains one trial of a training track.
pub fn run_trial(config: &RunConfig, seed: u64, train: &Dataset, test: &Dataset) -> Result<TrainingTrace> {
    let params = Params::init(config.dims(), config.init(), &mut seeded(seed));
    let tc = config.train_config(seed);
    let sc = config.sampler_config();
    let est = config.estimator();
    let trace = match config.track {
        Track::Classical1 => train_mlp(MlpModel::from(params), train, test, &tc)?,
        Track::Classical2 => train_ebm_with_estimator(EbmModel::from(params), train, test, GibbsSampler, sc, est, &tc)?,
        Track::QuantumSim => {
            train_ebm_with_estimator(EbmModel::from(params), train, test, config.annealer(), sc, est, &tc)?
        }
        Track::Equivalence | Track::Bench => {
            return Err(AppError::Config(format!("`{}` is not a training track", config.track)))
        }
    };
    Ok(trace)
}

#[derive(Clone, Debug)]
pub struct TrackOutcome {
    pub traces: Vec<Option<TrainingTrace>>,
    pub trials: Vec<TrialSummary>,
    pub summary: SummaryRow,
}

/// Runs every trial of a training track. Trial `i` uses seed `seed + i` for
/// its data selection, initialization, batch order and sampling. A trial
/// that fails is recorded as such and the remaining trials still run.
pub fn run_track(config: &RunConfig, splits: &Splits) -> Result<TrackOutcome> {
    if !matches!(config.track, Track::Classical1 | Track::Classical2 | Track::QuantumSim) {
        return Err(AppError::Config(format!("`{}` is not a training track", config.track)));
    }
    let mut traces = Vec::with_capacity(config.trials);
    let mut trials = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let seed = config.trial_seed(trial);
        let (train, test) = splits.task(config, seed)?;
        match run_trial(config, seed, &train, &test) {
            Ok(trace) => {
                trials.push(TrialSummary::from_trace(trial, &trace));
                traces.push(Some(trace));
            }
            Err(e) => {
                trials.push(TrialSummary::failed(trial, seed, e.to_string()));
                traces.push(None);
            }
        }
    }
    let summary = summarize(&trials);
    Ok(TrackOutcome {
        traces,
        trials,
        summary,
    })
}

/// Writes `trace_<trial>.csv`, `model_<trial>.bin` and `summary.json`, plus
/// `bqm_dump.txt` when requested.
pub fn write_track_outputs(config: &RunConfig, splits: &Splits, outcome: &TrackOutcome) -> Result<()> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    for (trial, trace) in outcome.traces.iter().enumerate() {
        let Some(trace) = trace else { continue };
        let rows: Vec<TraceRow> = trace
            .records
            .iter()
            .map(|r| TraceRow::from_step(r, trace.seed, None))
            .collect();
        report::write_trace(&dir.join(format!("trace_{trial}.csv")), &rows)?;
        io::write_model(&dir.join(format!("model_{trial}.bin")), &trace.final_params)?;
    }
    report::write_summary(&dir.join("summary.json"), config, &outcome.trials, &outcome.summary)?;
    if config.dump_bqm {
        if let Some((trial, trace)) = outcome
            .traces
            .iter()
            .enumerate()
            .find_map(|(i, t)| t.as_ref().map(|t| (i, t)))
        {
            let (_, test) = splits.task(config, config.trial_seed(trial))?;
            let text = bqm_dump(config, &trace.final_params, test.input(0))?;
            let path = dir.join("bqm_dump.txt");
            fs::write(&path, text).map_err(|e| AppError::io(&path, e))?;
        }
    }
    Ok(())
}

/// The BQM, its Ising form and the clamped Ising model that the annealer
/// would be programmed with for input `x`.
pub fn bqm_dump(config: &RunConfig, params: &Params, x: &[f64]) -> Result<String> {
    let model = EbmModel::new(params.clone())?;
    let bqm = build_conditional_bqm(&model, x, config.beta_eff)?;
    let ising = bqm_to_ising(&bqm);
    let (clamped, report) = clamp_to_range(&ising, HardwareRange::default());
    let mut out = String::new();
    let _ = writeln!(out, "# bqm beta_eff={}", config.beta_eff);
    out.push_str(&bqm.to_text());
    out.push_str("# ising\n");
    out.push_str(&ising.to_text());
    let _ = writeln!(
        out,
        "# clamped ising: {} coefficients clipped, largest change {:e}",
        report.len(),
        report.max_magnitude()
    );
    out.push_str(&clamped.to_text());
    Ok(out)
}

/// Lockstep MLP/EBM run on `train_count` images selected with `seed`.
pub fn run_equivalence(config: &RunConfig, splits: &Splits) -> Result<EquivalenceReport> {
    let (train, test) = splits.task(config, config.seed)?;
    let eq = EquivalenceConfig {
        dims: config.dims(),
        init: config.init(),
        train: config.train_config(config.seed),
        sampler: config.sampler_config(),
    };
    Ok(run_equivalence_experiment(&train, &test, &eq)?)
}

/// Writes `equivalence.csv`, `equivalence.json` and `trace_0.csv` (MLP
/// metrics with the KL column filled).
pub fn write_equivalence_outputs(config: &RunConfig, report: &EquivalenceReport) -> Result<()> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let csv_path = dir.join("equivalence.csv");
    fs::write(&csv_path, report.to_csv()).map_err(|e| AppError::io(&csv_path, e))?;
    report::write_equivalence_json(&dir.join("equivalence.json"), config, report)?;
    let rows: Vec<TraceRow> = report
        .records
        .iter()
        .map(|r| TraceRow {
            step: r.step,
            train_loss: r.mlp_loss,
            ebm_loglik_estimate: r.ebm_loglik,
            test_accuracy: r.mlp_accuracy,
            kl_nats: Some(r.kl_nats),
            seed: report.seed,
        })
        .collect();
    report::write_trace(&dir.join("trace_0.csv"), &rows)
}

/// Rebuilds trial summaries from the `trace_<trial>.csv` files in `dir`.
pub fn summarize_dir(dir: &Path) -> Result<(Vec<TrialSummary>, SummaryRow)> {
    let entries = fs::read_dir(dir).map_err(|e| AppError::io(dir, e))?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| AppError::io(dir, e))?.path();
        let trial = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("trace_")?.strip_suffix(".csv")?.parse().ok());
        if let Some(trial) = trial {
            found.push((trial, path));
        }
    }
    if found.is_empty() {
        return Err(AppError::Config(format!(
            "no trace_<trial>.csv files in {}",
            dir.display()
        )));
    }
    found.sort();
    let mut trials = Vec::with_capacity(found.len());
    for (trial, path) in found {
        let rows = report::read_trace(&path)?;
        let seed = rows.first().map_or(0, |r| r.seed);
        let records: Vec<StepRecord> = rows.iter().map(TraceRow::to_step).collect();
        trials.push(TrialSummary::from_records(trial, seed, &records));
    }
    let row = summarize(&trials);
    Ok((trials, row))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(acc: Option<f64>, steps: Option<usize>, success: bool) -> TrialSummary {
        TrialSummary {
            trial: 0,
            seed: 0,
            final_accuracy: acc,
            steps_to_70: steps,
            success,
            error: None,
        }
    }

    #[test]
    fn success_rule() {
        assert!(is_successful(&[0.5, 0.6, 0.9, 0.9, 0.9, 0.9, 0.9]));
        // High but flat: no gain over the start.
        assert!(!is_successful(&[0.9, 0.9, 0.9, 0.9, 0.9, 0.9]));
        // Gained, but the tail mean is below 0.65.
        assert!(!is_successful(&[0.3, 0.6, 0.6, 0.6, 0.6, 0.6]));
        assert!(!is_successful(&[]));
    }

    #[test]
    fn steps_to_70_is_strictly_above_threshold() {
        let rec = |step, test_accuracy| StepRecord {
            step,
            train_loss: 0.0,
            ebm_loglik: 0.0,
            test_accuracy,
            max_abs_weight: 0.0,
        };
        assert_eq!(steps_to_70(&[rec(0, 0.5), rec(1, 0.70), rec(2, 0.71)]), Some(2));
        assert_eq!(steps_to_70(&[rec(0, 0.5)]), None);
    }

    #[test]
    fn all_successful_row() {
        let row = summarize(&[summary(Some(1.0), Some(3), true), summary(Some(1.0), Some(5), true)]);
        assert_eq!(row.mean_accuracy, Some(1.0));
        assert_eq!(row.median_steps_to_70, Some(4.0));
        assert_eq!(row.success_rate_percent, 100.0);
    }

    #[test]
    fn no_successful_trials_leaves_accuracy_empty() {
        let row = summarize(&[summary(Some(0.5), None, false)]);
        assert_eq!(row.mean_accuracy, None);
        assert_eq!(row.success_rate_percent, 0.0);
    }
}
