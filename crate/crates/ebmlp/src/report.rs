//! CSV and JSON output files.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ebmlp_core::{EquivalenceReport, StepRecord};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::experiments::{SummaryRow, TrialSummary};

/// Bumped whenever a field in `summary.json` or `equivalence.json` changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// One line of `trace_<trial>.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub train_loss: f64,
    pub ebm_loglik_estimate: f64,
    pub test_accuracy: f64,
    /// Only filled by the equivalence track.
    pub kl_nats: Option<f64>,
    pub seed: u64,
}

impl TraceRow {
    pub fn from_step(r: &StepRecord, seed: u64, kl_nats: Option<f64>) -> Self {
        TraceRow {
            step: r.step,
            train_loss: r.train_loss,
            ebm_loglik_estimate: r.ebm_loglik,
            test_accuracy: r.test_accuracy,
            kl_nats,
            seed,
        }
    }

    pub fn to_step(&self) -> StepRecord {
        StepRecord {
            step: self.step,
            train_loss: self.train_loss,
            ebm_loglik: self.ebm_loglik_estimate,
            test_accuracy: self.test_accuracy,
            max_abs_weight: f64::NAN,
        }
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(AppError::from)).collect()
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

pub fn write_summary(path: &Path, config: &RunConfig, trials: &[TrialSummary], row: &SummaryRow) -> Result<()> {
    write_json(
        path,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "track": config.track.as_str(),
            "config": config,
            "trials": trials,
            "summary": row,
        }),
    )
}

pub fn write_equivalence_json(path: &Path, config: &RunConfig, report: &EquivalenceReport) -> Result<()> {
    let records: Vec<_> = report
        .records
        .iter()
        .map(|r| {
            json!({
                "step": r.step,
                "mlp_loss": r.mlp_loss,
                "mlp_loss_inherited": r.mlp_loss_inherited,
                "ebm_loglik": r.ebm_loglik,
                "ebm_loglik_inherited": r.ebm_loglik_inherited,
                "mlp_accuracy": r.mlp_accuracy,
                "mlp_accuracy_inherited": r.mlp_accuracy_inherited,
                "ebm_accuracy": r.ebm_accuracy,
                "ebm_accuracy_inherited": r.ebm_accuracy_inherited,
                "kl_nats": r.kl_nats,
            })
        })
        .collect();
    write_json(
        path,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "track": "equivalence",
            "seed": report.seed,
            "config": config,
            "records": records,
        }),
    )
}
