//! Report documents: one JSON file per run plus a flat CSV for plotting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AlgorithmResult, GridResult, SynthTrial};
use crate::data::SplitManifest;
use crate::error::{Error, Result};
use crate::eval::{Metric, MetricReport, MetricSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub dataset: String,
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub manifests: Vec<SplitManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub dataset: String,
    pub seed: u64,
    pub grid: GridResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleResult {
    pub resample: usize,
    pub train_ratings: usize,
    pub val_ratings: usize,
    pub test_ratings: usize,
    pub dropped_users: usize,
    pub grid: GridResult,
    pub test: Vec<AlgorithmResult>,
}

/// Across-resample mean and std of one algorithm's test metric. `beta` and
/// `k` are set only when every resample selected the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub beta: Option<usize>,
    pub k: Option<usize>,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub dataset: String,
    pub seed: u64,
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub metric_k: usize,
    pub relevance_threshold: f64,
    pub ndcg_gain: String,
    pub resamples: Vec<ResampleResult>,
    pub aggregate: Vec<AggregateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub n_users: usize,
    pub p: f64,
    pub beta: Option<usize>,
    pub k: Option<usize>,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub mean_dis: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub seed: u64,
    pub n_items: usize,
    /// Sorted by `(n_users, seed order)`.
    pub trials: Vec<SynthTrial>,
    pub summary: Vec<SynthSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub metrics: MetricSummary,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Report {
    SynthConsistency(SynthReport),
    RealPipeline(PipelineReport),
    GridSearch(GridReport),
    Eval(EvalReport),
    Split(SplitReport),
}

/// One line of the flat CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub dataset: String,
    pub algorithm: String,
    pub beta: Option<usize>,
    pub k: Option<usize>,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
}

impl Report {
    fn stem(&self) -> &'static str {
        match self {
            Report::SynthConsistency(_) => "synth",
            Report::RealPipeline(_) => "pipeline",
            Report::GridSearch(_) => "grid",
            Report::Eval(_) => "eval",
            Report::Split(_) => "split",
        }
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        match self {
            Report::SynthConsistency(r) => r
                .summary
                .iter()
                .map(|s| CsvRow {
                    dataset: format!("synthetic_n1_{}_n2_{}", r.n_items, s.n_users),
                    algorithm: "MR".into(),
                    beta: s.beta,
                    k: s.k,
                    metric: "dis_2eps_rate".into(),
                    mean: s.mean_rate,
                    std: s.std_rate,
                    seed: r.seed,
                })
                .collect(),
            Report::RealPipeline(r) => r
                .aggregate
                .iter()
                .map(|a| CsvRow {
                    dataset: r.dataset.clone(),
                    algorithm: a.algorithm.clone(),
                    beta: a.beta,
                    k: a.k,
                    metric: a.metric.name().into(),
                    mean: a.mean,
                    std: a.std,
                    seed: r.seed,
                })
                .collect(),
            Report::GridSearch(r) => r
                .grid
                .rows
                .iter()
                .map(|g| CsvRow {
                    dataset: r.dataset.clone(),
                    algorithm: g.algorithm().into(),
                    beta: Some(g.beta),
                    k: Some(g.k),
                    metric: format!("val_{}", r.grid.selection.name()),
                    mean: g.score,
                    std: g.score_std,
                    seed: r.seed,
                })
                .collect(),
            Report::Eval(r) => Metric::ALL
                .iter()
                .map(|&m| CsvRow {
                    dataset: "eval".into(),
                    algorithm: "input".into(),
                    beta: None,
                    k: None,
                    metric: m.name().into(),
                    mean: r.metrics.get(m)[0],
                    std: r.metrics.get(m)[1],
                    seed: r.seed,
                })
                .collect(),
            Report::Split(_) => Vec::new(),
        }
    }

    /// Writes `<stem>.json` and, when there are rows, `<stem>.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{}.json", self.stem()));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        let mut written = vec![json];
        let rows = self.csv_rows();
        if !rows.is_empty() {
            let csv_path = dir.join(format!("{}.csv", self.stem()));
            let mut w = csv::Writer::from_path(&csv_path)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(|e| Error::io(&csv_path, e))?;
            written.push(csv_path);
        }
        Ok(written)
    }
}
