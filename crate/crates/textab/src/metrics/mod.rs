//! Prediction scoring: EMA, BLEU-4, and WER over token sequences.
//!
//! Each metric lives behind the [`Metric`] trait and is created by name
//! through [`create_metric`], so the set of metrics to run is a runtime
//! decision (`--metrics ema,bleu,wer`). Metric atoms are the dataset's
//! tokens; nothing here re-tokenizes.

mod bleu;
mod ema;
mod wer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bleu::{corpus_bleu, Smoothing, MAX_ORDER};
pub use ema::ema;
pub use wer::{edit_distance, wer};

/// One prediction aligned with its ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredPair {
    pub sample_id: String,
    pub pred: Vec<String>,
    pub gt: Vec<String>,
}

/// Per-sample breakdown kept alongside the corpus scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerSample {
    pub sample_id: String,
    pub exact_match: bool,
    pub wer: f64,
}

/// Corpus-level report. Only the requested metrics are filled in.
///
/// The corpus `wer` is total edit distance over total ground-truth length
/// (not the mean of per-sample rates), so long samples weigh more.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ema: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wer: Option<f64>,
    pub per_sample: Vec<PerSample>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("samples: {}\n", self.per_sample.len()));
        if let Some(v) = self.ema {
            out.push_str(&format!("EMA:    {v:.4}\n"));
        }
        if let Some(v) = self.bleu4 {
            out.push_str(&format!("BLEU-4: {v:.2}\n"));
        }
        if let Some(v) = self.wer {
            out.push_str(&format!("WER:    {v:.4}\n"));
        }
        out
    }
}

/// Options threaded through metric construction; today only BLEU has one.
#[derive(Debug, Clone, Default)]
pub struct MetricOptions {
    pub bleu_smoothing: Smoothing,
}

/// A corpus-level metric over aligned prediction/ground-truth pairs.
pub trait Metric: Sync + Send {
    fn name(&self) -> &'static str;
    fn score(&self, pairs: &[ScoredPair]) -> Result<f64>;
}

pub const METRIC_NAMES: [&str; 3] = ["ema", "bleu", "wer"];

/// Creates the named metric, or None for an unknown name.
pub fn create_metric(name: &str, opts: &MetricOptions) -> Option<Box<dyn Metric>> {
    match name {
        "ema" => Some(Box::new(EmaMetric)),
        "bleu" => Some(Box::new(BleuMetric {
            smoothing: opts.bleu_smoothing,
        })),
        "wer" => Some(Box::new(WerMetric)),
        _ => None,
    }
}

struct EmaMetric;

impl Metric for EmaMetric {
    fn name(&self) -> &'static str {
        "ema"
    }
    fn score(&self, pairs: &[ScoredPair]) -> Result<f64> {
        ema(pairs)
    }
}

struct BleuMetric {
    smoothing: Smoothing,
}

impl Metric for BleuMetric {
    fn name(&self) -> &'static str {
        "bleu"
    }
    fn score(&self, pairs: &[ScoredPair]) -> Result<f64> {
        corpus_bleu(pairs, self.smoothing)
    }
}

struct WerMetric;

impl Metric for WerMetric {
    fn name(&self) -> &'static str {
        "wer"
    }
    fn score(&self, pairs: &[ScoredPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::Integrity("cannot score an empty prediction set".into()));
        }
        let (distance, gt_len) = pairs
            .par_iter()
            .map(|p| (edit_distance(&p.pred, &p.gt) as u64, p.gt.len() as u64))
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        if gt_len == 0 {
            return Err(Error::Integrity(
                "WER is undefined for an empty ground truth".into(),
            ));
        }
        Ok(distance as f64 / gt_len as f64)
    }
}

/// Scores the requested metrics and builds the per-sample breakdown.
pub fn evaluate(pairs: &[ScoredPair], metrics: &[String], opts: &MetricOptions) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::Integrity("cannot score an empty prediction set".into()));
    }
    let per_sample: Result<Vec<PerSample>> = pairs
        .par_iter()
        .map(|p| {
            Ok(PerSample {
                sample_id: p.sample_id.clone(),
                exact_match: p.pred == p.gt,
                wer: wer(&p.pred, &p.gt)?,
            })
        })
        .collect();
    let per_sample = per_sample?;

    let mut report = EvalReport {
        ema: None,
        bleu4: None,
        wer: None,
        per_sample,
    };
    for name in metrics {
        let metric = create_metric(name, opts).ok_or_else(|| {
            Error::Config(format!(
                "unknown metric '{name}' (available: {})",
                METRIC_NAMES.join(", ")
            ))
        })?;
        let value = metric.score(pairs)?;
        match metric.name() {
            "ema" => report.ema = Some(value),
            "bleu" => report.bleu4 = Some(value),
            "wer" => report.wer = Some(value),
            _ => unreachable!("registry and report fields are in sync"),
        }
    }
    Ok(report)
}
