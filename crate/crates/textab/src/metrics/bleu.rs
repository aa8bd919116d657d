//! Corpus-level BLEU-4 over token sequences.
//!
//! Score = BP × geometric mean of the modified (clipped) n-gram precisions
//! for n = 1..4, scaled to [0, 100]. BP = min(1, exp(1 − |GT|/|PT|)) over
//! corpus total lengths. Matches and totals accumulate across samples before
//! any division, so aggregation is associative.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ScoredPair;

pub const MAX_ORDER: usize = 4;

/// What to do when an n-gram order has zero matches. `Exp` follows the
/// standard exponential scheme: the smoothing divisor doubles for each such
/// order and that order's precision becomes 1/(divisor × total). `Off`
/// leaves the zero, making the whole score 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    #[default]
    Exp,
    Off,
}

impl Smoothing {
    pub fn parse(s: &str) -> Option<Smoothing> {
        match s {
            "exp" => Some(Smoothing::Exp),
            "off" => Some(Smoothing::Off),
            _ => None,
        }
    }
}

/// BLEU-4 for a prediction corpus, in [0, 100].
///
/// Errors on an empty corpus. Degenerate corpora where some order has no
/// n-grams at all (every prediction shorter than 4 tokens, or all empty)
/// score 0: there is no precision to smooth when the denominator is zero.
pub fn corpus_bleu(pairs: &[ScoredPair], smoothing: Smoothing) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Integrity("cannot score an empty prediction set".into()));
    }
    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let mut pred_len = 0u64;
    let mut gt_len = 0u64;
    for pair in pairs {
        pred_len += pair.pred.len() as u64;
        gt_len += pair.gt.len() as u64;
        for n in 1..=MAX_ORDER {
            if pair.pred.len() >= n {
                totals[n - 1] += (pair.pred.len() - n + 1) as u64;
            }
            matches[n - 1] += clipped_matches(&pair.pred, &pair.gt, n);
        }
    }
    if pred_len == 0 {
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    let mut smooth_divisor = 1.0f64;
    for n in 0..MAX_ORDER {
        if totals[n] == 0 {
            return Ok(0.0);
        }
        let precision = if matches[n] == 0 {
            match smoothing {
                Smoothing::Exp => {
                    smooth_divisor *= 2.0;
                    1.0 / (smooth_divisor * totals[n] as f64)
                }
                Smoothing::Off => return Ok(0.0),
            }
        } else {
            matches[n] as f64 / totals[n] as f64
        };
        log_sum += precision.ln();
    }
    let geo_mean = (log_sum / MAX_ORDER as f64).exp();
    let bp = if pred_len >= gt_len {
        1.0
    } else {
        (1.0 - gt_len as f64 / pred_len as f64).exp()
    };
    Ok(100.0 * bp * geo_mean)
}

/// Modified n-gram matches: prediction n-gram counts clipped by the
/// ground-truth counts of the same n-gram.
fn clipped_matches(pred: &[String], gt: &[String], n: usize) -> u64 {
    if pred.len() < n || gt.len() < n {
        return 0;
    }
    let mut budget: HashMap<&[String], u64> = HashMap::new();
    for gram in gt.windows(n) {
        *budget.entry(gram).or_insert(0) += 1;
    }
    let mut matched = 0;
    for gram in pred.windows(n) {
        if let Some(left) = budget.get_mut(gram) {
            if *left > 0 {
                *left -= 1;
                matched += 1;
            }
        }
    }
    matched
}
