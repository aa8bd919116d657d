//! Exact match accuracy.

use crate::error::{Error, Result};

use super::ScoredPair;

/// Fraction of samples whose prediction equals the ground truth exactly,
/// token for token.
pub fn ema(pairs: &[ScoredPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Integrity("cannot score an empty prediction set".into()));
    }
    let exact = pairs.iter().filter(|p| p.pred == p.gt).count();
    Ok(exact as f64 / pairs.len() as f64)
}
