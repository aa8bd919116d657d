//! Word error rate: token-level Levenshtein distance over ground-truth length.

use crate::error::{Error, Result};

/// Unit-cost edit distance (insertions, deletions, substitutions) between two
/// token sequences. Single-row dynamic programming, O(min(m,n)) memory.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, lt) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, st) in short.iter().enumerate() {
            let cost = usize::from(lt != st);
            let next = (diag + cost).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[short.len()]
}

/// Per-sample WER: edit distance divided by the ground-truth length.
pub fn wer(pred: &[String], gt: &[String]) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::Integrity(
            "WER is undefined for an empty ground truth".into(),
        ));
    }
    Ok(edit_distance(pred, gt) as f64 / gt.len() as f64)
}
