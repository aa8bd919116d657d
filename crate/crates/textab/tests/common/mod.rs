//! Shared helpers for the integration suites: fixture locations and
//! independent oracle implementations of the metrics. The oracles are kept
//! deliberately different in shape from the library code (recursive
//! definition instead of a DP table, BTreeMap counting instead of budget
//! decrements) so agreement actually means something.

#![allow(dead_code)] // each test binary uses its own subset

use std::path::PathBuf;

use rand::prelude::*;

pub fn fixture_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

/// Golden file name for a snippet: doc id with the extension dropped and
/// separators flattened, plus the snippet index.
pub fn golden_name(doc_id: &str, snippet_index: u32) -> String {
    let stem = doc_id.strip_suffix(".tex").unwrap_or(doc_id).replace('/', "_");
    format!("{stem}_{snippet_index}.tex")
}

// --- edit distance oracle ---------------------------------------------------

/// Edit distance straight from the recursive definition. The memo caches a
/// pure function, so values are those of the plain recursion (checked against
/// [`plain_recursive_edit_distance`] on small inputs in the property suite).
pub fn oracle_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn rec<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut [usize], w: usize) -> usize {
        const UNSET: usize = usize::MAX;
        if memo[i * w + j] != UNSET {
            return memo[i * w + j];
        }
        let v = if i == a.len() {
            b.len() - j
        } else if j == b.len() {
            a.len() - i
        } else {
            let subst = rec(a, b, i + 1, j + 1, memo, w) + usize::from(a[i] != b[j]);
            let delete = rec(a, b, i + 1, j, memo, w) + 1;
            let insert = rec(a, b, i, j + 1, memo, w) + 1;
            subst.min(delete).min(insert)
        };
        memo[i * w + j] = v;
        v
    }
    let w = b.len() + 1;
    let mut memo = vec![usize::MAX; (a.len() + 1) * w];
    rec(a, b, 0, 0, &mut memo, w)
}

/// The same recursion with no memo at all; exponential, only for tiny inputs.
pub fn plain_recursive_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let subst = plain_recursive_edit_distance(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
    let delete = plain_recursive_edit_distance(&a[1..], b) + 1;
    let insert = plain_recursive_edit_distance(a, &b[1..]) + 1;
    subst.min(delete).min(insert)
}

// --- BLEU oracle -------------------------------------------------------------

/// Direct transcription of the BLEU-4 definition: clipped n-gram counts via
/// full count maps, geometric mean as a fourth root of the product, brevity
/// penalty min(1, e^(1 - |GT|/|PT|)), exponential smoothing on zero-match
/// orders, 0 when any order has no n-grams at all.
pub fn oracle_corpus_bleu(pairs: &[(Vec<String>, Vec<String>)], exp_smoothing: bool) -> f64 {
    use std::collections::BTreeMap;

    let mut matches = [0u64; 4];
    let mut totals = [0u64; 4];
    let mut pred_len = 0u64;
    let mut gt_len = 0u64;
    for (pred, gt) in pairs {
        pred_len += pred.len() as u64;
        gt_len += gt.len() as u64;
        for n in 1..=4usize {
            let mut gt_counts: BTreeMap<&[String], u64> = BTreeMap::new();
            if gt.len() >= n {
                for gram in gt.windows(n) {
                    *gt_counts.entry(gram).or_insert(0) += 1;
                }
            }
            let mut pred_counts: BTreeMap<&[String], u64> = BTreeMap::new();
            if pred.len() >= n {
                totals[n - 1] += (pred.len() - n + 1) as u64;
                for gram in pred.windows(n) {
                    *pred_counts.entry(gram).or_insert(0) += 1;
                }
            }
            for (gram, count) in pred_counts {
                matches[n - 1] += count.min(gt_counts.get(gram).copied().unwrap_or(0));
            }
        }
    }
    if pred_len == 0 {
        return 0.0;
    }
    let mut product = 1.0f64;
    let mut divisor = 1.0f64;
    for n in 0..4 {
        if totals[n] == 0 {
            return 0.0;
        }
        let p = if matches[n] == 0 {
            if !exp_smoothing {
                return 0.0;
            }
            divisor *= 2.0;
            1.0 / (divisor * totals[n] as f64)
        } else {
            matches[n] as f64 / totals[n] as f64
        };
        product *= p;
    }
    let geo = product.powf(0.25);
    let bp = (1.0 - gt_len as f64 / pred_len as f64).exp().min(1.0);
    100.0 * bp * geo
}

// --- random corpora ----------------------------------------------------------

/// Random token-sequence pair corpora over a small alphabet, so n-gram
/// overlap actually happens. Lengths go down to 0 (predictions) and 1
/// (ground truths) to reach the degenerate paths.
pub fn random_corpora(seed: u64, count: usize) -> Vec<Vec<(Vec<String>, Vec<String>)>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let alphabet = ["a", "b", "c", "d"];
    let mut corpora = Vec::with_capacity(count);
    for _ in 0..count {
        let pairs = rng.gen_range(1..=6);
        let mut corpus = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            let gt_len = rng.gen_range(1..=12);
            let pred_len = rng.gen_range(0..=12);
            let gt: Vec<String> =
                (0..gt_len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string()).collect();
            let pred: Vec<String> = (0..pred_len)
                .map(|_| {
                    // Bias toward ground-truth tokens so matches are common.
                    if rng.gen_bool(0.7) && !gt.is_empty() {
                        gt[rng.gen_range(0..gt.len())].clone()
                    } else {
                        alphabet[rng.gen_range(0..alphabet.len())].to_string()
                    }
                })
                .collect();
            corpus.push((pred, gt));
        }
        corpora.push(corpus);
    }
    corpora
}
