//! Dataset assembly: the four variants, deterministic splits, manifests,
//! and summary statistics.
//!
//! The split unit is the snippet: every image variant (font × aspect) of one
//! snippet lands in the same split, so a model can never see a test table in
//! training under a different font.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tokenize::{StreamKind, TokenStreamRecord};

/// The four dataset variants: structure/content × length cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "TSD-250")]
    Tsd250,
    #[serde(rename = "TSD-500")]
    Tsd500,
    #[serde(rename = "TCD-250")]
    Tcd250,
    #[serde(rename = "TCD-500")]
    Tcd500,
}

pub const ALL_VARIANTS: [Variant; 4] = [Variant::Tsd250, Variant::Tsd500, Variant::Tcd250, Variant::Tcd500];

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Tsd250 => "TSD-250",
            Variant::Tsd500 => "TSD-500",
            Variant::Tcd250 => "TCD-250",
            Variant::Tcd500 => "TCD-500",
        }
    }

    pub fn parse(name: &str) -> Option<Variant> {
        ALL_VARIANTS.into_iter().find(|v| v.name() == name)
    }

    pub fn kind(self) -> StreamKind {
        match self {
            Variant::Tsd250 | Variant::Tsd500 => StreamKind::Structure,
            Variant::Tcd250 | Variant::Tcd500 => StreamKind::Content,
        }
    }

    /// Inclusive token length cap.
    pub fn cap(self) -> usize {
        match self {
            Variant::Tsd250 | Variant::Tcd250 => 250,
            Variant::Tsd500 | Variant::Tcd500 => 500,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Val => write!(f, "val"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// Stable hash of a snippet identity onto [0, 1).
pub fn unit_fraction(doc_id: &str, snippet_index: u32) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(doc_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(snippet_index.to_be_bytes());
    let digest = hasher.finalize();
    let head = u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"));
    head as f64 / (u64::MAX as f64 + 1.0)
}

/// Stateless split assignment by hash thresholds: < 0.8 train, < 0.9 val,
/// else test. Deterministic per (doc_id, snippet_index); fractions converge
/// to 80:10:10 over many snippets. Manifests are cut with
/// [`assign_splits_exact`] instead, which reaches the exact rounded sizes.
pub fn assign_split(doc_id: &str, snippet_index: u32) -> Split {
    let f = unit_fraction(doc_id, snippet_index);
    if f < 0.8 {
        Split::Train
    } else if f < 0.9 {
        Split::Val
    } else {
        Split::Test
    }
}

/// Largest-remainder 80:10:10 sizes; each differs from the exact share by
/// less than 1 and the three sum to `n`.
pub fn split_sizes(n: usize) -> [usize; 3] {
    let ratios = [0.8f64, 0.1, 0.1];
    let mut sizes = [0usize; 3];
    let mut remainders = [0.0f64; 3];
    let mut assigned = 0;
    for i in 0..3 {
        let exact = n as f64 * ratios[i];
        sizes[i] = exact.floor() as usize;
        remainders[i] = exact - exact.floor();
        assigned += sizes[i];
    }
    let mut order = [0usize, 1, 2];
    // Ties go to the earlier bucket (train, then val, then test).
    order.sort_by(|&a, &b| remainders[b].partial_cmp(&remainders[a]).unwrap().then(a.cmp(&b)));
    for i in 0..(n - assigned) {
        sizes[order[i]] += 1;
    }
    sizes
}

/// Splits a set of snippet keys at exact largest-remainder sizes, ordering
/// by the same per-snippet hash as [`assign_split`] so membership is
/// deterministic and independent of input order.
pub fn assign_splits_exact(units: &[(String, u32)]) -> BTreeMap<(String, u32), Split> {
    let mut ranked: Vec<&(String, u32)> = units.iter().collect();
    ranked.sort_by(|a, b| {
        unit_fraction(&a.0, a.1)
            .partial_cmp(&unit_fraction(&b.0, b.1))
            .unwrap()
            .then_with(|| a.cmp(b))
    });
    let sizes = split_sizes(ranked.len());
    let mut out = BTreeMap::new();
    for (rank, unit) in ranked.into_iter().enumerate() {
        let split = if rank < sizes[0] {
            Split::Train
        } else if rank < sizes[0] + sizes[1] {
            Split::Val
        } else {
            Split::Test
        };
        out.insert(unit.clone(), split);
    }
    out
}

/// One dataset sample: an image variant (or the bare snippet when the
/// dataset is built without renders) paired with its ground-truth tokens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// `doc_id/snippet_index[/font/aspect]`.
    pub sample_id: String,
    pub doc_id: String,
    pub snippet_index: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub font_package: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspect_mode: Option<String>,
    /// Image path relative to the output root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub split: Split,
    pub tokens: Vec<String>,
}

/// A successfully rendered image variant of one snippet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ImageVariant {
    pub font_package: String,
    pub aspect_mode: String,
    pub image: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub samples: usize,
    pub tokens_per_sample: f64,
    pub vocab_size: usize,
    pub avg_rows: f64,
    pub avg_cols: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub variant: Variant,
    pub entries: Vec<ManifestEntry>,
    pub stats: DatasetStats,
}

/// Builds one variant's manifest from the token streams of its kind.
///
/// Streams longer than the cap are dropped (per variant, so a snippet can be
/// in TSD-500 but not TSD-250). When `renders` is given, each successful
/// image variant of a surviving snippet becomes an entry and snippets with
/// no surviving image produce none; without renders every snippet is one
/// entry. Splits are assigned per snippet before fan-out.
pub fn build_manifest(
    variant: Variant,
    streams: &[TokenStreamRecord],
    renders: Option<&BTreeMap<(String, u32), Vec<ImageVariant>>>,
) -> Vec<ManifestEntry> {
    let mut eligible: Vec<&TokenStreamRecord> = streams
        .iter()
        .filter(|s| s.kind == variant.kind() && s.tokens.len() <= variant.cap())
        .collect();
    eligible.sort_by(|a, b| (&a.doc_id, a.snippet_index).cmp(&(&b.doc_id, b.snippet_index)));

    let units: Vec<(String, u32)> = eligible
        .iter()
        .map(|s| (s.doc_id.clone(), s.snippet_index))
        .collect();
    let splits = assign_splits_exact(&units);

    let mut entries = Vec::new();
    for stream in eligible {
        let key = (stream.doc_id.clone(), stream.snippet_index);
        let split = splits[&key];
        match renders {
            Some(map) => {
                let Some(variants) = map.get(&key) else { continue };
                for iv in variants {
                    entries.push(ManifestEntry {
                        sample_id: format!(
                            "{}/{}/{}/{}",
                            stream.doc_id, stream.snippet_index, iv.font_package, iv.aspect_mode
                        ),
                        doc_id: stream.doc_id.clone(),
                        snippet_index: stream.snippet_index,
                        font_package: Some(iv.font_package.clone()),
                        aspect_mode: Some(iv.aspect_mode.clone()),
                        image: Some(iv.image.clone()),
                        split,
                        tokens: stream.tokens.clone(),
                    });
                }
            }
            None => entries.push(ManifestEntry {
                sample_id: format!("{}/{}", stream.doc_id, stream.snippet_index),
                doc_id: stream.doc_id.clone(),
                snippet_index: stream.snippet_index,
                font_package: None,
                aspect_mode: None,
                image: None,
                split,
                tokens: stream.tokens.clone(),
            }),
        }
    }
    entries
}

/// Rows of a structure stream: its `\\` token count.
pub fn row_count(structure_tokens: &[String]) -> usize {
    structure_tokens.iter().filter(|t| *t == "\\\\").count()
}

/// Columns of a structure stream: alignment tokens (l, r, c) inside the
/// leading column-spec group. Alignment letters in later `\multicolumn`
/// format groups do not count.
pub fn column_count(structure_tokens: &[String]) -> usize {
    if structure_tokens.first().map(String::as_str) != Some("{") {
        return 0;
    }
    let mut depth = 1usize;
    let mut count = 0;
    for tok in &structure_tokens[1..] {
        match tok.as_str() {
            "{" => depth += 1,
            "}" => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            "l" | "r" | "c" => count += 1,
            _ => {}
        }
    }
    count
}

/// Computes manifest statistics. `paired_structure` supplies the structure
/// stream per snippet for content variants, whose own tokens carry no row or
/// column information; content entries without a structure twin (the
/// structure stream was rejected) are excluded from the row/column means.
/// All accumulation is integral, so results do not depend on entry order.
pub fn compute_stats(
    entries: &[ManifestEntry],
    kind: StreamKind,
    paired_structure: &BTreeMap<(String, u32), Vec<String>>,
) -> DatasetStats {
    if entries.is_empty() {
        return DatasetStats::default();
    }
    let mut token_total: u128 = 0;
    let mut vocab: BTreeSet<&str> = BTreeSet::new();
    let mut row_total: u128 = 0;
    let mut col_total: u128 = 0;
    let mut paired = 0usize;
    for entry in entries {
        token_total += entry.tokens.len() as u128;
        vocab.extend(entry.tokens.iter().map(String::as_str));
        let structure: Option<&[String]> = match kind {
            StreamKind::Structure => Some(&entry.tokens),
            StreamKind::Content => paired_structure
                .get(&(entry.doc_id.clone(), entry.snippet_index))
                .map(Vec::as_slice),
        };
        if let Some(tokens) = structure {
            row_total += row_count(tokens) as u128;
            col_total += column_count(tokens) as u128;
            paired += 1;
        }
    }
    DatasetStats {
        samples: entries.len(),
        tokens_per_sample: token_total as f64 / entries.len() as f64,
        vocab_size: vocab.len(),
        avg_rows: if paired == 0 { 0.0 } else { row_total as f64 / paired as f64 },
        avg_cols: if paired == 0 { 0.0 } else { col_total as f64 / paired as f64 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    /// Inclusive lower bound.
    pub lo: usize,
    /// Exclusive upper bound, except the terminal bucket where `hi` equals
    /// the cap and is inclusive (a stream of exactly cap tokens lands there).
    pub hi: usize,
    pub count: u64,
}

/// Token-length distribution in buckets of 25, up to the variant cap.
/// Only occupied buckets are emitted.
pub fn token_length_histogram<I>(lengths: I, cap: usize) -> Vec<HistogramBucket>
where
    I: IntoIterator<Item = usize>,
{
    const WIDTH: usize = 25;
    let last_bucket = (cap / WIDTH).max(1) - 1;
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for len in lengths {
        debug_assert!(len <= cap, "histogram input exceeds the cap");
        let idx = (len / WIDTH).min(last_bucket);
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(idx, count)| HistogramBucket {
            lo: idx * WIDTH,
            hi: if idx == last_bucket { cap } else { (idx + 1) * WIDTH },
            count,
        })
        .collect()
}

/// Split sizes of a manifest, in train/val/test order.
pub fn split_counts(entries: &[ManifestEntry]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for e in entries {
        match e.split {
            Split::Train => counts[0] += 1,
            Split::Val => counts[1] += 1,
            Split::Test => counts[2] += 1,
        }
    }
    counts
}

/// Human-readable statistics table, one row per variant.
///
/// ML is the variant's token cap, T/S the mean tokens per sample, VS the
/// vocabulary size, AR/AC the average rows and columns.
pub fn render_stats_report(rows: &[(Variant, DatasetStats, [usize; 3])]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<9} {:>4} {:>8} {:>17} {:>8} {:>5} {:>6} {:>6}\n",
        "Dataset", "ML", "Samples", "Train/Val/Test", "T/S", "VS", "AR", "AC"
    ));
    for (variant, stats, splits) in rows {
        out.push_str(&format!(
            "{:<9} {:>4} {:>8} {:>17} {:>8.2} {:>5} {:>6.2} {:>6.2}\n",
            variant.name(),
            variant.cap(),
            stats.samples,
            format!("{}/{}/{}", splits[0], splits[1], splits[2]),
            stats.tokens_per_sample,
            stats.vocab_size,
            stats.avg_rows,
            stats.avg_cols,
        ));
    }
    out
}
