//! Stage orchestration. Each stage reads the previous stage's JSON-lines
//! artifacts and writes its own under the output root, so slow steps
//! (rendering) are never repeated to iterate on fast ones (tokenization).
//!
//! Layout under `output_root`:
//!
//! ```text
//! snippets/snippets.jsonl    extracted table snippets
//! snippets/warnings.jsonl    scan + extraction warnings
//! streams/structure.jsonl    structure token streams
//! streams/content.jsonl      content token streams (rare commands replaced)
//! streams/rejects.jsonl      snippets a tokenizer refused, with reasons
//! streams/vocab_*.tsv        vocabularies, count-descending
//! images/*.jpg               rendered variants
//! images/renders.jsonl       one record per render attempt
//! manifests/<VARIANT>.jsonl  dataset entries
//! manifests/<VARIANT>.stats.json
//! reports/stats.txt          the per-variant statistics table
//! reports/eval.{json,txt}    metric reports
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corpus::{self, ScanWarning};
use crate::dataset::{
    build_manifest, compute_stats, split_counts, token_length_histogram, DatasetStats,
    HistogramBucket, ImageVariant, ManifestEntry, Variant,
};
use crate::error::{Error, Result};
use crate::extract::{extract_document, ExtractWarning, TableSnippet};
use crate::jsonl::{read_jsonl, write_jsonl, write_string_atomic};
use crate::metrics::{evaluate, EvalReport, MetricOptions, ScoredPair};
use crate::render::{render_all, AspectMode, RenderRecord, RenderSpec, RenderStatus, Toolchain};
use crate::tokenize::{
    builders, filter_rare, RejectRecord, StreamKind, TokenStreamRecord, Vocabulary,
};

/// Resolves every artifact path from the output root.
pub struct ArtifactPaths {
    root: PathBuf,
}

impl ArtifactPaths {
    pub fn new(output_root: &Path) -> ArtifactPaths {
        ArtifactPaths { root: output_root.to_path_buf() }
    }

    pub fn snippets(&self) -> PathBuf {
        self.root.join("snippets").join("snippets.jsonl")
    }

    pub fn warnings(&self) -> PathBuf {
        self.root.join("snippets").join("warnings.jsonl")
    }

    pub fn streams(&self, kind: StreamKind) -> PathBuf {
        self.root.join("streams").join(format!("{kind}.jsonl"))
    }

    pub fn rejects(&self) -> PathBuf {
        self.root.join("streams").join("rejects.jsonl")
    }

    pub fn vocab(&self, kind: StreamKind) -> PathBuf {
        self.root.join("streams").join(format!("vocab_{kind}.tsv"))
    }

    pub fn images_dir(&self) -> PathBuf {
        self.root.join("images")
    }

    pub fn renders(&self) -> PathBuf {
        self.root.join("images").join("renders.jsonl")
    }

    pub fn manifest(&self, variant: Variant) -> PathBuf {
        self.root.join("manifests").join(format!("{}.jsonl", variant.name()))
    }

    pub fn manifest_stats(&self, variant: Variant) -> PathBuf {
        self.root.join("manifests").join(format!("{}.stats.json", variant.name()))
    }

    pub fn stats_report(&self) -> PathBuf {
        self.root.join("reports").join("stats.txt")
    }

    pub fn eval_report_json(&self) -> PathBuf {
        self.root.join("reports").join("eval.json")
    }

    pub fn eval_report_text(&self) -> PathBuf {
        self.root.join("reports").join("eval.txt")
    }
}

fn read_artifact<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingArtifact { path: path.to_path_buf(), stage });
    }
    read_jsonl(path)
}

/// A warning from either the corpus scan or snippet extraction, kept in one
/// file so a run's data-quality issues live in one place.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineWarning {
    /// `scan` or `extract`.
    pub source: String,
    /// The file path (scan) or document id (extract) concerned.
    pub context: String,
    pub message: String,
}

impl PipelineWarning {
    fn from_scan(w: ScanWarning) -> PipelineWarning {
        PipelineWarning {
            source: "scan".into(),
            context: w.path,
            message: w.reason,
        }
    }

    fn from_extract(w: ExtractWarning) -> PipelineWarning {
        PipelineWarning { source: "extract".into(), context: w.doc_id, message: w.message }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractSummary {
    pub documents: usize,
    pub snippets: usize,
    pub warnings: usize,
}

/// Stage 1: scan the corpus and extract cleaned snippets.
pub fn run_extract(config: &PipelineConfig) -> Result<ExtractSummary> {
    config.validate()?;
    let paths = ArtifactPaths::new(&config.output_root);
    let scan = corpus::scan_corpus(&config.corpus_root, config.max_bytes)?;

    let mut snippets: Vec<TableSnippet> = Vec::new();
    let mut warnings: Vec<PipelineWarning> =
        scan.warnings.into_iter().map(PipelineWarning::from_scan).collect();
    let documents = scan.documents.len();
    for doc in &scan.documents {
        let extraction = extract_document(doc);
        snippets.extend(extraction.snippets);
        warnings.extend(extraction.warnings.into_iter().map(PipelineWarning::from_extract));
    }

    write_jsonl(&paths.snippets(), &snippets)?;
    write_jsonl(&paths.warnings(), &warnings)?;
    Ok(ExtractSummary { documents, snippets: snippets.len(), warnings: warnings.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenizeSummary {
    pub structure_streams: usize,
    pub content_streams: usize,
    pub rejects: usize,
    pub structure_vocab: usize,
    pub content_vocab: usize,
}

/// Stage 2: build both token streams per snippet, replace rare command
/// tokens in the content streams, and write the vocabularies.
pub fn run_tokenize(config: &PipelineConfig) -> Result<TokenizeSummary> {
    config.validate()?;
    let paths = ArtifactPaths::new(&config.output_root);
    let snippets: Vec<TableSnippet> = read_artifact(&paths.snippets(), "extract")?;

    let mut streams: BTreeMap<StreamKind, Vec<TokenStreamRecord>> = BTreeMap::new();
    let mut rejects: Vec<RejectRecord> = Vec::new();
    for snippet in &snippets {
        for builder in builders() {
            match builder.build(&snippet.code) {
                Ok(tokens) => streams.entry(builder.kind()).or_default().push(TokenStreamRecord {
                    doc_id: snippet.doc_id.clone(),
                    snippet_index: snippet.snippet_index,
                    kind: builder.kind(),
                    tokens,
                }),
                Err(reason) => rejects.push(RejectRecord {
                    doc_id: snippet.doc_id.clone(),
                    snippet_index: snippet.snippet_index,
                    kind: builder.kind(),
                    reason,
                }),
            }
        }
    }

    let structure = streams.remove(&StreamKind::Structure).unwrap_or_default();
    let mut content = streams.remove(&StreamKind::Content).unwrap_or_default();

    // The structure vocabulary is closed by construction; rare-token
    // replacement concerns only the open content vocabulary.
    let structure_refs: Vec<&[String]> = structure.iter().map(|s| s.tokens.as_slice()).collect();
    let structure_vocab = Vocabulary::from_streams(StreamKind::Structure, structure_refs);
    let content_vocab = filter_rare(&mut content, config.rare_threshold);

    write_jsonl(&paths.streams(StreamKind::Structure), &structure)?;
    write_jsonl(&paths.streams(StreamKind::Content), &content)?;
    write_jsonl(&paths.rejects(), &rejects)?;
    write_string_atomic(&paths.vocab(StreamKind::Structure), &structure_vocab.to_tsv())?;
    write_string_atomic(&paths.vocab(StreamKind::Content), &content_vocab.to_tsv())?;
    Ok(TokenizeSummary {
        structure_streams: structure.len(),
        content_streams: content.len(),
        rejects: rejects.len(),
        structure_vocab: structure_vocab.size(),
        content_vocab: content_vocab.size(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderSummary {
    pub ok: usize,
    pub failed: usize,
}

/// Stage 3 (optional, needs the external toolchain): render every snippet
/// under each configured font and aspect mode.
pub fn run_render(config: &PipelineConfig) -> Result<RenderSummary> {
    config.validate()?;
    let paths = ArtifactPaths::new(&config.output_root);
    let snippets: Vec<TableSnippet> = read_artifact(&paths.snippets(), "extract")?;

    let toolchain = Toolchain::new(&config.tex_command, &config.raster_command, config.timeout_secs)?;
    toolchain.check_available()?;
    let base = RenderSpec {
        font_package: config.fonts[0].clone(),
        aspect_mode: AspectMode::Conserved,
        dpi: config.dpi,
        target_px: config.target_px,
        blur: config.blur,
        jpeg_quality: config.jpeg_quality,
    };
    let records = render_all(
        &snippets,
        &config.fonts,
        &config.aspect_modes,
        &base,
        &toolchain,
        &paths.images_dir(),
        config.jobs,
    )?;
    let ok = records.iter().filter(|r| r.status == RenderStatus::Ok).count();
    let failed = records.len() - ok;
    write_jsonl(&paths.renders(), &records)?;
    Ok(RenderSummary { ok, failed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Per-variant statistics artifact, stored next to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: Variant,
    pub stats: DatasetStats,
    pub splits: SplitCounts,
    pub histogram: Vec<HistogramBucket>,
}

#[derive(Debug, Clone)]
pub struct BuildSummary {
    pub variants: Vec<(Variant, usize)>,
}

/// The variants selected by the configured caps, in reporting order
/// (structure first, then content, smaller cap first).
pub fn selected_variants(config: &PipelineConfig) -> Vec<Variant> {
    let mut variants = Vec::new();
    for kind in [StreamKind::Structure, StreamKind::Content] {
        for cap in &config.caps {
            variants.push(match (kind, cap) {
                (StreamKind::Structure, 250) => Variant::Tsd250,
                (StreamKind::Structure, _) => Variant::Tsd500,
                (StreamKind::Content, 250) => Variant::Tcd250,
                (StreamKind::Content, _) => Variant::Tcd500,
            });
        }
    }
    variants
}

type RenderMap = BTreeMap<(String, u32), Vec<ImageVariant>>;

fn load_render_map(paths: &ArtifactPaths) -> Result<Option<RenderMap>> {
    let renders_path = paths.renders();
    if !renders_path.exists() {
        return Ok(None);
    }
    let records: Vec<RenderRecord> = read_jsonl(&renders_path)?;
    let mut map = RenderMap::new();
    for record in records {
        if record.status != RenderStatus::Ok {
            continue;
        }
        let image = record.image.ok_or_else(|| {
            Error::Integrity(format!(
                "render record {}/{} is ok but has no image path",
                record.doc_id, record.snippet_index
            ))
        })?;
        map.entry((record.doc_id, record.snippet_index)).or_default().push(ImageVariant {
            font_package: record.font_package,
            aspect_mode: record.aspect_mode.name().to_string(),
            image,
        });
    }
    for variants in map.values_mut() {
        variants.sort();
    }
    Ok(Some(map))
}

fn structure_pairing(structure: &[TokenStreamRecord]) -> BTreeMap<(String, u32), Vec<String>> {
    structure
        .iter()
        .map(|s| ((s.doc_id.clone(), s.snippet_index), s.tokens.clone()))
        .collect()
}

/// Stage 4: assemble the selected dataset variants. Renders are joined in
/// when the render stage has run; otherwise entries carry no image.
pub fn run_build(config: &PipelineConfig) -> Result<BuildSummary> {
    config.validate()?;
    let paths = ArtifactPaths::new(&config.output_root);
    let structure: Vec<TokenStreamRecord> =
        read_artifact(&paths.streams(StreamKind::Structure), "tokenize")?;
    let content: Vec<TokenStreamRecord> =
        read_artifact(&paths.streams(StreamKind::Content), "tokenize")?;
    let renders = load_render_map(&paths)?;
    let paired = structure_pairing(&structure);

    let mut summary = BuildSummary { variants: Vec::new() };
    for variant in selected_variants(config) {
        let streams = match variant.kind() {
            StreamKind::Structure => &structure,
            StreamKind::Content => &content,
        };
        let entries = build_manifest(variant, streams, renders.as_ref());
        let stats = compute_stats(&entries, variant.kind(), &paired);
        let counts = split_counts(&entries);
        let histogram =
            token_length_histogram(entries.iter().map(|e| e.tokens.len()), variant.cap());
        write_jsonl(&paths.manifest(variant), &entries)?;
        let variant_stats = VariantStats {
            variant,
            stats,
            splits: SplitCounts { train: counts[0], val: counts[1], test: counts[2] },
            histogram,
        };
        let json = serde_json::to_string_pretty(&variant_stats)
            .map_err(|e| Error::Integrity(format!("could not serialize stats: {e}")))?;
        write_string_atomic(&paths.manifest_stats(variant), &(json + "\n"))?;
        summary.variants.push((variant, entries.len()));
    }
    Ok(summary)
}

/// Stage 5: write the human-readable statistics table over the built
/// manifests and return its text.
pub fn run_stats(config: &PipelineConfig) -> Result<String> {
    config.validate()?;
    let paths = ArtifactPaths::new(&config.output_root);
    let structure: Vec<TokenStreamRecord> =
        read_artifact(&paths.streams(StreamKind::Structure), "tokenize")?;
    let paired = structure_pairing(&structure);

    let mut rows = Vec::new();
    for variant in selected_variants(config) {
        let entries: Vec<ManifestEntry> = read_artifact(&paths.manifest(variant), "build")?;
        let stats = compute_stats(&entries, variant.kind(), &paired);
        rows.push((variant, stats, split_counts(&entries)));
    }
    let report = crate::dataset::render_stats_report(&rows);
    write_string_atomic(&paths.stats_report(), &report)?;
    Ok(report)
}

/// One line of a predictions file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub tokens: Vec<String>,
}

/// Stage 6: score a predictions file against a manifest. `manifest` may be
/// a variant name (resolved under the output root) or a path to a manifest
/// file. Every prediction must match exactly one manifest entry; entries
/// without predictions are simply not scored.
pub fn run_eval(
    config: &PipelineConfig,
    manifest: &str,
    predictions_path: &Path,
    metric_names: &[String],
) -> Result<EvalReport> {
    let paths = ArtifactPaths::new(&config.output_root);
    let manifest_path = match Variant::parse(manifest) {
        Some(variant) => paths.manifest(variant),
        None => PathBuf::from(manifest),
    };
    let entries: Vec<ManifestEntry> = read_artifact(&manifest_path, "build")?;
    let predictions: Vec<PredictionRecord> = read_jsonl(predictions_path)?;

    let mut ground_truth: BTreeMap<&str, &[String]> = BTreeMap::new();
    for entry in &entries {
        ground_truth.insert(entry.sample_id.as_str(), entry.tokens.as_slice());
    }
    let mut seen: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    let mut pairs = Vec::with_capacity(predictions.len());
    for pred in &predictions {
        let gt = ground_truth.get(pred.sample_id.as_str()).ok_or_else(|| {
            Error::Integrity(format!(
                "prediction references unknown sample_id `{}` (not in {})",
                pred.sample_id,
                manifest_path.display()
            ))
        })?;
        if !seen.insert(pred.sample_id.as_str()) {
            return Err(Error::Integrity(format!(
                "duplicate prediction for sample_id `{}`",
                pred.sample_id
            )));
        }
        pairs.push(ScoredPair {
            sample_id: pred.sample_id.clone(),
            pred: pred.tokens.clone(),
            gt: gt.to_vec(),
        });
    }

    let options = MetricOptions { bleu_smoothing: config.bleu_smoothing };
    let report = evaluate(&pairs, metric_names, &options)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Integrity(format!("could not serialize report: {e}")))?;
    write_string_atomic(&paths.eval_report_json(), &(json + "\n"))?;
    write_string_atomic(&paths.eval_report_text(), &report.to_text())?;
    Ok(report)
}
