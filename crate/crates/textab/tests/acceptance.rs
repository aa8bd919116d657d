//! Acceptance gate: one test per criterion, each ending in a single
//! PASS line (the harness prints the FAIL side). Oracles live in
//! tests/common and are independent reimplementations, not calls back
//! into the library.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use textab::config::PipelineConfig;
use textab::corpus::{scan_corpus, DEFAULT_MAX_BYTES};
use textab::dataset::{assign_split, build_manifest, ImageVariant, Split, Variant};
use textab::extract::extract_document;
use textab::metrics::{corpus_bleu, edit_distance, ema, wer, ScoredPair, Smoothing};
use textab::pipeline::{run_build, run_extract, run_stats, run_tokenize, ArtifactPaths};
use textab::render::{
    render_all, AspectMode, RenderSpec, Toolchain, DEFAULT_RASTER_COMMAND, DEFAULT_TEX_COMMAND,
};
use textab::tokenize::{builder, StreamKind, TokenStreamRecord, STRUCTURE_VOCABULARY};

fn pass(n: u32, detail: &str) {
    println!("acceptance criterion {n}: PASS ({detail})");
}

fn fixture_config(out: &std::path::Path) -> PipelineConfig {
    PipelineConfig {
        corpus_root: common::fixture_corpus(),
        output_root: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

fn toks(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn pair(pred: Vec<String>, gt: Vec<String>) -> ScoredPair {
    ScoredPair { sample_id: "s".into(), pred, gt }
}

/// Criterion 1: the structure vocabulary observed over the fixture corpus is
/// exactly the closed 25-token set, as written to the vocabulary artifact.
#[test]
fn criterion_1_structure_vocabulary_exactness() {
    let out = tempfile::tempdir().unwrap();
    let config = fixture_config(out.path());
    run_extract(&config).unwrap();
    run_tokenize(&config).unwrap();

    let tsv = fs::read_to_string(ArtifactPaths::new(out.path()).vocab(StreamKind::Structure))
        .unwrap();
    let observed: BTreeSet<&str> = tsv
        .lines()
        .map(|line| line.split_once('\t').expect("vocab line is token<TAB>count").0)
        .collect();
    let expected: BTreeSet<&str> = STRUCTURE_VOCABULARY.iter().copied().collect();
    let missing: Vec<&&str> = expected.difference(&observed).collect();
    let extra: Vec<&&str> = observed.difference(&expected).collect();
    assert!(
        missing.is_empty() && extra.is_empty(),
        "structure vocabulary mismatch; missing {missing:?}, extra {extra:?}"
    );
    assert_eq!(observed.len(), 25);
    pass(1, "fixture corpus structure vocabulary is exactly the 25 closed tokens");
}

/// Criterion 2: single `\hline` deletion from a 35-token structure ground
/// truth, plus the identical-sequence content case.
#[test]
fn criterion_2_single_deletion_metric_reproduction() {
    // { c c } then six rows of `\hline CELL & CELL \\` and a closing \hline:
    // 4 + 6*5 + 1 = 35 tokens.
    let mut gt = toks(&["{", "c", "c", "}"]);
    for _ in 0..6 {
        gt.extend(toks(&["\\hline", "CELL", "&", "CELL", "\\\\"]));
    }
    gt.push("\\hline".into());
    assert_eq!(gt.len(), 35);

    // Delete the fourth \hline (an interior rule).
    let deleted = gt.iter().position(|t| t == "\\hline").unwrap() + 15;
    assert_eq!(gt[deleted], "\\hline");
    let mut pred = gt.clone();
    pred.remove(deleted);
    assert_eq!(pred.len(), 34);

    let tsr = [pair(pred.clone(), gt.clone())];
    let ema_v = ema(&tsr).unwrap();
    let wer_v = wer(&pred, &gt).unwrap();
    let bleu_v = corpus_bleu(&tsr, Smoothing::Exp).unwrap();
    assert_eq!(ema_v, 0.0, "a one-token deletion can never be an exact match");
    assert!(
        (0.02..=0.03).contains(&wer_v),
        "WER for one deletion out of 35 should be 1/35, got {wer_v}"
    );
    println!("  single-deletion case: EMA {ema_v}, WER {wer_v:.4}, BLEU-4 {bleu_v:.4}");

    // Identical content sequence.
    let content = toks(&["N", "a", "m", "e", "&", "A", "g", "e", "\\\\", "A", "d", "a", "¦", "3", "6"]);
    let tcr = [pair(content.clone(), content.clone())];
    assert_eq!(ema(&tcr).unwrap(), 1.0);
    assert!((corpus_bleu(&tcr, Smoothing::Exp).unwrap() - 100.0).abs() <= 1e-6);
    assert_eq!(wer(&content, &content).unwrap(), 0.0);

    // Reference interval for the BLEU of the deletion case. Left failing on
    // purpose: with clipped precisions p1 = 1, p2 >= 32/33, p3 >= 30/32,
    // p4 >= 28/31 and brevity penalty exp(-1/34), ANY single-token deletion
    // from a 35-token ground truth scores >= 92.2, so the quoted interval
    // 89.66 +/- 2.0 cannot be reached by this perturbation. See the assert
    // message for the value actually computed.
    assert!(
        (87.66..=91.66).contains(&bleu_v),
        "BLEU-4 for the single-deletion case is {bleu_v:.4}, outside the quoted 89.66 +/- 2.0; \
         the interval is analytically unreachable for one deletion from 35 tokens (minimum ~92.2 \
         given p1 = 1, p2 >= 32/33, p3 >= 30/32, p4 >= 28/31, BP = exp(-1/34))"
    );
    pass(2, "single-deletion and identical-sequence metric values reproduced");
}

/// Criterion 3: the DP edit distance under WER equals the recursive
/// definition for every pair of sequences of length <= 7 over {0,1,2}.
#[test]
fn criterion_3_wer_oracle_equivalence() {
    // All 3280 sequences of length 0..=7 over a 3-symbol alphabet.
    let mut seqs: Vec<Vec<u8>> = vec![vec![]];
    for len in 1..=7usize {
        let count = 3usize.pow(len as u32);
        for mut code in 0..count {
            let mut s = Vec::with_capacity(len);
            for _ in 0..len {
                s.push((code % 3) as u8);
                code /= 3;
            }
            seqs.push(s);
        }
    }
    assert_eq!(seqs.len(), 3280);

    let checked: usize = (0..seqs.len())
        .into_par_iter()
        .map(|i| {
            let a = &seqs[i];
            let mut n = 0;
            for b in &seqs[i..] {
                let dp = edit_distance(a, b);
                let oracle = common::oracle_edit_distance(a, b);
                assert_eq!(dp, oracle, "edit_distance disagrees with the recursive oracle on {a:?} vs {b:?}");
                assert_eq!(edit_distance(b, a), dp, "edit distance must be symmetric");
                n += 1;
            }
            n
        })
        .sum();
    assert_eq!(checked, 3280 * 3281 / 2);

    // WER itself is the distance over the ground-truth length; spot-check the
    // normalization across a spread of pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let a = &seqs[rng.gen_range(0..seqs.len())];
        let b = &seqs[rng.gen_range(1..seqs.len())]; // index 0 is the empty sequence
        if b.is_empty() {
            continue;
        }
        let words = |s: &[u8]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let expect = edit_distance(a, b) as f64 / b.len() as f64;
        assert_eq!(wer(&words(a), &words(b)).unwrap(), expect);
    }
    pass(3, &format!("{checked} unordered pairs match the recursive oracle exactly"));
}

/// Criterion 4: corpus BLEU-4 agrees with the independent implementation on
/// randomized corpora, under both smoothing settings, within 1e-9.
#[test]
fn criterion_4_bleu_oracle_equivalence() {
    let mut corpora = common::random_corpora(41, 100);
    // Degenerate shapes the random draw might miss.
    corpora.push(vec![(vec![], toks(&["a", "b"]))]); // empty prediction
    corpora.push(vec![(toks(&["a", "b"]), toks(&["a"]))]); // short ground truth
    corpora.push(vec![(toks(&["a", "b", "c"]), toks(&["a", "b", "c"]))]); // no 4-gram denominator
    corpora.push(vec![(toks(&["x", "y", "z", "w", "v"]), toks(&["a", "b", "c", "d", "e"]))]); // disjoint

    for (i, corpus) in corpora.iter().enumerate() {
        let pairs: Vec<ScoredPair> =
            corpus.iter().map(|(p, g)| pair(p.clone(), g.clone())).collect();
        for (smoothing, exp) in [(Smoothing::Exp, true), (Smoothing::Off, false)] {
            let lib = corpus_bleu(&pairs, smoothing).unwrap();
            let oracle = common::oracle_corpus_bleu(corpus, exp);
            assert!(
                (lib - oracle).abs() < 1e-9,
                "corpus {i} ({smoothing:?}): library {lib:.12} vs oracle {oracle:.12}"
            );
        }
    }
    pass(4, &format!("{} corpora agree with the direct implementation within 1e-9", corpora.len()));
}

/// Criterion 5: extraction over the hand-marked fixture suite reproduces the
/// golden snippets byte-for-byte and discards nested/unbalanced tables with
/// warnings.
#[test]
fn criterion_5_extraction_soundness() {
    let scan = scan_corpus(&common::fixture_corpus(), DEFAULT_MAX_BYTES).unwrap();
    assert!(scan.warnings.is_empty(), "fixture scan warnings: {:?}", scan.warnings);
    assert_eq!(
        scan.documents.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(),
        ["paperA/main.tex", "paperB/main.tex", "sub/paperC/main.tex"]
    );

    let mut goldens: BTreeMap<String, String> = BTreeMap::new();
    for entry in fs::read_dir(common::golden_dir()).unwrap() {
        let path = entry.unwrap().path();
        goldens.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read_to_string(&path).unwrap(),
        );
    }
    assert_eq!(goldens.len(), 19, "golden suite should hold 19 extractable tables");

    let mut per_doc: BTreeMap<&str, usize> = BTreeMap::new();
    let mut warned: Vec<String> = Vec::new();
    for doc in &scan.documents {
        let extraction = extract_document(doc);
        for snippet in &extraction.snippets {
            let name = common::golden_name(&snippet.doc_id, snippet.snippet_index);
            let golden = goldens
                .remove(&name)
                .unwrap_or_else(|| panic!("extracted snippet {name} has no golden file"));
            assert_eq!(
                snippet.code, golden,
                "snippet {name} differs from its golden file\nextracted:\n{:?}\ngolden:\n{:?}",
                snippet.code, golden
            );
            *per_doc.entry(doc.doc_id.as_str()).or_default() += 1;
        }
        warned.extend(extraction.warnings.iter().map(|w| w.message.clone()));
    }
    assert!(goldens.is_empty(), "golden files never produced: {:?}", goldens.keys());
    assert_eq!(per_doc.get("paperA/main.tex"), Some(&6));
    assert_eq!(per_doc.get("paperB/main.tex"), Some(&5));
    assert_eq!(per_doc.get("sub/paperC/main.tex"), Some(&8));
    assert!(
        warned.iter().any(|m| m.contains("nested")),
        "nested table should be discarded with a warning, got {warned:?}"
    );
    assert!(
        warned.iter().any(|m| m.contains("unbalanced")),
        "unbalanced table should be discarded with a warning, got {warned:?}"
    );
    assert_eq!(warned.len(), 2, "exactly the two discard warnings expected: {warned:?}");
    pass(5, "19 snippets match goldens byte-for-byte; nested and unbalanced discarded with warnings");
}

/// Criterion 6: structure streams of randomly generated flat r x c tables
/// satisfy the counting laws exactly.
#[test]
fn criterion_6_counting_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let structure = builder("structure").unwrap();
    for case in 0..200 {
        let rows = rng.gen_range(1..=8usize);
        let cols = rng.gen_range(1..=6usize);
        let mut spec = String::new();
        for _ in 0..cols {
            if rng.gen_bool(0.2) {
                spec.push('|');
            }
            spec.push(['l', 'r', 'c'][rng.gen_range(0..3)]);
        }
        let mut code = format!("\\begin{{tabular}}{{{spec}}}\n");
        for _ in 0..rows {
            if rng.gen_bool(0.3) {
                code.push_str("\\hline\n");
            }
            let cells: Vec<String> = (0..cols)
                .map(|_| {
                    let words = rng.gen_range(1..=3);
                    (0..words)
                        .map(|_| {
                            let len = rng.gen_range(1..=6);
                            (0..len).map(|_| (b'a' + rng.gen_range(0..26)) as char).collect::<String>()
                        })
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            code.push_str(&cells.join(" & "));
            code.push_str(" \\\\\n");
        }
        code.push_str("\\end{tabular}");

        let tokens = structure
            .build(&code)
            .unwrap_or_else(|e| panic!("case {case} rejected: {e} for\n{code}"));
        let count = |t: &str| tokens.iter().filter(|tok| tok.as_str() == t).count();
        assert_eq!(count("CELL"), rows * cols, "CELL count in case {case}:\n{code}");
        assert_eq!(count("\\\\"), rows, "row-end count in case {case}:\n{code}");
        let alignments = count("l") + count("r") + count("c");
        assert_eq!(alignments, cols, "alignment count in case {case}:\n{code}");
    }
    pass(6, "200 random flat tables satisfy count(CELL) = r*c, count(\\\\) = r, alignments = c");
}

/// Criterion 7: split fractions over 10,000 synthetic snippets stay within
/// +/- 1% of 80/10/10, and all 12 font variants of a snippet land in the same
/// split.
#[test]
fn criterion_7_split_discipline() {
    let fonts = textab::render::FONT_PACKAGES;
    let units: Vec<(String, u32)> = (0..10_000u32)
        .map(|i| (format!("synthetic/doc{:04}.tex", i / 10), i % 10))
        .collect();

    // Hash-threshold assignment is statistical; 10k draws must sit within a
    // percentage point of the nominal ratios.
    let mut counts = [0usize; 3];
    for (doc, idx) in &units {
        match assign_split(doc, *idx) {
            Split::Train => counts[0] += 1,
            Split::Val => counts[1] += 1,
            Split::Test => counts[2] += 1,
        }
    }
    let fracs: Vec<f64> = counts.iter().map(|&c| c as f64 / units.len() as f64).collect();
    println!("  hash split fractions: train {:.4}, val {:.4}, test {:.4}", fracs[0], fracs[1], fracs[2]);
    for (frac, nominal) in fracs.iter().zip([0.8, 0.1, 0.1]) {
        assert!(
            (frac - nominal).abs() <= 0.01,
            "split fraction {frac:.4} drifts more than 1% from {nominal}"
        );
    }

    // Manifest-level check: one structure stream per snippet, fanned out over
    // all 12 fonts, must keep every variant of a snippet in one split.
    let streams: Vec<TokenStreamRecord> = units
        .iter()
        .map(|(doc, idx)| TokenStreamRecord {
            doc_id: doc.clone(),
            snippet_index: *idx,
            kind: StreamKind::Structure,
            tokens: toks(&["{", "c", "}"]),
        })
        .collect();
    let renders: BTreeMap<(String, u32), Vec<ImageVariant>> = units
        .iter()
        .map(|(doc, idx)| {
            let variants = fonts
                .iter()
                .map(|font| ImageVariant {
                    font_package: font.to_string(),
                    aspect_mode: "conserved".into(),
                    image: format!("images/{font}.jpg"),
                })
                .collect();
            ((doc.clone(), *idx), variants)
        })
        .collect();
    let entries = build_manifest(Variant::Tsd250, &streams, Some(&renders));
    assert_eq!(entries.len(), units.len() * fonts.len());

    let mut split_of: BTreeMap<(String, u32), BTreeSet<Split>> = BTreeMap::new();
    let mut entry_counts = [0usize; 3];
    for entry in &entries {
        split_of.entry((entry.doc_id.clone(), entry.snippet_index)).or_default().insert(entry.split);
        entry_counts[match entry.split {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }] += 1;
    }
    assert_eq!(split_of.len(), units.len());
    assert!(
        split_of.values().all(|s| s.len() == 1),
        "every font variant of a snippet must share the snippet's split"
    );
    for (count, nominal) in entry_counts.iter().zip([0.8, 0.1, 0.1]) {
        let frac = *count as f64 / entries.len() as f64;
        assert!((frac - nominal).abs() <= 0.01, "manifest split fraction {frac:.4} vs {nominal}");
    }
    pass(7, "hash and manifest split fractions within 1%; font variants split-coherent");
}

/// Criterion 8: render geometry through the real toolchain. Skips with a
/// visible line when no TeX toolchain is installed, unless
/// TEXTAB_REQUIRE_TOOLCHAIN is set.
#[test]
fn criterion_8_render_geometry() {
    let raster_candidates =
        [DEFAULT_RASTER_COMMAND.to_string(), DEFAULT_RASTER_COMMAND.replacen("magick", "convert", 1)];
    let toolchain = raster_candidates.iter().find_map(|raster| {
        let tc = Toolchain::new(DEFAULT_TEX_COMMAND, raster, 120).ok()?;
        tc.check_available().ok().map(|()| tc)
    });
    let Some(toolchain) = toolchain else {
        if std::env::var_os("TEXTAB_REQUIRE_TOOLCHAIN").is_some() {
            panic!("TEXTAB_REQUIRE_TOOLCHAIN is set but pdflatex/magick/convert are not all in PATH");
        }
        println!("acceptance criterion 8: SKIP (no TeX toolchain in PATH; set TEXTAB_REQUIRE_TOOLCHAIN=1 to require it)");
        return;
    };

    let cells: Vec<String> = (0..10).map(|i| format!("col{i}")).collect();
    let wide = format!(
        "\\begin{{tabular}}{{{}}}\n{} \\\\\n{} \\\\\n\\end{{tabular}}",
        "c".repeat(10),
        cells.join(" & "),
        cells.join(" & ")
    );
    let snippet = textab::extract::TableSnippet {
        doc_id: "wide/fixture.tex".into(),
        snippet_index: 0,
        code: wide,
    };

    let out = tempfile::tempdir().unwrap();
    let defaults = PipelineConfig::default();
    let base = RenderSpec {
        font_package: "courier".into(),
        aspect_mode: AspectMode::Conserved,
        dpi: 300,
        target_px: 400,
        blur: defaults.blur,
        jpeg_quality: defaults.jpeg_quality,
    };
    let records = render_all(
        std::slice::from_ref(&snippet),
        &["courier".to_string()],
        &[AspectMode::Conserved, AspectMode::Fixed],
        &base,
        &toolchain,
        &out.path().join("images"),
        2,
    )
    .unwrap();
    assert_eq!(records.len(), 2);

    for record in &records {
        assert_eq!(
            record.status,
            textab::render::RenderStatus::Ok,
            "render failed: {:?} {:?}",
            record.reason,
            record.log_tail
        );
        let (w, h) = (record.width_px.unwrap(), record.height_px.unwrap());
        match record.aspect_mode {
            AspectMode::Fixed => assert_eq!((w, h), (400, 400), "fixed mode must be 400x400"),
            AspectMode::Conserved => {
                assert_eq!(w.max(h), 400, "conserved mode must hit 400 on the long side");
                let (pw, ph) = (record.pre_width_px.unwrap() as f64, record.pre_height_px.unwrap() as f64);
                let expected_short = (400.0 * pw.min(ph) / pw.max(ph)).round();
                assert!(
                    (w.min(h) as f64 - expected_short).abs() <= 1.0,
                    "conserved short side {} vs expected {expected_short} from {pw}x{ph}",
                    w.min(h)
                );
            }
        }
        // White background: all four corners of the JPEG should be near-white.
        let image_path = out.path().join(record.image.as_ref().unwrap());
        let img = image::open(&image_path).unwrap().to_rgb8();
        let (iw, ih) = img.dimensions();
        for (x, y) in [(0, 0), (iw - 1, 0), (0, ih - 1), (iw - 1, ih - 1)] {
            let px = img.get_pixel(x, y);
            assert!(
                px.0.iter().all(|&ch| ch >= 240),
                "corner ({x},{y}) of {image_path:?} is not white: {px:?}"
            );
        }
    }
    pass(8, "conserved hits 400 on the long side with ratio kept; fixed is exactly 400x400 on white");
}

/// Criterion 9: extract -> tokenize -> build twice produces byte-identical
/// manifests and stats reports.
#[test]
fn criterion_9_end_to_end_determinism() {
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for out in [out_a.path(), out_b.path()] {
        let config = fixture_config(out);
        run_extract(&config).unwrap();
        run_tokenize(&config).unwrap();
        run_build(&config).unwrap();
        texts.push(run_stats(&config).unwrap());
    }
    assert_eq!(texts[0], texts[1], "stats report text differs between runs");

    let paths_a = ArtifactPaths::new(out_a.path());
    let paths_b = ArtifactPaths::new(out_b.path());
    let mut compared = Vec::new();
    for variant in [Variant::Tsd250, Variant::Tsd500, Variant::Tcd250, Variant::Tcd500] {
        compared.push((paths_a.manifest(variant), paths_b.manifest(variant)));
        compared.push((paths_a.manifest_stats(variant), paths_b.manifest_stats(variant)));
    }
    compared.push((paths_a.stats_report(), paths_b.stats_report()));
    compared.push((paths_a.snippets(), paths_b.snippets()));
    compared.push((paths_a.streams(StreamKind::Structure), paths_b.streams(StreamKind::Structure)));
    compared.push((paths_a.streams(StreamKind::Content), paths_b.streams(StreamKind::Content)));
    compared.push((paths_a.vocab(StreamKind::Structure), paths_b.vocab(StreamKind::Structure)));
    compared.push((paths_a.vocab(StreamKind::Content), paths_b.vocab(StreamKind::Content)));
    for (a, b) in &compared {
        let bytes_a = fs::read(a).unwrap_or_else(|e| panic!("missing artifact {a:?}: {e}"));
        let bytes_b = fs::read(b).unwrap();
        assert_eq!(bytes_a, bytes_b, "artifact {a:?} differs between the two runs");
    }
    pass(9, &format!("{} artifacts byte-identical across independent runs", compared.len()));
}
