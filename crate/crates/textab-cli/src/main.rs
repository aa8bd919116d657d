//! Command-line front end: one subcommand per pipeline stage, configured by
//! an optional key=value file plus flag overrides. Logs go to stderr;
//! artifacts go to files under the output root.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use textab::config::PipelineConfig;
use textab::pipeline;

#[derive(Parser)]
#[command(name = "textab", version, about = "Build table-image datasets from LaTeX sources")]
struct Cli {
    /// Key=value config file; flags override its settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config setting, e.g. --set jobs=4 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Corpus root directory (config key corpus_root).
    #[arg(long, global = true, value_name = "DIR")]
    corpus: Option<PathBuf>,

    /// Output root directory (config key output_root).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the corpus for .tex files and extract cleaned table snippets.
    Extract,
    /// Turn extracted snippets into structure and content token streams.
    Tokenize {
        /// Replace command tokens rarer than this corpus frequency.
        #[arg(long, value_name = "N")]
        rare_threshold: Option<u64>,
    },
    /// Compile and rasterize each snippet per font and aspect mode.
    Render {
        /// Comma-separated font packages, or `all`.
        #[arg(long, value_name = "LIST")]
        fonts: Option<String>,
        /// Aspect regime: conserved, fixed, or both.
        #[arg(long, value_name = "MODE")]
        aspect: Option<String>,
        /// Parallel render jobs.
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        /// Per-subprocess timeout in seconds.
        #[arg(long, value_name = "SECONDS")]
        timeout: Option<u64>,
    },
    /// Assemble dataset manifests for the configured caps.
    Build {
        /// Comma-separated token caps (250 and/or 500).
        #[arg(long, value_name = "LIST")]
        caps: Option<String>,
    },
    /// Write the per-variant statistics table.
    Stats,
    /// Score a predictions file against a manifest.
    Eval {
        /// Variant name (e.g. TSD-250) or path to a manifest file.
        #[arg(long, value_name = "MANIFEST")]
        manifest: String,
        /// Predictions file: JSON lines of {sample_id, tokens}.
        #[arg(long, value_name = "FILE")]
        pred: PathBuf,
        /// Comma-separated metrics.
        #[arg(long, value_name = "LIST", default_value = "ema,bleu,wer")]
        metrics: String,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    for setting in &cli.set {
        let Some((key, value)) = setting.split_once('=') else {
            bail!("--set expects KEY=VALUE, got `{setting}`");
        };
        config.apply(key.trim(), value)?;
    }
    if let Some(corpus) = &cli.corpus {
        config.corpus_root = corpus.clone();
    }
    if let Some(out) = &cli.out {
        config.output_root = out.clone();
    }
    Ok(config)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let mut config = load_config(&cli)?;

    match &cli.command {
        Command::Extract => {
            let summary = pipeline::run_extract(&config)?;
            log::info!(
                "extracted {} snippets from {} documents ({} warnings)",
                summary.snippets,
                summary.documents,
                summary.warnings
            );
        }
        Command::Tokenize { rare_threshold } => {
            if let Some(threshold) = rare_threshold {
                config.rare_threshold = *threshold;
            }
            let summary = pipeline::run_tokenize(&config)?;
            log::info!(
                "tokenized {} structure / {} content streams ({} rejects); vocab {} / {}",
                summary.structure_streams,
                summary.content_streams,
                summary.rejects,
                summary.structure_vocab,
                summary.content_vocab
            );
        }
        Command::Render { fonts, aspect, jobs, timeout } => {
            if let Some(fonts) = fonts {
                config.apply("fonts", fonts)?;
            }
            if let Some(aspect) = aspect {
                config.apply("aspect", aspect)?;
            }
            if let Some(jobs) = jobs {
                config.jobs = *jobs;
            }
            if let Some(timeout) = timeout {
                config.timeout_secs = *timeout;
            }
            let summary = pipeline::run_render(&config)?;
            log::info!("rendered {} images, {} failures", summary.ok, summary.failed);
            if summary.failed > 0 {
                log::warn!("{} render jobs failed; see images/renders.jsonl", summary.failed);
            }
        }
        Command::Build { caps } => {
            if let Some(caps) = caps {
                config.apply("caps", caps)?;
            }
            let summary = pipeline::run_build(&config)?;
            for (variant, entries) in &summary.variants {
                log::info!("built {} with {} entries", variant.name(), entries);
            }
        }
        Command::Stats => {
            let report = pipeline::run_stats(&config)?;
            print!("{report}");
        }
        Command::Eval { manifest, pred, metrics } => {
            let names: Vec<String> =
                metrics.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
            let report = pipeline::run_eval(&config, manifest, pred, &names)?;
            print!("{}", report.to_text());
        }
    }
    Ok(())
}
