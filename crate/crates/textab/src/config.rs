//! Pipeline configuration: defaults, a key=value config file, and the
//! validation shared by every stage. The pipeline takes no RNG seed; all
//! nondeterminism-shaped choices (splits, ordering) are hash-derived.

use std::path::{Path, PathBuf};

use crate::corpus::DEFAULT_MAX_BYTES;
use crate::error::{Error, Result};
use crate::metrics::Smoothing;
use crate::render::{
    AspectMode, DEFAULT_BLUR, DEFAULT_DPI, DEFAULT_JPEG_QUALITY, DEFAULT_RASTER_COMMAND,
    DEFAULT_TARGET_PX, DEFAULT_TEX_COMMAND, DEFAULT_TIMEOUT_SECS, FONT_PACKAGES,
};
use crate::tokenize::DEFAULT_RARE_THRESHOLD;

const KNOWN_KEYS: [&str; 16] = [
    "corpus_root",
    "output_root",
    "fonts",
    "aspect",
    "caps",
    "rare_threshold",
    "jobs",
    "tex_command",
    "raster_command",
    "timeout",
    "max_bytes",
    "dpi",
    "target_px",
    "blur",
    "jpeg_quality",
    "bleu_smoothing",
];

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub corpus_root: PathBuf,
    pub output_root: PathBuf,
    pub fonts: Vec<String>,
    pub aspect_modes: Vec<AspectMode>,
    /// Token length caps of the variants to build.
    pub caps: Vec<usize>,
    pub rare_threshold: u64,
    pub jobs: usize,
    pub tex_command: String,
    pub raster_command: String,
    pub timeout_secs: u64,
    pub max_bytes: u64,
    pub dpi: u32,
    pub target_px: u32,
    pub blur: f64,
    pub jpeg_quality: u32,
    pub bleu_smoothing: Smoothing,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_root: PathBuf::from("corpus"),
            output_root: PathBuf::from("out"),
            fonts: FONT_PACKAGES.iter().map(|s| s.to_string()).collect(),
            aspect_modes: vec![AspectMode::Conserved, AspectMode::Fixed],
            caps: vec![250, 500],
            rare_threshold: DEFAULT_RARE_THRESHOLD,
            jobs: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            tex_command: DEFAULT_TEX_COMMAND.to_string(),
            raster_command: DEFAULT_RASTER_COMMAND.to_string(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            max_bytes: DEFAULT_MAX_BYTES,
            dpi: DEFAULT_DPI,
            target_px: DEFAULT_TARGET_PX,
            blur: DEFAULT_BLUR,
            jpeg_quality: DEFAULT_JPEG_QUALITY,
            bleu_smoothing: Smoothing::default(),
        }
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got `{value}`")))
}

/// Parses an aspect selector: `conserved`, `fixed`, `both`, or a comma list.
pub fn parse_aspect_modes(value: &str) -> Result<Vec<AspectMode>> {
    if value.trim() == "both" {
        return Ok(vec![AspectMode::Conserved, AspectMode::Fixed]);
    }
    let mut modes = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        let mode = AspectMode::parse(part).ok_or_else(|| {
            Error::Config(format!("aspect: expected conserved, fixed or both, got `{part}`"))
        })?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        return Err(Error::Config("aspect: at least one mode required".into()));
    }
    Ok(modes)
}

/// Parses a font selector: `all` or a comma-separated subset of the twelve.
pub fn parse_fonts(value: &str) -> Result<Vec<String>> {
    if value.trim() == "all" {
        return Ok(FONT_PACKAGES.iter().map(|s| s.to_string()).collect());
    }
    let mut fonts = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if !FONT_PACKAGES.contains(&part) {
            return Err(Error::Config(format!(
                "fonts: unknown font package `{part}`; known packages: {}",
                FONT_PACKAGES.join(", ")
            )));
        }
        if !fonts.iter().any(|f| f == part) {
            fonts.push(part.to_string());
        }
    }
    if fonts.is_empty() {
        return Err(Error::Config("fonts: at least one font required".into()));
    }
    Ok(fonts)
}

fn parse_caps(value: &str) -> Result<Vec<usize>> {
    let mut caps = Vec::new();
    for part in value.split(',') {
        let cap: usize = parse_int("caps", part)?;
        if cap != 250 && cap != 500 {
            return Err(Error::Config(format!("caps: supported caps are 250 and 500, got {cap}")));
        }
        if !caps.contains(&cap) {
            caps.push(cap);
        }
    }
    caps.sort_unstable();
    if caps.is_empty() {
        return Err(Error::Config("caps: at least one cap required".into()));
    }
    Ok(caps)
}

impl PipelineConfig {
    /// Applies one `key=value` setting; used for both config files and
    /// command-line overrides, so the two cannot drift apart.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus_root" => self.corpus_root = PathBuf::from(value.trim()),
            "output_root" => self.output_root = PathBuf::from(value.trim()),
            "fonts" => self.fonts = parse_fonts(value)?,
            "aspect" => self.aspect_modes = parse_aspect_modes(value)?,
            "caps" => self.caps = parse_caps(value)?,
            "rare_threshold" => self.rare_threshold = parse_int(key, value)?,
            "jobs" => self.jobs = parse_int(key, value)?,
            "tex_command" => self.tex_command = value.trim().to_string(),
            "raster_command" => self.raster_command = value.trim().to_string(),
            "timeout" => self.timeout_secs = parse_int(key, value)?,
            "max_bytes" => self.max_bytes = parse_int(key, value)?,
            "dpi" => self.dpi = parse_int(key, value)?,
            "target_px" => self.target_px = parse_int(key, value)?,
            "blur" => {
                self.blur = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("blur: expected a number, got `{value}`")))?
            }
            "jpeg_quality" => self.jpeg_quality = parse_int(key, value)?,
            "bleu_smoothing" => {
                self.bleu_smoothing = Smoothing::parse(value.trim()).ok_or_else(|| {
                    Error::Config(format!("bleu_smoothing: expected exp or off, got `{value}`"))
                })?
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown config key `{key}`; known keys: {}",
                    KNOWN_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Loads settings from a `key=value` file over the defaults. `#` starts
    /// a comment; blank lines are skipped; values may contain `=`.
    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("expected key=value, got `{line}`"),
                });
            };
            config.apply(key.trim(), value)?;
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fonts.is_empty() {
            return Err(Error::Config("fonts must be nonempty".into()));
        }
        for font in &self.fonts {
            if !FONT_PACKAGES.contains(&font.as_str()) {
                return Err(Error::Config(format!("unknown font package `{font}`")));
            }
        }
        if self.caps.is_empty() {
            return Err(Error::Config("caps must be nonempty".into()));
        }
        for cap in &self.caps {
            if *cap != 250 && *cap != 500 {
                return Err(Error::Config(format!("unsupported cap {cap}")));
            }
        }
        if self.aspect_modes.is_empty() {
            return Err(Error::Config("at least one aspect mode required".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.dpi == 0 || self.target_px == 0 {
            return Err(Error::Config("dpi and target_px must be positive".into()));
        }
        if !(self.blur > 0.0 && self.blur <= 1.0) {
            return Err(Error::Config(format!("blur must be in (0, 1], got {}", self.blur)));
        }
        if self.jpeg_quality == 0 || self.jpeg_quality > 100 {
            return Err(Error::Config(format!("jpeg_quality must be in 1..=100, got {}", self.jpeg_quality)));
        }
        Ok(())
    }
}
