//! Image rendering: wrap each snippet in a standalone document per font,
//! compile it with an external TeX engine, and rasterize the PDF to a JPG
//! under one of two aspect regimes.
//!
//! Both external programs are configured as command templates so any engine
//! or rasterizer with the same contract works. A template is split on
//! whitespace; each argument may carry the placeholders `{input}`,
//! `{output}`, `{dpi}`, `{resize}`, `{blur}` and `{quality}`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::TableSnippet;

/// The twelve font packages used for augmentation.
pub const FONT_PACKAGES: [&str; 12] = [
    "courier", "helvet", "palatino", "bookman", "mathptmx", "utopia", "tgbonum", "tgtermes",
    "tgpagella", "tgschola", "charter", "tgcursor",
];

pub const DEFAULT_DPI: u32 = 300;
pub const DEFAULT_TARGET_PX: u32 = 400;
pub const DEFAULT_BLUR: f64 = 0.8;
pub const DEFAULT_JPEG_QUALITY: u32 = 95;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

pub const DEFAULT_TEX_COMMAND: &str = "pdflatex -interaction=nonstopmode -halt-on-error {input}";
pub const DEFAULT_RASTER_COMMAND: &str = "magick -density {dpi} {input} -background white \
     -alpha remove -alpha off -resize {resize} -blur 0x{blur} -quality {quality} {output}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AspectMode {
    /// Larger dimension becomes `target_px`, ratio preserved.
    Conserved,
    /// Exactly `target_px` × `target_px`, distorting if needed.
    Fixed,
}

impl AspectMode {
    pub fn name(self) -> &'static str {
        match self {
            AspectMode::Conserved => "conserved",
            AspectMode::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Option<AspectMode> {
        match s {
            "conserved" => Some(AspectMode::Conserved),
            "fixed" => Some(AspectMode::Fixed),
            _ => None,
        }
    }

    /// Geometry argument for the rasterizer: a plain box fits the image
    /// inside while preserving ratio; `!` forces exact dimensions.
    pub fn resize_geometry(self, target_px: u32) -> String {
        match self {
            AspectMode::Conserved => format!("{target_px}x{target_px}"),
            AspectMode::Fixed => format!("{target_px}x{target_px}!"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderSpec {
    pub font_package: String,
    pub aspect_mode: AspectMode,
    pub dpi: u32,
    pub target_px: u32,
    pub blur: f64,
    pub jpeg_quality: u32,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if !FONT_PACKAGES.contains(&self.font_package.as_str()) {
            return Err(Error::Config(format!(
                "unknown font package `{}`; known packages: {}",
                self.font_package,
                FONT_PACKAGES.join(", ")
            )));
        }
        if self.dpi == 0 || self.target_px == 0 {
            return Err(Error::Config("dpi and target_px must be positive".into()));
        }
        if !(self.blur > 0.0 && self.blur <= 1.0) {
            return Err(Error::Config(format!("blur must be in (0, 1], got {}", self.blur)));
        }
        Ok(())
    }
}

/// Emits a complete standalone document: empty page style, the one varying
/// font import, rules and row-span support, and the page cropped tightly
/// around the table. Two fonts differ only in the `\usepackage` line.
pub fn emit_tex_document(snippet_code: &str, font_package: &str) -> String {
    format!(
        "\\documentclass{{article}}\n\
         \\usepackage{{{font_package}}}\n\
         \\usepackage{{booktabs}}\n\
         \\usepackage{{multirow}}\n\
         \\usepackage[active,tightpage]{{preview}}\n\
         \\pagestyle{{empty}}\n\
         \\begin{{document}}\n\
         \\begin{{preview}}\n\
         {snippet_code}\n\
         \\end{{preview}}\n\
         \\end{{document}}\n"
    )
}

/// External command pair with a shared per-process timeout.
#[derive(Debug, Clone)]
pub struct Toolchain {
    pub tex_template: Vec<String>,
    pub raster_template: Vec<String>,
    pub timeout: Duration,
}

impl Toolchain {
    pub fn new(tex_command: &str, raster_command: &str, timeout_secs: u64) -> Result<Toolchain> {
        let tex_template: Vec<String> = tex_command.split_whitespace().map(str::to_string).collect();
        let raster_template: Vec<String> =
            raster_command.split_whitespace().map(str::to_string).collect();
        if tex_template.is_empty() || raster_template.is_empty() {
            return Err(Error::Config("tex_command and raster_command must be nonempty".into()));
        }
        Ok(Toolchain { tex_template, raster_template, timeout: Duration::from_secs(timeout_secs) })
    }

    /// Errors unless both programs resolve to an executable, so a missing
    /// toolchain fails up front instead of once per snippet.
    pub fn check_available(&self) -> Result<()> {
        for (what, template) in [("tex_command", &self.tex_template), ("raster_command", &self.raster_template)] {
            let program = &template[0];
            if !program_in_path(program) {
                return Err(Error::Config(format!(
                    "{what} program `{program}` not found; install it or point {what} at an available binary"
                )));
            }
        }
        Ok(())
    }
}

fn program_in_path(program: &str) -> bool {
    let candidate = Path::new(program);
    if candidate.components().count() > 1 {
        return candidate.is_file();
    }
    let Some(paths) = std::env::var_os("PATH") else { return false };
    std::env::split_paths(&paths).any(|dir| dir.join(program).is_file())
}

/// Fills the placeholders of one command template.
fn substitute_args(template: &[String], vars: &BTreeMap<&str, String>) -> Vec<String> {
    template
        .iter()
        .map(|arg| {
            let mut arg = arg.clone();
            for (key, value) in vars {
                arg = arg.replace(&format!("{{{key}}}"), value);
            }
            arg
        })
        .collect()
}

struct Finished {
    timed_out: bool,
    exit_code: Option<i32>,
    success: bool,
}

/// Runs one command with stdout/stderr captured to files, killing it when
/// the timeout elapses. Polling keeps this portable; render jobs are seconds
/// long so 25 ms granularity is irrelevant.
fn run_with_timeout(
    args: &[String],
    cwd: &Path,
    timeout: Duration,
    stdout_path: &Path,
    stderr_path: &Path,
) -> std::io::Result<Finished> {
    let stdout = File::create(stdout_path)?;
    let stderr = File::create(stderr_path)?;
    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::from(stdout))
        .stderr(Stdio::from(stderr))
        .spawn()?;
    let deadline = Instant::now() + timeout;
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Finished {
                timed_out: false,
                exit_code: status.code(),
                success: status.success(),
            });
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(Finished { timed_out: true, exit_code: None, success: false });
        }
        std::thread::sleep(Duration::from_millis(25));
    }
}

/// Width and height in points of the first `/MediaBox` in the PDF.
pub fn parse_pdf_mediabox(bytes: &[u8]) -> Option<(f64, f64)> {
    let text = String::from_utf8_lossy(bytes);
    let start = text.find("/MediaBox")? + "/MediaBox".len();
    let rest = &text[start..];
    let open = rest.find('[')?;
    let close = rest[open..].find(']')? + open;
    let nums: Vec<f64> = rest[open + 1..close]
        .split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    if nums.len() != 4 {
        return None;
    }
    let (w, h) = ((nums[2] - nums[0]).abs(), (nums[3] - nums[1]).abs());
    if w <= 0.0 || h <= 0.0 {
        return None;
    }
    Some((w, h))
}

/// Converts a point size to pixels at the given density.
pub fn points_to_pixels(points: f64, dpi: u32) -> u32 {
    (points * dpi as f64 / 72.0).round().max(1.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderStatus {
    Ok,
    Failed,
}

/// Outcome of one (snippet, font, aspect) render job. Failed jobs keep the
/// reason and the tail of the engine log; the pipeline continues past them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderRecord {
    pub doc_id: String,
    pub snippet_index: u32,
    pub font_package: String,
    pub aspect_mode: AspectMode,
    pub status: RenderStatus,
    /// Image path relative to the output root, present on success.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width_px: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height_px: Option<u32>,
    /// Rasterized page size before the aspect resize, at the configured dpi.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_width_px: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_height_px: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_tail: Option<String>,
}

impl RenderRecord {
    fn failed(job: &RenderJob, reason: String, log_tail: Option<String>) -> RenderRecord {
        RenderRecord {
            doc_id: job.snippet.doc_id.clone(),
            snippet_index: job.snippet.snippet_index,
            font_package: job.spec.font_package.clone(),
            aspect_mode: job.spec.aspect_mode,
            status: RenderStatus::Failed,
            image: None,
            width_px: None,
            height_px: None,
            pre_width_px: None,
            pre_height_px: None,
            reason: Some(reason),
            log_tail,
        }
    }
}

/// Replaces every character outside `[A-Za-z0-9._-]` so a doc id can live in
/// a flat file name. Distinct ids can in principle collide after mapping;
/// the snippet index and font keep names unique for any sane corpus layout.
pub fn sanitize_id(doc_id: &str) -> String {
    doc_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

struct RenderJob<'a> {
    snippet: &'a TableSnippet,
    spec: RenderSpec,
}

fn log_tail_of(paths: &[PathBuf], max_chars: usize) -> Option<String> {
    let mut combined = String::new();
    for path in paths {
        let mut buf = String::new();
        if File::open(path).and_then(|mut f| f.read_to_string(&mut buf)).is_ok() {
            combined.push_str(&buf);
        }
    }
    let combined = combined.trim();
    if combined.is_empty() {
        return None;
    }
    let start = combined
        .char_indices()
        .rev()
        .nth(max_chars.saturating_sub(1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Some(combined[start..].to_string())
}

fn render_one(job: &RenderJob<'_>, toolchain: &Toolchain, images_dir: &Path) -> RenderRecord {
    let stem = format!(
        "{}__{}__{}__{}",
        sanitize_id(&job.snippet.doc_id),
        job.snippet.snippet_index,
        job.spec.font_package,
        job.spec.aspect_mode.name()
    );
    let scratch = images_dir.join("scratch").join(&stem);
    let record = render_in_scratch(job, toolchain, images_dir, &scratch, &stem);
    let _ = fs::remove_dir_all(&scratch);
    record
}

fn render_in_scratch(
    job: &RenderJob<'_>,
    toolchain: &Toolchain,
    images_dir: &Path,
    scratch: &Path,
    stem: &str,
) -> RenderRecord {
    if let Err(e) = fs::create_dir_all(scratch) {
        return RenderRecord::failed(job, format!("could not create scratch dir: {e}"), None);
    }
    let tex_path = scratch.join("table.tex");
    let document = emit_tex_document(&job.snippet.code, &job.spec.font_package);
    if let Err(e) = fs::write(&tex_path, document) {
        return RenderRecord::failed(job, format!("could not write tex source: {e}"), None);
    }

    let mut vars: BTreeMap<&str, String> = BTreeMap::new();
    vars.insert("input", "table.tex".to_string());
    let tex_args = substitute_args(&toolchain.tex_template, &vars);
    let tex_out = scratch.join("tex.stdout");
    let tex_err = scratch.join("tex.stderr");
    match run_with_timeout(&tex_args, scratch, toolchain.timeout, &tex_out, &tex_err) {
        Err(e) => return RenderRecord::failed(job, format!("could not spawn tex engine: {e}"), None),
        Ok(f) if f.timed_out => {
            return RenderRecord::failed(
                job,
                format!("tex compile timed out after {}s", toolchain.timeout.as_secs()),
                log_tail_of(&[tex_out, tex_err], 2000),
            )
        }
        Ok(f) if !f.success => {
            return RenderRecord::failed(
                job,
                format!("tex compile failed (exit {:?})", f.exit_code),
                log_tail_of(&[tex_out, tex_err], 2000),
            )
        }
        Ok(_) => {}
    }

    let pdf_path = scratch.join("table.pdf");
    let pdf_bytes = match fs::read(&pdf_path) {
        Ok(b) => b,
        Err(_) => {
            return RenderRecord::failed(
                job,
                "tex engine exited successfully but produced no pdf".into(),
                log_tail_of(&[tex_out, tex_err], 2000),
            )
        }
    };
    let Some((w_pt, h_pt)) = parse_pdf_mediabox(&pdf_bytes) else {
        return RenderRecord::failed(job, "could not parse pdf page size".into(), None);
    };
    let pre_width_px = points_to_pixels(w_pt, job.spec.dpi);
    let pre_height_px = points_to_pixels(h_pt, job.spec.dpi);

    let image_name = format!("{stem}.jpg");
    let image_abs = images_dir.join(&image_name);
    let mut vars: BTreeMap<&str, String> = BTreeMap::new();
    vars.insert("input", "table.pdf".to_string());
    vars.insert("output", image_abs.to_string_lossy().into_owned());
    vars.insert("dpi", job.spec.dpi.to_string());
    vars.insert("resize", job.spec.aspect_mode.resize_geometry(job.spec.target_px));
    vars.insert("blur", job.spec.blur.to_string());
    vars.insert("quality", job.spec.jpeg_quality.to_string());
    let raster_args = substitute_args(&toolchain.raster_template, &vars);
    let ras_out = scratch.join("raster.stdout");
    let ras_err = scratch.join("raster.stderr");
    match run_with_timeout(&raster_args, scratch, toolchain.timeout, &ras_out, &ras_err) {
        Err(e) => return RenderRecord::failed(job, format!("could not spawn rasterizer: {e}"), None),
        Ok(f) if f.timed_out => {
            return RenderRecord::failed(
                job,
                format!("rasterize timed out after {}s", toolchain.timeout.as_secs()),
                log_tail_of(&[ras_out, ras_err], 2000),
            )
        }
        Ok(f) if !f.success => {
            return RenderRecord::failed(
                job,
                format!("rasterize failed (exit {:?})", f.exit_code),
                log_tail_of(&[ras_out, ras_err], 2000),
            )
        }
        Ok(_) => {}
    }

    let (width_px, height_px) = match image::image_dimensions(&image_abs) {
        Ok(dims) => dims,
        Err(e) => {
            return RenderRecord::failed(job, format!("rasterizer produced unreadable image: {e}"), None)
        }
    };

    RenderRecord {
        doc_id: job.snippet.doc_id.clone(),
        snippet_index: job.snippet.snippet_index,
        font_package: job.spec.font_package.clone(),
        aspect_mode: job.spec.aspect_mode,
        status: RenderStatus::Ok,
        image: Some(format!("images/{image_name}")),
        width_px: Some(width_px),
        height_px: Some(height_px),
        pre_width_px: Some(pre_width_px),
        pre_height_px: Some(pre_height_px),
        reason: None,
        log_tail: None,
    }
}

/// Renders every (snippet, font, aspect) combination on a bounded pool and
/// returns the records sorted by that same key, so the records file is
/// deterministic regardless of worker scheduling. The record count always
/// equals `snippets × fonts × modes`; failures are records, not gaps.
pub fn render_all(
    snippets: &[TableSnippet],
    fonts: &[String],
    modes: &[AspectMode],
    base: &RenderSpec,
    toolchain: &Toolchain,
    images_dir: &Path,
    jobs: usize,
) -> Result<Vec<RenderRecord>> {
    fs::create_dir_all(images_dir).map_err(|e| Error::io(images_dir, e))?;
    let mut job_list = Vec::new();
    for snippet in snippets {
        for font in fonts {
            for mode in modes {
                job_list.push(RenderJob {
                    snippet,
                    spec: RenderSpec {
                        font_package: font.clone(),
                        aspect_mode: *mode,
                        dpi: base.dpi,
                        target_px: base.target_px,
                        blur: base.blur,
                        jpeg_quality: base.jpeg_quality,
                    },
                });
            }
        }
    }
    for job in &job_list {
        job.spec.validate()?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("could not build render pool: {e}")))?;
    let mut records: Vec<RenderRecord> =
        pool.install(|| job_list.par_iter().map(|job| render_one(job, toolchain, images_dir)).collect());
    let _ = fs::remove_dir_all(images_dir.join("scratch"));

    records.sort_by(|a, b| {
        (&a.doc_id, a.snippet_index, &a.font_package, a.aspect_mode)
            .cmp(&(&b.doc_id, b.snippet_index, &b.font_package, b.aspect_mode))
    });
    Ok(records)
}
