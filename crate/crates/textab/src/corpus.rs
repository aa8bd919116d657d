//! Corpus ingestion: enumerate LaTeX sources under a root directory.
//!
//! Each `.tex` file becomes one independent document. Multi-file projects are
//! not stitched together; downstream stages only care about files that
//! actually contain `tabular` environments, and cross-file macro resolution
//! is out of scope.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Files larger than this are skipped; guards against generated monsters.
pub const DEFAULT_MAX_BYTES: u64 = 10 * 1024 * 1024;

/// Optional sidecar file mapping doc_id to a subject label.
pub const CATEGORY_SIDECAR: &str = "categories.tsv";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TexDocument {
    /// Relative path under the corpus root, `/`-separated. Unique per scan.
    pub doc_id: String,
    /// Subject label from the sidecar file, if any.
    pub category: Option<String>,
    /// Source decoded as UTF-8; invalid sequences are lossily replaced so the
    /// tokenizer never sees raw undecodable bytes.
    pub text: String,
    pub byte_len: u64,
}

/// A non-fatal problem encountered during the scan, kept as data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanWarning {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Scan {
    pub documents: Vec<TexDocument>,
    pub warnings: Vec<ScanWarning>,
}

/// Walks `root` and loads every readable `.tex` file (case-insensitive
/// extension) of size ≤ `max_bytes`, ordered lexicographically by relative
/// path so two scans of an unchanged tree are identical.
///
/// Unreadable files are skipped with a warning; an unreadable root is fatal.
pub fn scan_corpus(root: &Path, max_bytes: u64) -> Result<Scan> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus root is not a directory"),
        ));
    }
    let categories = load_categories(root)?;

    let mut entries: Vec<(String, std::path::PathBuf)> = Vec::new();
    let mut warnings = Vec::new();
    for item in WalkDir::new(root).follow_links(false) {
        let item = match item {
            Ok(i) => i,
            Err(e) => {
                // An unreadable subdirectory is a per-item problem, but an
                // unreadable root means nothing was scanned at all.
                if e.path() == Some(root) {
                    return Err(Error::io(root, e.into()));
                }
                warnings.push(ScanWarning {
                    path: e.path().map(|p| p.display().to_string()).unwrap_or_default(),
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        if !item.file_type().is_file() {
            continue;
        }
        let ext_is_tex = item
            .path()
            .extension()
            .map(|e| e.eq_ignore_ascii_case("tex"))
            .unwrap_or(false);
        if !ext_is_tex {
            continue;
        }
        let rel = item
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let doc_id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        entries.push((doc_id, item.path().to_path_buf()));
    }
    // Sort on the doc_id string rather than relying on traversal order, so
    // the order is a plain lexicographic one independent of tree layout.
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let mut documents = Vec::new();
    for (doc_id, path) in entries {
        let meta = match fs::metadata(&path) {
            Ok(m) => m,
            Err(e) => {
                warnings.push(ScanWarning {
                    path: doc_id,
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        if meta.len() > max_bytes {
            warnings.push(ScanWarning {
                path: doc_id,
                reason: format!("skipped: {} bytes exceeds max_bytes {}", meta.len(), max_bytes),
            });
            continue;
        }
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                warnings.push(ScanWarning {
                    path: doc_id,
                    reason: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        let byte_len = bytes.len() as u64;
        let text = String::from_utf8_lossy(&bytes).into_owned();
        documents.push(TexDocument {
            category: categories.get(&doc_id).cloned(),
            doc_id,
            text,
            byte_len,
        });
    }
    Ok(Scan { documents, warnings })
}

/// Counts documents per category; unlabeled documents land in "unknown".
pub fn category_histogram<'a, I>(docs: I) -> BTreeMap<String, usize>
where
    I: IntoIterator<Item = &'a TexDocument>,
{
    let mut hist = BTreeMap::new();
    for doc in docs {
        let key = doc.category.clone().unwrap_or_else(|| "unknown".to_string());
        *hist.entry(key).or_insert(0) += 1;
    }
    hist
}

/// Reads the optional `categories.tsv` sidecar (doc_id TAB category).
fn load_categories(root: &Path) -> Result<BTreeMap<String, String>> {
    let path = root.join(CATEGORY_SIDECAR);
    let mut map = BTreeMap::new();
    let contents = match fs::read_to_string(&path) {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(map),
        Err(e) => return Err(Error::io(&path, e)),
    };
    for (idx, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((doc_id, category)) = line.split_once('\t') else {
            return Err(Error::Format {
                path,
                line: idx + 1,
                message: "expected doc_id TAB category".into(),
            });
        };
        map.insert(doc_id.to_string(), category.trim().to_string());
    }
    Ok(map)
}
