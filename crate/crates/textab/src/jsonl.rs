//! JSON Lines artifacts with atomic, deterministic writes.
//!
//! Every on-disk artifact the pipeline produces goes through these helpers so
//! that a crash never leaves a half-written file behind (write to a sibling
//! temp file, then rename) and re-running a stage on unchanged input produces
//! byte-identical output.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Serializes `records` one per line and atomically replaces `path`.
pub fn write_jsonl<T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize,
    I: IntoIterator<Item = T>,
{
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, &record).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: 0,
            message: format!("serialize: {e}"),
        })?;
        buf.push(b'\n');
    }
    write_bytes_atomic(path, &buf)
}

/// Reads every record of a JSONL file, reporting the 1-based line on failure.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Atomically writes a text file (reports, TSV tables, rendered LaTeX).
pub fn write_string_atomic(path: &Path, contents: &str) -> Result<()> {
    write_bytes_atomic(path, contents.as_bytes())
}

fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let file = File::create(tmp).map_err(|e| Error::io(tmp, e))?;
        let mut writer = BufWriter::new(file);
        writer.write_all(bytes).map_err(|e| Error::io(tmp, e))?;
        writer.flush().map_err(|e| Error::io(tmp, e))?;
    }
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}
