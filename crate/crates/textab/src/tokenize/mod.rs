//! Tokenization: snippet code to ground-truth token streams.
//!
//! Two stream kinds exist. The structure stream reduces a table to a closed
//! 25-token layout vocabulary; the content stream carries cell text
//! character-by-character. Both are produced by [`StreamBuilder`]
//! implementations looked up by name, so callers select kinds at runtime.

mod content;
pub mod lex;
mod structure;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::extract::{read_bracket_group, read_brace_group, skip_ws, BEGIN_TABULAR, END_TABULAR};

pub use content::{to_content_stream, WORD_DELIMITER};
pub use structure::{to_structure_stream, STRUCTURE_VOCABULARY};

/// Replacement for command tokens below the corpus frequency threshold.
pub const LATEX_TOKEN: &str = "\\LATEX_TOKEN";

/// Default corpus frequency below which command tokens are replaced.
pub const DEFAULT_RARE_THRESHOLD: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamKind {
    Structure,
    Content,
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamKind::Structure => write!(f, "structure"),
            StreamKind::Content => write!(f, "content"),
        }
    }
}

/// One ground-truth token stream, traceable to its snippet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenStreamRecord {
    pub doc_id: String,
    pub snippet_index: u32,
    pub kind: StreamKind,
    pub tokens: Vec<String>,
}

/// A snippet that could not be expressed as a stream of the given kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectRecord {
    pub doc_id: String,
    pub snippet_index: u32,
    pub kind: StreamKind,
    pub reason: String,
}

/// A way of turning snippet code into one token stream kind. Implementations
/// are registered by name and selected at runtime.
pub trait StreamBuilder: Sync + Send {
    fn name(&self) -> &'static str;
    fn kind(&self) -> StreamKind;
    /// `Err` carries the rejection reason; the snippet is skipped for this
    /// stream kind and the reason is recorded as data.
    fn build(&self, code: &str) -> Result<Vec<String>, String>;
}

struct StructureBuilder;

impl StreamBuilder for StructureBuilder {
    fn name(&self) -> &'static str {
        "structure"
    }
    fn kind(&self) -> StreamKind {
        StreamKind::Structure
    }
    fn build(&self, code: &str) -> Result<Vec<String>, String> {
        to_structure_stream(code)
    }
}

struct ContentBuilder;

impl StreamBuilder for ContentBuilder {
    fn name(&self) -> &'static str {
        "content"
    }
    fn kind(&self) -> StreamKind {
        StreamKind::Content
    }
    fn build(&self, code: &str) -> Result<Vec<String>, String> {
        to_content_stream(code)
    }
}

static BUILDERS: [&dyn StreamBuilder; 2] = [&StructureBuilder, &ContentBuilder];

/// All registered stream builders, in a stable order.
pub fn builders() -> &'static [&'static dyn StreamBuilder] {
    &BUILDERS
}

/// Looks up a stream builder by its registered name.
pub fn builder(name: &str) -> Option<&'static dyn StreamBuilder> {
    BUILDERS.iter().copied().find(|b| b.name() == name)
}

/// A command token is `\` followed by ASCII letters only. `\\` (row end) and
/// `\LATEX_TOKEN` (contains `_`) are not command tokens and are never
/// counted or replaced by the rare-token filter.
pub fn is_command_token(tok: &str) -> bool {
    let mut chars = tok.chars();
    chars.next() == Some('\\')
        && tok.len() > 1
        && chars.all(|c| c.is_ascii_alphabetic())
}

/// Keep a stream for a length-capped variant? The cap is inclusive.
pub fn length_filter(tokens: &[String], cap: usize) -> bool {
    tokens.len() <= cap
}

/// Token frequencies over a set of streams of one kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub kind: StreamKind,
    pub counts: BTreeMap<String, u64>,
}

impl Vocabulary {
    pub fn from_streams<'a, I>(kind: StreamKind, streams: I) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts = BTreeMap::new();
        for tokens in streams {
            for tok in tokens {
                *counts.entry(tok.clone()).or_insert(0) += 1;
            }
        }
        Vocabulary { kind, counts }
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    /// TSV rendering: token TAB count, sorted by descending count, ties
    /// broken lexicographically.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&String, &u64)> = self.counts.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let mut out = String::new();
        for (tok, count) in rows {
            out.push_str(tok);
            out.push('\t');
            out.push_str(&count.to_string());
            out.push('\n');
        }
        out
    }
}

/// Replaces every command token whose corpus-wide frequency is below
/// `threshold` with [`LATEX_TOKEN`], in place, and returns the
/// post-replacement vocabulary. Replacement is 1:1, so stream lengths never
/// change. Counting and rewriting both run per-stream in parallel.
pub fn filter_rare(streams: &mut [TokenStreamRecord], threshold: u64) -> Vocabulary {
    let counts: BTreeMap<String, u64> = streams
        .par_iter()
        .fold(BTreeMap::new, |mut acc, stream| {
            for tok in &stream.tokens {
                if is_command_token(tok) {
                    *acc.entry(tok.clone()).or_insert(0) += 1;
                }
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (tok, n) in b {
                *a.entry(tok).or_insert(0) += n;
            }
            a
        });

    streams.par_iter_mut().for_each(|stream| {
        for tok in &mut stream.tokens {
            if is_command_token(tok) && counts.get(tok.as_str()).copied().unwrap_or(0) < threshold {
                *tok = LATEX_TOKEN.to_string();
            }
        }
    });

    let kind = streams.first().map(|s| s.kind).unwrap_or(StreamKind::Content);
    Vocabulary::from_streams(kind, streams.iter().map(|s| s.tokens.as_slice()))
}

/// Splits a snippet into its column specification and body, consuming the
/// wrapper and an optional `[t]`-style position argument.
pub(crate) fn split_tabular(code: &str) -> Result<(String, &str), String> {
    if !code.starts_with(BEGIN_TABULAR) || !code.ends_with(END_TABULAR) {
        return Err("not a tabular snippet".into());
    }
    let mut pos = skip_ws(code, BEGIN_TABULAR.len());
    if code[pos..].starts_with('[') {
        pos = read_bracket_group(code, pos).ok_or("malformed tabular header")?;
        pos = skip_ws(code, pos);
    }
    if !code[pos..].starts_with('{') {
        return Err("missing column specification".into());
    }
    let colspec_end = read_brace_group(code, pos).ok_or("malformed tabular header")?;
    let body_end = code.len() - END_TABULAR.len();
    if colspec_end > body_end {
        return Err("missing column specification".into());
    }
    let colspec = code[pos + 1..colspec_end - 1].to_string();
    Ok((colspec, &code[colspec_end..body_end]))
}
