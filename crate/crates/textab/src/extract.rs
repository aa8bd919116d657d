//! Table snippet extraction.
//!
//! A snippet is the text from `\begin{tabular}` through `\end{tabular}`
//! inclusive, after comment removal and noise stripping. The scanners here
//! are escape-aware (`\%`, `\{`, `\\` never confuse them) and treat
//! `\verb<delim>...<delim>` groups as opaque: verbatim text is neither
//! comment-stripped nor noise-stripped nor counted for brace balance.

use serde::{Deserialize, Serialize};

use crate::corpus::TexDocument;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSnippet {
    pub doc_id: String,
    /// Order of appearance among the snippets emitted for this document.
    pub snippet_index: u32,
    /// Cleaned LaTeX from `\begin{tabular}` through `\end{tabular}`.
    pub code: String,
}

/// A snippet-level problem; the document keeps processing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractWarning {
    pub doc_id: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Extraction {
    pub snippets: Vec<TableSnippet>,
    pub warnings: Vec<ExtractWarning>,
}

/// A matched `tabular` environment, as byte offsets into the comment-free
/// document text. Offsets let callers verify the scanner touched nothing
/// outside the span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSpan {
    pub start: usize,
    pub end: usize,
}

pub(crate) const BEGIN_TABULAR: &str = "\\begin{tabular}";
pub(crate) const END_TABULAR: &str = "\\end{tabular}";

/// Commands whose argument groups carry no table information.
const NOISE_COMMANDS: [&str; 4] = ["cite", "ref", "label", "includegraphics"];

/// Runs the full extraction for one document.
pub fn extract_document(doc: &TexDocument) -> Extraction {
    let cleaned = remove_comments(&doc.text);
    let (spans, span_warnings) = extract_spans(&cleaned);
    let mut out = Extraction::default();
    for message in span_warnings {
        out.warnings.push(ExtractWarning {
            doc_id: doc.doc_id.clone(),
            message,
        });
    }
    for span in spans {
        let raw = &cleaned[span.start..span.end];
        let code = match strip_noise(raw) {
            Ok(code) => code,
            Err(reason) => {
                out.warnings.push(ExtractWarning {
                    doc_id: doc.doc_id.clone(),
                    message: format!("snippet rejected: {reason}"),
                });
                continue;
            }
        };
        if let Err(violation) = validate_snippet(&code) {
            out.warnings.push(ExtractWarning {
                doc_id: doc.doc_id.clone(),
                message: format!("snippet rejected: {violation}"),
            });
            continue;
        }
        out.snippets.push(TableSnippet {
            doc_id: doc.doc_id.clone(),
            snippet_index: out.snippets.len() as u32,
            code,
        });
    }
    out
}

/// Deletes everything from each unescaped `%` up to (not including) the line
/// terminator. `\%` survives, and `%` inside a `\verb` group survives.
pub fn remove_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < text.len() {
        let c = char_at(text, i);
        match c {
            '\\' => {
                let end = skip_verb_group(text, i)
                    .or_else(|| read_command(text, i).map(|(_, end)| end))
                    .unwrap_or_else(|| skip_escaped_pair(text, i));
                out.push_str(&text[i..end]);
                i = end;
            }
            '%' => {
                // Drop the comment but keep the terminator so line structure
                // (and therefore any `\\` placement) is unaffected.
                i = match text[i..].find(['\n', '\r']) {
                    Some(off) => i + off,
                    None => text.len(),
                };
            }
            _ => {
                out.push(c);
                i += c.len_utf8();
            }
        }
    }
    out
}

/// Finds every outermost `\begin{tabular}...\end{tabular}` span by balanced
/// matching. Spans containing a nested `tabular` are discarded (tables inside
/// tables cannot serve as ground truth), as are unbalanced begins; both leave
/// a warning.
pub fn extract_spans(text: &str) -> (Vec<RawSpan>, Vec<String>) {
    let mut spans = Vec::new();
    let mut warnings = Vec::new();
    let mut depth = 0usize;
    let mut span_start = 0usize;
    let mut saw_inner = false;

    let mut i = 0;
    while i < text.len() {
        if char_at(text, i) != '\\' {
            i += char_at(text, i).len_utf8();
            continue;
        }
        if let Some(end) = skip_verb_group(text, i) {
            i = end;
            continue;
        }
        match read_command(text, i) {
            Some((name, end)) => {
                let marker_is_begin = name == "begin" && text[end..].starts_with("{tabular}");
                let marker_is_end = name == "end" && text[end..].starts_with("{tabular}");
                if marker_is_begin {
                    if depth == 0 {
                        span_start = i;
                        saw_inner = false;
                    } else {
                        saw_inner = true;
                    }
                    depth += 1;
                    i = end + "{tabular}".len();
                } else if marker_is_end {
                    let marker_end = end + "{tabular}".len();
                    if depth == 0 {
                        warnings.push(format!(
                            "unbalanced: \\end{{tabular}} without a begin at byte {i}"
                        ));
                    } else {
                        depth -= 1;
                        if depth == 0 {
                            if saw_inner {
                                warnings.push(format!(
                                    "nested tabular discarded at bytes {span_start}..{marker_end}"
                                ));
                            } else {
                                spans.push(RawSpan {
                                    start: span_start,
                                    end: marker_end,
                                });
                            }
                        }
                    }
                    i = marker_end;
                } else {
                    i = end;
                }
            }
            None => i = skip_escaped_pair(text, i),
        }
    }
    if depth > 0 {
        warnings.push(format!(
            "unbalanced: \\begin{{tabular}} at byte {span_start} has no matching end"
        ));
    }
    (spans, warnings)
}

/// Deletes citation/reference/label/graphics commands with their argument
/// groups (plus a `~` immediately before them) and whole `figure` /
/// `subfigure` environments. Everything else is preserved byte-for-byte.
pub fn strip_noise(span: &str) -> Result<String, String> {
    let mut out = String::with_capacity(span.len());
    let mut i = 0;
    // True when the last thing copied was a plain `~` character, so the
    // tilde can be popped safely (never part of `\~` or a verb group).
    let mut trailing_plain_tilde = false;
    while i < span.len() {
        let c = char_at(span, i);
        if c != '\\' {
            out.push(c);
            trailing_plain_tilde = c == '~';
            i += c.len_utf8();
            continue;
        }
        if let Some(end) = skip_verb_group(span, i) {
            out.push_str(&span[i..end]);
            trailing_plain_tilde = false;
            i = end;
            continue;
        }
        let Some((name, end)) = read_command(span, i) else {
            let end = skip_escaped_pair(span, i);
            out.push_str(&span[i..end]);
            trailing_plain_tilde = false;
            i = end;
            continue;
        };
        if NOISE_COMMANDS.contains(&name) {
            if trailing_plain_tilde {
                out.pop();
                trailing_plain_tilde = false;
            }
            i = skip_noise_arguments(span, end, name)?;
        } else if name == "begin" {
            if let Some(env) = read_env_name(span, end) {
                if env == "figure" || env == "subfigure" {
                    i = skip_environment(span, end, env)?;
                    trailing_plain_tilde = false;
                    continue;
                }
            }
            out.push_str(&span[i..end]);
            trailing_plain_tilde = false;
            i = end;
        } else {
            out.push_str(&span[i..end]);
            trailing_plain_tilde = false;
            i = end;
        }
    }
    Ok(out)
}

/// Checks every snippet invariant, returning the first violation.
pub fn validate_snippet(code: &str) -> Result<(), String> {
    if !code.starts_with(BEGIN_TABULAR) {
        return Err(format!("does not start with {BEGIN_TABULAR}"));
    }
    if !code.ends_with(END_TABULAR) {
        return Err(format!("does not end with {END_TABULAR}"));
    }
    let mut depth = 0i64;
    let mut tabular_begins = 0usize;
    let mut i = 0;
    while i < code.len() {
        let c = char_at(code, i);
        match c {
            '\\' => {
                if let Some(end) = skip_verb_group(code, i) {
                    i = end;
                    continue;
                }
                if let Some((name, end)) = read_command(code, i) {
                    if NOISE_COMMANDS.contains(&name) {
                        return Err(format!("contains \\{name}"));
                    }
                    if name == "begin" || name == "end" {
                        if let Some(env) = read_env_name(code, end) {
                            if env == "figure" || env == "subfigure" {
                                return Err(format!("contains a {env} environment"));
                            }
                            if env == "tabular" && name == "begin" {
                                tabular_begins += 1;
                                if tabular_begins > 1 {
                                    return Err("contains a nested tabular environment".into());
                                }
                            }
                        }
                    }
                    i = end;
                } else {
                    i = skip_escaped_pair(code, i);
                }
            }
            '%' => return Err("contains comment text".into()),
            '{' => {
                depth += 1;
                i += 1;
            }
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced braces".into());
                }
                i += 1;
            }
            _ => i += c.len_utf8(),
        }
    }
    if depth != 0 {
        return Err("unbalanced braces".into());
    }
    Ok(())
}

// --- low-level scanning helpers -------------------------------------------

fn char_at(text: &str, i: usize) -> char {
    text[i..].chars().next().expect("index within bounds")
}

/// At a backslash: reads `\` + ASCII letter run. Returns (name, end) or None
/// when the next char is not a letter (escaped symbol or `\\`).
fn read_command(text: &str, i: usize) -> Option<(&str, usize)> {
    let rest = &text.as_bytes()[i + 1..];
    let mut len = 0;
    while len < rest.len() && rest[len].is_ascii_alphabetic() {
        len += 1;
    }
    if len == 0 {
        return None;
    }
    Some((&text[i + 1..i + 1 + len], i + 1 + len))
}

/// At a backslash that does not start a command: consumes `\` plus one char.
fn skip_escaped_pair(text: &str, i: usize) -> usize {
    match text[i + 1..].chars().next() {
        Some(c) => i + 1 + c.len_utf8(),
        None => i + 1,
    }
}

/// At a backslash: if this is `\verb` (or `\verb*`), returns the end of the
/// whole group. The group closes at the repeated delimiter or, for malformed
/// input, at the line end (verb arguments cannot span lines).
fn skip_verb_group(text: &str, i: usize) -> Option<usize> {
    let (name, mut pos) = read_command(text, i)?;
    if name != "verb" {
        return None;
    }
    if text[pos..].starts_with('*') {
        pos += 1;
    }
    let delim = text[pos..].chars().next()?;
    if delim.is_whitespace() {
        return None;
    }
    pos += delim.len_utf8();
    for (off, c) in text[pos..].char_indices() {
        if c == delim {
            return Some(pos + off + c.len_utf8());
        }
        if c == '\n' || c == '\r' {
            return Some(pos + off);
        }
    }
    Some(text.len())
}

/// After `\begin` / `\end`: reads `{name}` and returns the bare name.
fn read_env_name(text: &str, i: usize) -> Option<&str> {
    let rest = &text[i..];
    if !rest.starts_with('{') {
        return None;
    }
    let close = rest.find('}')?;
    Some(&rest[1..close])
}

/// Consumes optional whitespace, an optional `[...]` group, more whitespace,
/// and the mandatory `{...}` group of a noise command.
fn skip_noise_arguments(span: &str, mut pos: usize, name: &str) -> Result<usize, String> {
    pos = skip_ws(span, pos);
    if span[pos..].starts_with('[') {
        pos = read_bracket_group(span, pos)
            .ok_or_else(|| format!("\\{name}: unterminated [ ] group"))?;
        pos = skip_ws(span, pos);
    }
    if !span[pos..].starts_with('{') {
        return Err(format!("\\{name}: missing {{ }} argument group"));
    }
    read_brace_group(span, pos).ok_or_else(|| format!("\\{name}: unbalanced argument group"))
}

/// Deletes a `figure`/`subfigure` environment including its matching end,
/// counting same-name nesting.
fn skip_environment(span: &str, after_begin: usize, env: &str) -> Result<usize, String> {
    let mut depth = 1usize;
    let mut i = after_begin + env.len() + 2; // past "{env}"
    while i < span.len() {
        if char_at(span, i) != '\\' {
            i += char_at(span, i).len_utf8();
            continue;
        }
        if let Some(end) = skip_verb_group(span, i) {
            i = end;
            continue;
        }
        match read_command(span, i) {
            Some((name, end)) => {
                if (name == "begin" || name == "end") && read_env_name(span, end) == Some(env) {
                    let after = end + env.len() + 2;
                    if name == "begin" {
                        depth += 1;
                    } else {
                        depth -= 1;
                        if depth == 0 {
                            return Ok(after);
                        }
                    }
                    i = after;
                } else {
                    i = end;
                }
            }
            None => i = skip_escaped_pair(span, i),
        }
    }
    Err(format!("unterminated {env} environment"))
}

pub(crate) fn skip_ws(text: &str, mut i: usize) -> usize {
    while i < text.len() {
        let c = char_at(text, i);
        if !c.is_whitespace() {
            break;
        }
        i += c.len_utf8();
    }
    i
}

/// At `{`: returns the position just past the matching `}`. Escape- and
/// verb-aware so `\{` never shifts the balance.
pub(crate) fn read_brace_group(text: &str, start: usize) -> Option<usize> {
    debug_assert!(text[start..].starts_with('{'));
    let mut depth = 0i64;
    let mut i = start;
    while i < text.len() {
        let c = char_at(text, i);
        match c {
            '\\' => {
                if let Some(end) = skip_verb_group(text, i) {
                    i = end;
                } else if let Some((_, end)) = read_command(text, i) {
                    i = end;
                } else {
                    i = skip_escaped_pair(text, i);
                }
            }
            '{' => {
                depth += 1;
                i += 1;
            }
            '}' => {
                depth -= 1;
                i += 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => i += c.len_utf8(),
        }
    }
    None
}

/// At `[`: returns the position just past the closing `]`. Brace groups and
/// escapes inside are skipped whole.
pub(crate) fn read_bracket_group(text: &str, start: usize) -> Option<usize> {
    debug_assert!(text[start..].starts_with('['));
    let mut i = start + 1;
    while i < text.len() {
        let c = char_at(text, i);
        match c {
            '\\' => {
                if let Some(end) = skip_verb_group(text, i) {
                    i = end;
                } else if let Some((_, end)) = read_command(text, i) {
                    i = end;
                } else {
                    i = skip_escaped_pair(text, i);
                }
            }
            '{' => i = read_brace_group(text, i)?,
            ']' => return Some(i + 1),
            _ => i += c.len_utf8(),
        }
    }
    None
}
