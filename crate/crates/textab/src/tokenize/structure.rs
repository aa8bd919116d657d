//! Structure stream: the table layout reduced to a 25-token vocabulary.
//!
//! Cells become the placeholder `CELL` (only when non-empty after trimming),
//! separators and rules keep their position, and `\multicolumn`/`\multirow`
//! expand to their count, format, and placeholder groups. The
//! `\begin{tabular}`/`\end{tabular}` wrappers are never emitted; the stream
//! starts at the column specification's `{`.

use super::lex::{lex, parse_group, skip_optional_bracket, RawTok};
use super::split_tabular;

/// Every token a structure stream may contain.
pub const STRUCTURE_VOCABULARY: [&str; 25] = [
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "&", "CELL", "\\\\", "\\hline",
    "\\multicolumn", "\\multirow", "\\bottomrule", "\\midrule", "\\toprule", "|", "l", "r", "c",
    "{", "}",
];

const RULES: [&str; 4] = ["\\hline", "\\toprule", "\\midrule", "\\bottomrule"];

/// Builds the structure token stream, or a rejection reason when the snippet
/// cannot be expressed in the structure vocabulary (unsupported column
/// specifications, malformed span commands).
pub fn to_structure_stream(code: &str) -> Result<Vec<String>, String> {
    let (colspec, body) = split_tabular(code)?;
    let mut out = vec!["{".to_string()];
    for ch in colspec.chars() {
        if ch.is_whitespace() {
            continue;
        }
        match ch {
            'l' | 'r' | 'c' | '|' => out.push(ch.to_string()),
            _ => return Err("unsupported column spec".into()),
        }
    }
    out.push("}".to_string());

    let toks = lex(body);
    let mut i = 0;
    // A cell emits one CELL at its closing separator if it held any plain
    // content; a cell realized by \multicolumn/\multirow already emitted its
    // placeholder inline and must not emit a second one.
    let mut cell_plain = false;
    let mut cell_special = false;
    while i < toks.len() {
        match &toks[i] {
            RawTok::Boundary => i += 1,
            RawTok::Ch('&') => {
                close_cell(&mut out, &mut cell_plain, &mut cell_special);
                out.push("&".to_string());
                i += 1;
            }
            RawTok::RowEnd => {
                close_cell(&mut out, &mut cell_plain, &mut cell_special);
                out.push("\\\\".to_string());
                i += 1;
                skip_optional_bracket(&toks, &mut i);
            }
            RawTok::Ch('\\') => {
                // Escaped pair (\&, \{, ...) is plain cell content.
                cell_plain = true;
                i += 2;
            }
            RawTok::Ch(_) => {
                cell_plain = true;
                i += 1;
            }
            RawTok::Command(name) if name == "\\tabularnewline" => {
                close_cell(&mut out, &mut cell_plain, &mut cell_special);
                out.push("\\\\".to_string());
                i += 1;
                skip_optional_bracket(&toks, &mut i);
            }
            RawTok::Command(name) if RULES.contains(&name.as_str()) => {
                out.push(name.clone());
                i += 1;
                skip_optional_bracket(&toks, &mut i);
            }
            RawTok::Command(name) if name == "\\multicolumn" || name == "\\multirow" => {
                let name = name.clone();
                i += 1;
                emit_span_command(&name, &toks, &mut i, &mut out)?;
                cell_special = true;
            }
            RawTok::Command(_) => {
                cell_plain = true;
                i += 1;
            }
        }
    }
    close_cell(&mut out, &mut cell_plain, &mut cell_special);
    Ok(out)
}

fn close_cell(out: &mut Vec<String>, plain: &mut bool, special: &mut bool) {
    if *plain && !*special {
        out.push("CELL".to_string());
    }
    *plain = false;
    *special = false;
}

/// Emits `\multicolumn { n } { spec } { CELL }` (n digit-by-digit) and the
/// `\multirow` analogue. The multirow width group has no representation in
/// the structure vocabulary, so its braces are emitted empty.
fn emit_span_command(
    name: &str,
    toks: &[RawTok],
    i: &mut usize,
    out: &mut Vec<String>,
) -> Result<(), String> {
    let count = parse_group(toks, i).ok_or_else(|| format!("malformed {name}: missing count group"))?;
    let mut digits = Vec::new();
    for t in &count {
        match t {
            RawTok::Boundary => {}
            RawTok::Ch(c) if c.is_ascii_digit() => digits.push(c.to_string()),
            _ => return Err(format!("malformed {name}: count is not a digit sequence")),
        }
    }
    if digits.is_empty() {
        return Err(format!("malformed {name}: count is not a digit sequence"));
    }

    let format = parse_group(toks, i).ok_or_else(|| format!("malformed {name}: missing format group"))?;
    let mut spec = Vec::new();
    if name == "\\multicolumn" {
        for t in &format {
            match t {
                RawTok::Boundary => {}
                RawTok::Ch(c) if matches!(c, 'l' | 'r' | 'c' | '|') => spec.push(c.to_string()),
                _ => return Err("unsupported column spec".into()),
            }
        }
    }

    let content = parse_group(toks, i).ok_or_else(|| format!("malformed {name}: missing content group"))?;
    let non_empty = content.iter().any(|t| *t != RawTok::Boundary);

    out.push(name.to_string());
    out.push("{".to_string());
    out.extend(digits);
    out.push("}".to_string());
    out.push("{".to_string());
    out.extend(spec);
    out.push("}".to_string());
    out.push("{".to_string());
    if non_empty {
        out.push("CELL".to_string());
    }
    out.push("}".to_string());
    Ok(())
}
