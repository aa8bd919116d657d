//! Content stream: the characters of each cell, in reading order.
//!
//! Commands stay whole (`\textbf`), every other character is its own token,
//! and `¦` (U+00A6) marks word boundaries inside a cell. Structure machinery
//! is removed: the wrapper, the column spec, rule commands, and the
//! count/format groups of `\multicolumn`/`\multirow`. The `&` separator and
//! the `\\` row end are kept as tokens.

use super::lex::{lex, parse_group, skip_optional_bracket, RawTok};
use super::split_tabular;

/// Word-boundary delimiter token.
pub const WORD_DELIMITER: &str = "\u{00A6}";

const RULES: [&str; 4] = ["\\hline", "\\toprule", "\\midrule", "\\bottomrule"];

/// Builds the content token stream. Column specs the structure stream would
/// reject are fine here (the column spec is dropped either way); only
/// malformed span commands reject the snippet.
pub fn to_content_stream(code: &str) -> Result<Vec<String>, String> {
    let (_colspec, body) = split_tabular(code)?;
    let toks = lex(body);
    let mut out = Vec::new();
    let mut cell = CellState::default();
    walk(&toks, &mut out, &mut cell)?;
    Ok(out)
}

/// Tracks whether a word boundary is due before the next token. A `¦` is
/// emitted only between two tokens of the same cell, never at a cell edge.
#[derive(Default)]
struct CellState {
    pending: bool,
    emitted: bool,
}

impl CellState {
    fn reset(&mut self) {
        self.pending = false;
        self.emitted = false;
    }
}

fn emit(out: &mut Vec<String>, cell: &mut CellState, tok: String) {
    if cell.pending && cell.emitted {
        out.push(WORD_DELIMITER.to_string());
    }
    cell.pending = false;
    cell.emitted = true;
    out.push(tok);
}

fn walk(toks: &[RawTok], out: &mut Vec<String>, cell: &mut CellState) -> Result<(), String> {
    let mut i = 0;
    while i < toks.len() {
        match &toks[i] {
            RawTok::Boundary => {
                cell.pending = true;
                i += 1;
            }
            RawTok::Ch('&') => {
                cell.reset();
                out.push("&".to_string());
                i += 1;
            }
            RawTok::RowEnd => {
                cell.reset();
                out.push("\\\\".to_string());
                i += 1;
                skip_optional_bracket(toks, &mut i);
            }
            RawTok::Ch('\\') => {
                // Escaped symbol: the backslash and the symbol are two
                // character tokens of the cell (`\&` never separates cells).
                emit(out, cell, "\\".to_string());
                i += 1;
                if let Some(RawTok::Ch(c)) = toks.get(i) {
                    emit(out, cell, c.to_string());
                    i += 1;
                }
            }
            RawTok::Ch(c) => {
                emit(out, cell, c.to_string());
                i += 1;
            }
            RawTok::Command(name) if name == "\\tabularnewline" => {
                cell.reset();
                out.push("\\\\".to_string());
                i += 1;
                skip_optional_bracket(toks, &mut i);
            }
            RawTok::Command(name) if RULES.contains(&name.as_str()) => {
                i += 1;
                skip_optional_bracket(toks, &mut i);
            }
            RawTok::Command(name) if name == "\\multicolumn" || name == "\\multirow" => {
                let name = name.clone();
                i += 1;
                for what in ["count", "format"] {
                    parse_group(toks, &mut i)
                        .ok_or_else(|| format!("malformed {name}: missing {what} group"))?;
                }
                let content = parse_group(toks, &mut i)
                    .ok_or_else(|| format!("malformed {name}: missing content group"))?;
                // The content group's interior is ordinary cell text; its
                // braces belong to the span command and are dropped.
                walk(&content, out, cell)?;
            }
            RawTok::Command(name) => {
                emit(out, cell, name.clone());
                i += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joined(code: &str) -> String {
        to_content_stream(code).unwrap().join(" ")
    }

    #[test]
    fn words_split_into_characters_with_delimiter() {
        assert_eq!(
            joined("\\begin{tabular}{c} Name Age \\\\\\end{tabular}"),
            "N a m e \u{00A6} A g e \\\\"
        );
    }

    #[test]
    fn command_kept_whole_characters_split() {
        assert_eq!(
            joined("\\begin{tabular}{c}\\textbf{Hi}\\end{tabular}"),
            "\\textbf { H i }"
        );
    }

    #[test]
    fn empty_body_is_empty() {
        assert_eq!(to_content_stream("\\begin{tabular}{c}\\end{tabular}").unwrap(), Vec::<String>::new());
    }

    #[test]
    fn separator_and_row_end_are_kept() {
        assert_eq!(
            joined("\\begin{tabular}{cc} a & b \\\\ c & d \\\\\\end{tabular}"),
            "a & b \\\\ c & d \\\\"
        );
    }

    #[test]
    fn rules_and_colspec_are_dropped() {
        assert_eq!(
            joined("\\begin{tabular}{|l|}\\hline ab \\\\ \\bottomrule\\end{tabular}"),
            "a b \\\\"
        );
    }

    #[test]
    fn no_delimiter_at_cell_edges() {
        let toks = to_content_stream("\\begin{tabular}{cc} a b & c d \\\\\\end{tabular}").unwrap();
        assert_eq!(toks.join(" "), "a \u{00A6} b & c \u{00A6} d \\\\");
        assert_ne!(toks.first().map(String::as_str), Some(WORD_DELIMITER));
        assert_ne!(toks.last().map(String::as_str), Some(WORD_DELIMITER));
    }

    #[test]
    fn no_double_delimiters_from_long_whitespace() {
        assert_eq!(
            joined("\\begin{tabular}{c} a \t\n  b \\\\\\end{tabular}"),
            "a \u{00A6} b \\\\"
        );
    }

    #[test]
    fn span_command_machinery_is_dropped_content_kept() {
        assert_eq!(
            joined("\\begin{tabular}{cc}\\multicolumn{2}{c}{hi x} \\\\\\end{tabular}"),
            "h i \u{00A6} x \\\\"
        );
        assert_eq!(
            joined("\\begin{tabular}{cc}\\multirow{2}{*}{R} & a \\\\\\end{tabular}"),
            "R & a \\\\"
        );
    }

    #[test]
    fn escaped_symbols_are_two_character_tokens() {
        assert_eq!(
            joined("\\begin{tabular}{c} 5\\% \\\\\\end{tabular}"),
            "5 \\ % \\\\"
        );
        assert_eq!(
            joined("\\begin{tabular}{c} a\\&b \\\\\\end{tabular}"),
            "a \\ & b \\\\"
        );
    }

    #[test]
    fn math_dollar_is_an_ordinary_character() {
        assert_eq!(
            joined("\\begin{tabular}{c} $x+1$ \\\\\\end{tabular}"),
            "$ x + 1 $ \\\\"
        );
    }

    #[test]
    fn unsupported_colspec_still_yields_content() {
        assert_eq!(
            joined("\\begin{tabular}{p{2cm}} ok \\\\\\end{tabular}"),
            "o k \\\\"
        );
    }

    #[test]
    fn row_spacing_argument_is_dropped() {
        assert_eq!(
            joined("\\begin{tabular}{c} a \\\\[4pt] b \\\\\\end{tabular}"),
            "a \\\\ b \\\\"
        );
    }

    #[test]
    fn digits_and_punctuation_are_single_tokens() {
        assert_eq!(
            joined("\\begin{tabular}{c} 12.5, (ok) \\\\\\end{tabular}"),
            "1 2 . 5 , \u{00A6} ( o k ) \\\\"
        );
    }
}
