//! Maximal-munch lexer for snippet code, plus token-level group parsing
//! shared by the stream builders.

/// One lexed unit. Whitespace runs collapse to a single [`RawTok::Boundary`]
/// marker which downstream builders consume (it never appears as an output
/// token itself).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTok {
    /// `\` + ASCII letter run, stored with the backslash (`\hline`).
    Command(String),
    /// The row terminator `\\`.
    RowEnd,
    /// Any other single character, including `\` from an escape like `\&`
    /// (the escaped character follows as its own token).
    Ch(char),
    Boundary,
}

/// Lexes every string; there are no error cases.
pub fn lex(code: &str) -> Vec<RawTok> {
    let mut toks = Vec::new();
    let mut chars = code.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            if toks.last() != Some(&RawTok::Boundary) {
                toks.push(RawTok::Boundary);
            }
            continue;
        }
        if c != '\\' {
            toks.push(RawTok::Ch(c));
            continue;
        }
        match chars.peek() {
            Some('\\') => {
                chars.next();
                toks.push(RawTok::RowEnd);
            }
            Some(n) if n.is_ascii_alphabetic() => {
                let mut name = String::from('\\');
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_alphabetic() {
                        name.push(n);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(RawTok::Command(name));
            }
            _ => toks.push(RawTok::Ch('\\')),
        }
    }
    toks
}

/// At `Ch('{')`: returns the tokens strictly inside the balanced group and
/// advances `*i` past the closing brace. Escaped braces (`Ch('\\')` followed
/// by a brace token) do not affect the balance. `None` when `*i` is not at a
/// group or the group never closes.
pub(crate) fn parse_group(toks: &[RawTok], i: &mut usize) -> Option<Vec<RawTok>> {
    let mut j = *i;
    while toks.get(j) == Some(&RawTok::Boundary) {
        j += 1;
    }
    if toks.get(j) != Some(&RawTok::Ch('{')) {
        return None;
    }
    let mut depth = 0usize;
    let mut inner = Vec::new();
    let start = j;
    while j < toks.len() {
        match &toks[j] {
            RawTok::Ch('\\') => {
                // Escaped pair: copy both tokens untouched.
                if depth > 0 {
                    inner.push(toks[j].clone());
                    if let Some(next) = toks.get(j + 1) {
                        inner.push(next.clone());
                    }
                }
                j += 2;
                continue;
            }
            RawTok::Ch('{') => {
                depth += 1;
                if j > start {
                    inner.push(toks[j].clone());
                }
            }
            RawTok::Ch('}') => {
                depth -= 1;
                if depth == 0 {
                    *i = j + 1;
                    return Some(inner);
                }
                inner.push(toks[j].clone());
            }
            t => inner.push(t.clone()),
        }
        j += 1;
    }
    None
}

/// Consumes a `[...]` group directly after a row end or rule command (row
/// spacing like `\\[2pt]`, rule widths like `\toprule[1pt]`). Leading
/// whitespace is allowed, mirroring how LaTeX scans for the optional
/// argument. Leaves `*i` untouched when no complete group follows.
pub(crate) fn skip_optional_bracket(toks: &[RawTok], i: &mut usize) {
    let mut j = *i;
    while toks.get(j) == Some(&RawTok::Boundary) {
        j += 1;
    }
    if toks.get(j) != Some(&RawTok::Ch('[')) {
        return;
    }
    j += 1;
    while j < toks.len() {
        match toks[j] {
            RawTok::Ch(']') => {
                *i = j + 1;
                return;
            }
            RawTok::Ch('\\') => j += 2,
            _ => j += 1,
        }
    }
}
