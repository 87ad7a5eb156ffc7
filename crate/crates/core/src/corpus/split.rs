//! Splitting a source file into program units by indentation and the
//! `def` / `class` keywords.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexer::{self, LogicalLine, TokenKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Class,
    Method,
    Function,
    Main,
}

impl UnitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Class => "class",
            UnitKind::Method => "method",
            UnitKind::Function => "function",
            UnitKind::Main => "main",
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const MAIN_UNIT_NAME: &str = "<main>";

/// What to do with a `def` or `class` nested inside a function body.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NestedDefs {
    /// Nested definitions become units of their own.
    #[default]
    Separate,
    /// Nested definitions stay part of the enclosing function.
    Inline,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub nested_defs: NestedDefs,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceUnit {
    pub kind: UnitKind,
    pub name: String,
    /// 1-based line where the unit starts.
    pub line: usize,
    /// The unit's own logical lines, joined with newlines. Nested units are
    /// not included.
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseFailure {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl From<lexer::LexError> for ParseFailure {
    fn from(e: lexer::LexError) -> Self {
        ParseFailure {
            line: e.line,
            message: e.message,
        }
    }
}

struct Builder {
    kind: UnitKind,
    name: String,
    line: usize,
    ranges: Vec<(usize, usize)>,
}

struct Scope {
    header_indent: usize,
    unit: usize,
}

/// `Some((is_class, name))` when the line opens a definition.
fn definition(line: &LogicalLine) -> Option<Result<(bool, String), ParseFailure>> {
    let toks = &line.tokens;
    let kw_at = match toks.first() {
        Some(t) if t.kind == TokenKind::Name && t.text == "async" => {
            if toks.get(1).is_some_and(|t| t.kind == TokenKind::Name && t.text == "def") {
                1
            } else {
                return None;
            }
        }
        Some(t) if t.kind == TokenKind::Name && (t.text == "def" || t.text == "class") => 0,
        _ => return None,
    };
    let is_class = toks[kw_at].text == "class";
    Some(match toks.get(kw_at + 1) {
        Some(t) if t.kind == TokenKind::Name && !t.text.contains('.') => Ok((is_class, t.text.clone())),
        _ => Err(ParseFailure {
            line: line.line,
            message: format!("malformed {} header", toks[kw_at].text),
        }),
    })
}

fn opens_block(line: &LogicalLine) -> bool {
    line.tokens
        .last()
        .is_some_and(|t| t.kind == TokenKind::Op && t.text == ":")
}

/// Splits `source` into classes, methods, functions and the residual
/// module-level code.
///
/// Each class unit holds only the statements at class scope; its methods
/// are separate units. Module-level code forms a single `main` unit, which
/// is omitted when there is none. Units are returned in source order.
pub fn split_units(source: &str, options: &SplitOptions) -> Result<Vec<SourceUnit>, ParseFailure> {
    let lines = lexer::logical_lines(source)?;

    let mut units: Vec<Builder> = Vec::new();
    let mut main = Builder {
        kind: UnitKind::Main,
        name: MAIN_UNIT_NAME.to_owned(),
        line: 0,
        ranges: Vec::new(),
    };
    let mut scopes: Vec<Scope> = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut prev_opens = false;

    for ll in &lines {
        let top = *indents.last().expect("base indent");
        if ll.indent > top {
            if !prev_opens {
                return Err(ParseFailure {
                    line: ll.line,
                    message: "unexpected indent".into(),
                });
            }
            indents.push(ll.indent);
        } else {
            if prev_opens {
                return Err(ParseFailure {
                    line: ll.line,
                    message: "expected an indented block".into(),
                });
            }
            while *indents.last().expect("base indent") > ll.indent {
                indents.pop();
            }
            if *indents.last().expect("base indent") != ll.indent {
                return Err(ParseFailure {
                    line: ll.line,
                    message: "unindent does not match any outer indentation level".into(),
                });
            }
        }
        prev_opens = opens_block(ll);

        while scopes.last().is_some_and(|s| s.header_indent >= ll.indent) {
            scopes.pop();
        }
        let owner = scopes.last().map(|s| s.unit);

        if let Some(def) = definition(ll) {
            let (is_class, name) = def?;
            let owner_kind = owner.map(|u| units[u].kind);
            let in_function = matches!(owner_kind, Some(UnitKind::Function | UnitKind::Method));
            if !(in_function && options.nested_defs == NestedDefs::Inline) {
                let kind = match (is_class, owner_kind) {
                    (true, _) => UnitKind::Class,
                    (false, Some(UnitKind::Class)) => UnitKind::Method,
                    (false, _) => UnitKind::Function,
                };
                units.push(Builder {
                    kind,
                    name,
                    line: ll.line,
                    ranges: vec![(ll.start, ll.end)],
                });
                scopes.push(Scope {
                    header_indent: ll.indent,
                    unit: units.len() - 1,
                });
                continue;
            }
        }

        let target = match owner {
            Some(u) => &mut units[u],
            None => &mut main,
        };
        if target.ranges.is_empty() && target.kind == UnitKind::Main {
            target.line = ll.line;
        }
        target.ranges.push((ll.start, ll.end));
    }
    if prev_opens {
        return Err(ParseFailure {
            line: lines.last().map_or(1, |l| l.line),
            message: "expected an indented block at end of file".into(),
        });
    }

    if !main.ranges.is_empty() {
        units.push(main);
    }
    let mut out: Vec<SourceUnit> = units
        .into_iter()
        .map(|b| SourceUnit {
            kind: b.kind,
            name: b.name,
            line: b.line,
            body: b
                .ranges
                .iter()
                .map(|&(s, e)| &source[s..e])
                .collect::<Vec<_>>()
                .join("\n"),
        })
        .collect();
    out.sort_by_key(|u| u.line);
    Ok(out)
}
