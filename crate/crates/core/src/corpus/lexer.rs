//! A small lexer for Python-like source.
//!
//! It only needs to find identifiers and operators, group physical lines
//! into logical lines, and measure indentation. String literals and
//! comments are recognised so that their contents never produce tokens.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum TokenKind {
    /// Identifier or keyword; attribute chains such as `os.path.join` are
    /// merged into a single token.
    Name,
    Op,
    Number,
    Str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub text: String,
}

#[derive(Clone, Debug)]
pub(crate) struct LogicalLine {
    pub indent: usize,
    /// 1-based physical line where the logical line starts.
    pub line: usize,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "=", ":", ";", ",", ".", "!",
];

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_char(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    strict: bool,
    depth: usize,
    lines: Vec<LogicalLine>,
    current: Option<LogicalLine>,
    chain_pending: bool,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(offset)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            message: message.into(),
        }
    }

    fn push(&mut self, kind: TokenKind, text: String) {
        let line = self.current.as_mut().expect("token inside a logical line");
        if kind == TokenKind::Name && self.chain_pending {
            if let Some(prev) = line.tokens.last_mut() {
                if prev.kind == TokenKind::Name {
                    prev.text.push('.');
                    prev.text.push_str(&text);
                    self.chain_pending = false;
                    return;
                }
            }
        }
        self.chain_pending = false;
        line.tokens.push(Token { kind, text });
    }

    fn finish_line(&mut self, end: usize) {
        if let Some(mut l) = self.current.take() {
            l.end = end;
            self.lines.push(l);
        }
        self.chain_pending = false;
    }

    /// At the start of a physical line outside brackets: measure indentation
    /// and skip blank or comment-only lines.
    fn start_line(&mut self) {
        loop {
            let mut indent = 0;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => indent += 1,
                    '\t' => indent = (indent / 8 + 1) * 8,
                    '\x0c' => indent = 0,
                    _ => break,
                }
                self.bump();
            }
            match self.peek() {
                None => return,
                Some('\n') | Some('\r') => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('\\') if matches!(self.peek_at(1), Some('\n')) => {
                    self.bump();
                    self.bump();
                }
                Some(_) => {
                    self.current = Some(LogicalLine {
                        indent,
                        line: self.line,
                        start: self.pos,
                        end: self.pos,
                        tokens: Vec::new(),
                    });
                    return;
                }
            }
        }
    }

    fn string(&mut self, quote: char) -> Result<(), LexError> {
        let start_line = self.line;
        self.bump();
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        loop {
            match self.bump() {
                None => {
                    if self.strict {
                        return Err(LexError {
                            line: start_line,
                            message: "unterminated string literal".into(),
                        });
                    }
                    return Ok(());
                }
                Some('\\') => {
                    self.bump();
                }
                Some('\n') if !triple => {
                    if self.strict {
                        return Err(LexError {
                            line: start_line,
                            message: "unterminated string literal".into(),
                        });
                    }
                    return Ok(());
                }
                Some(c) if c == quote => {
                    if !triple {
                        return Ok(());
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        self.bump();
                        self.bump();
                        return Ok(());
                    }
                }
                Some(_) => {}
            }
        }
    }

    fn run(mut self) -> Result<Vec<LogicalLine>, LexError> {
        loop {
            if self.current.is_none() {
                self.start_line();
                if self.current.is_none() {
                    break;
                }
            }
            let Some(c) = self.peek() else { break };
            match c {
                '\n' => {
                    let end = self.pos;
                    self.bump();
                    if self.depth == 0 {
                        self.finish_line(end);
                    }
                }
                '\\' if matches!(self.peek_at(1), Some('\n')) => {
                    self.bump();
                    self.bump();
                }
                '\\' if matches!(self.peek_at(1), Some('\r')) && matches!(self.peek_at(2), Some('\n')) => {
                    self.bump();
                    self.bump();
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                ' ' | '\t' | '\r' | '\x0c' => {
                    self.bump();
                }
                '\'' | '"' => {
                    self.string(c)?;
                    self.push(TokenKind::Str, String::new());
                }
                '0'..='9' => self.number(),
                '.' if matches!(self.peek_at(1), Some('0'..='9')) => self.number(),
                c if is_ident_start(c) => {
                    let start = self.pos;
                    while self.peek().is_some_and(is_ident_char) {
                        self.bump();
                    }
                    let word = &self.src[start..self.pos];
                    if is_string_prefix(word) && matches!(self.peek(), Some('\'') | Some('"')) {
                        let q = self.peek().expect("quote");
                        self.string(q)?;
                        self.push(TokenKind::Str, String::new());
                    } else {
                        self.push(TokenKind::Name, word.to_owned());
                    }
                }
                '(' | '[' | '{' => {
                    self.bump();
                    self.depth += 1;
                    self.push(TokenKind::Op, c.to_string());
                }
                ')' | ']' | '}' => {
                    self.bump();
                    if self.depth == 0 {
                        if self.strict {
                            return Err(self.error(format!("unmatched '{c}'")));
                        }
                    } else {
                        self.depth -= 1;
                    }
                    self.push(TokenKind::Op, c.to_string());
                }
                '@' if self.current.as_ref().is_some_and(|l| l.tokens.is_empty()) => {
                    // Decorator marker, not the matrix-multiply operator.
                    self.bump();
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    let op = OPERATORS.iter().find(|op| rest.starts_with(**op)).copied();
                    match op {
                        Some(".") => {
                            let glued = self.src[..self.pos].chars().next_back().is_some_and(is_ident_char);
                            self.bump();
                            let prev_is_name = glued
                                && self
                                    .current
                                    .as_ref()
                                    .and_then(|l| l.tokens.last())
                                    .is_some_and(|t| t.kind == TokenKind::Name);
                            if prev_is_name && self.peek().is_some_and(is_ident_start) {
                                self.chain_pending = true;
                            } else {
                                self.push(TokenKind::Op, ".".into());
                            }
                        }
                        Some(op) => {
                            self.pos += op.len();
                            self.push(TokenKind::Op, op.to_owned());
                        }
                        None => {
                            self.bump();
                            self.push(TokenKind::Op, c.to_string());
                        }
                    }
                }
            }
        }
        if self.depth > 0 && self.strict {
            return Err(self.error("unclosed bracket at end of file"));
        }
        let end = self.src.len();
        self.finish_line(end);
        Ok(self.lines)
    }

    fn number(&mut self) {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.bump();
                if (c == 'e' || c == 'E') && matches!(self.peek(), Some('+') | Some('-')) {
                    let hex = self.src[start..self.pos].starts_with("0x") || self.src[start..self.pos].starts_with("0X");
                    if !hex {
                        self.bump();
                    }
                }
            } else {
                break;
            }
        }
        let text = self.src[start..self.pos].to_owned();
        self.push(TokenKind::Number, text);
    }
}

fn lex(src: &str, strict: bool) -> Result<Vec<LogicalLine>, LexError> {
    Lexer {
        src,
        pos: 0,
        line: 1,
        strict,
        depth: 0,
        lines: Vec::new(),
        current: None,
        chain_pending: false,
    }
    .run()
}

/// Logical lines of a whole file; malformed input is an error.
pub(crate) fn logical_lines(src: &str) -> Result<Vec<LogicalLine>, LexError> {
    lex(src, true)
}

/// All tokens of a fragment, tolerating unbalanced brackets and
/// unterminated strings.
pub(crate) fn tokens(src: &str) -> Vec<Token> {
    lex(src, false)
        .expect("lenient lexing does not fail")
        .into_iter()
        .flat_map(|l| l.tokens)
        .collect()
}
