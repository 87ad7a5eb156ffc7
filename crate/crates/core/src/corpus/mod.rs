//! Corpus scanning: source files to per-unit instruction subsets.

mod lexer;
mod split;

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::catalog::InstructionCatalog;
use crate::error::{Error, Result};
use crate::subset::{InstructionSubset, SubsetFamily};

pub use lexer::LexError;
pub use split::{split_units, NestedDefs, ParseFailure, SourceUnit, SplitOptions, UnitKind, MAIN_UNIT_NAME};

use lexer::TokenKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub path: String,
    pub kind: UnitKind,
    pub name: String,
    pub instructions: InstructionSubset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFailure {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub files: usize,
    pub lines: usize,
    pub units: usize,
    pub dropped_empty: usize,
    pub parse_failures: usize,
    #[serde(default)]
    pub failures: Vec<FileFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// File name suffixes to include, e.g. `".py"`.
    pub extensions: Vec<String>,
    pub split: SplitOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            extensions: vec![".py".to_owned()],
            split: SplitOptions::default(),
        }
    }
}

/// Canonical names of every catalog instruction used in `body`.
///
/// Attribute chains are matched longest suffix first, so `os.path.join`,
/// `path.join` and a bare `join` each find the most specific entry. The
/// name being defined by a `def` or `class` header is not a use.
pub fn extract_subset(catalog: &InstructionCatalog, body: &str) -> InstructionSubset {
    let mut found: Vec<String> = Vec::new();
    let mut after_def = false;
    for tok in lexer::tokens(body) {
        let defining = after_def;
        after_def = tok.kind == TokenKind::Name && (tok.text == "def" || tok.text == "class");
        match tok.kind {
            TokenKind::Name if !defining => {
                let mut rest = tok.text.as_str();
                loop {
                    if let Some(name) = catalog.resolve(rest).instruction() {
                        found.push(name.to_owned());
                        break;
                    }
                    match rest.split_once('.') {
                        Some((_, tail)) => rest = tail,
                        None => break,
                    }
                }
            }
            TokenKind::Op => {
                if let Some(name) = catalog.resolve(&tok.text).instruction() {
                    found.push(name.to_owned());
                }
            }
            _ => {}
        }
    }
    InstructionSubset::new(found)
}

/// File bytes, or why they could not be read.
type Content = std::result::Result<Vec<u8>, String>;

struct FileOutcome {
    lines: usize,
    units: usize,
    records: Vec<UnitRecord>,
    failure: Option<String>,
}

fn process_file(
    path: &str,
    content: Content,
    catalog: &InstructionCatalog,
    options: &ScanOptions,
) -> FileOutcome {
    let mut out = FileOutcome {
        lines: 0,
        units: 0,
        records: Vec::new(),
        failure: None,
    };
    let text = match content.and_then(|b| String::from_utf8(b).map_err(|_| "not valid UTF-8".to_owned())) {
        Ok(t) => t,
        Err(msg) => {
            out.failure = Some(msg);
            return out;
        }
    };
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    out.lines = text.lines().count();
    match split_units(text, &options.split) {
        Ok(units) => {
            out.units = units.len();
            for u in units {
                let instructions = extract_subset(catalog, &u.body);
                if !instructions.is_empty() {
                    out.records.push(UnitRecord {
                        path: path.to_owned(),
                        kind: u.kind,
                        name: u.name,
                        instructions,
                    });
                }
            }
        }
        Err(e) => out.failure = Some(e.to_string()),
    }
    out
}

fn wanted(name: &str, options: &ScanOptions) -> bool {
    options.extensions.iter().any(|ext| name.ends_with(ext.as_str()))
}

fn relative_name(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn is_zip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip"))
}

fn read_archive(root: &Path, options: &ScanOptions) -> Result<Vec<(String, Content)>> {
    let archive_err = |message: String| Error::Archive {
        path: root.to_path_buf(),
        message,
    };
    let file = fs::File::open(root).map_err(|e| Error::io(root, e))?;
    let mut archive = zip::ZipArchive::new(file).map_err(|e| archive_err(e.to_string()))?;
    let mut entries = Vec::new();
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i).map_err(|e| archive_err(e.to_string()))?;
        if !entry.is_file() || !wanted(entry.name(), options) {
            continue;
        }
        let name = entry.name().trim_start_matches('/').to_owned();
        let mut bytes = Vec::new();
        let content = entry.read_to_end(&mut bytes).map(|_| bytes).map_err(|e| e.to_string());
        entries.push((name, content));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(entries)
}

fn list_directory(root: &Path, options: &ScanOptions) -> Result<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")))
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = relative_name(root, entry.path());
        if wanted(&name, options) {
            files.push((name, entry.into_path()));
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(files)
}

/// Scans a directory tree, a `.zip` archive or a single source file.
///
/// Records come out ordered by path, then by position within the file.
/// Files that cannot be read, decoded or split are skipped and counted.
pub fn scan_corpus(
    root: &Path,
    catalog: &InstructionCatalog,
    options: &ScanOptions,
) -> Result<(Vec<UnitRecord>, CorpusStats)> {
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    let outcomes: Vec<(String, FileOutcome)> = if meta.is_dir() {
        list_directory(root, options)?
            .into_par_iter()
            .map(|(name, path)| {
                let content = fs::read(&path).map_err(|e| e.to_string());
                let outcome = process_file(&name, content, catalog, options);
                (name, outcome)
            })
            .collect()
    } else if is_zip(root) {
        read_archive(root, options)?
            .into_par_iter()
            .map(|(name, content)| {
                let outcome = process_file(&name, content, catalog, options);
                (name, outcome)
            })
            .collect()
    } else {
        let name = root
            .file_name()
            .map_or_else(|| root.display().to_string(), |n| n.to_string_lossy().into_owned());
        let content = fs::read(root).map_err(|e| Error::io(root, e))?;
        vec![(name.clone(), process_file(&name, Ok(content), catalog, options))]
    };

    let mut stats = CorpusStats::default();
    let mut records = Vec::new();
    for (name, outcome) in outcomes {
        stats.files += 1;
        stats.lines += outcome.lines;
        if let Some(message) = outcome.failure {
            stats.parse_failures += 1;
            stats.failures.push(FileFailure { path: name, message });
            continue;
        }
        stats.units += outcome.units;
        stats.dropped_empty += outcome.units - outcome.records.len();
        records.extend(outcome.records);
    }
    Ok((records, stats))
}

/// One JSON object per line, newline terminated.
pub fn write_units_jsonl(records: &[UnitRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_units_jsonl(src: &str) -> Result<Vec<UnitRecord>> {
    let mut records = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: UnitRecord = serde_json::from_str(line).map_err(|e| Error::Format {
            what: "units file",
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.instructions.is_empty() {
            return Err(Error::Format {
                what: "units file",
                line: i + 1,
                message: "unit has no instructions".into(),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// The raw subset family of a list of units, in unit order.
pub fn units_to_family(records: &[UnitRecord], source: &str) -> SubsetFamily {
    let mut family = SubsetFamily::new(records.iter().map(|r| r.instructions.clone()).collect());
    family.meta.source = source.to_owned();
    family
}
