//! The instruction universe of a language and the token-to-instruction map.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CATALOG_FORMAT_VERSION: u32 = 1;

const BUILTIN_PYTHON: &str = include_str!("../data/python.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionDef {
    pub name: String,
    pub arity: u32,
    #[serde(default)]
    pub aliases: Vec<String>,
}

/// What a source token means to the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution<'a> {
    Instruction(&'a str),
    Excluded,
    Unknown,
}

impl<'a> Resolution<'a> {
    pub fn instruction(self) -> Option<&'a str> {
        match self {
            Resolution::Instruction(name) => Some(name),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    #[serde(default = "default_version")]
    format_version: u32,
    language: String,
    #[serde(default)]
    excluded_tokens: Vec<String>,
    instructions: Vec<InstructionDef>,
}

fn default_version() -> u32 {
    CATALOG_FORMAT_VERSION
}

/// Immutable after construction; lookups by name or alias are unambiguous.
#[derive(Clone, Debug)]
pub struct InstructionCatalog {
    language: String,
    defs: Vec<InstructionDef>,
    excluded_tokens: Vec<String>,
    lookup: HashMap<String, usize>,
    excluded: HashSet<String>,
}

impl InstructionCatalog {
    pub fn new(
        language: impl Into<String>,
        defs: Vec<InstructionDef>,
        excluded_tokens: Vec<String>,
    ) -> Result<InstructionCatalog> {
        if defs.is_empty() {
            return Err(Error::InvalidCatalog("catalog has no instructions".into()));
        }
        let mut lookup: HashMap<String, usize> = HashMap::new();
        for (i, def) in defs.iter().enumerate() {
            if def.name.is_empty() {
                return Err(Error::InvalidCatalog(format!("instruction #{i} has an empty name")));
            }
            let tokens = std::iter::once(&def.name).chain(def.aliases.iter().filter(|a| **a != def.name));
            for token in tokens {
                if token.is_empty() {
                    return Err(Error::InvalidCatalog(format!(
                        "instruction {:?} has an empty alias",
                        def.name
                    )));
                }
                if let Some(&prev) = lookup.get(token) {
                    return Err(Error::CatalogConflict {
                        token: token.clone(),
                        first: defs[prev].name.clone(),
                        second: def.name.clone(),
                    });
                }
                lookup.insert(token.clone(), i);
            }
        }
        let mut excluded = HashSet::new();
        for token in &excluded_tokens {
            if let Some(&owner) = lookup.get(token) {
                return Err(Error::CatalogConflict {
                    token: token.clone(),
                    first: defs[owner].name.clone(),
                    second: "excluded_tokens".into(),
                });
            }
            excluded.insert(token.clone());
        }
        Ok(InstructionCatalog {
            language: language.into(),
            defs,
            excluded_tokens,
            lookup,
            excluded,
        })
    }

    /// The bundled Python catalog: operators, built-in functions, common
    /// container and string methods, and frequently used standard-library
    /// callables.
    pub fn builtin_python() -> InstructionCatalog {
        load_catalog(BUILTIN_PYTHON).expect("bundled catalog is valid")
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn defs(&self) -> &[InstructionDef] {
        &self.defs
    }

    pub fn excluded_tokens(&self) -> &[String] {
        &self.excluded_tokens
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&InstructionDef> {
        self.lookup
            .get(name)
            .map(|&i| &self.defs[i])
            .filter(|d| d.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.name.as_str())
    }

    pub fn resolve(&self, token: &str) -> Resolution<'_> {
        if let Some(&i) = self.lookup.get(token) {
            Resolution::Instruction(&self.defs[i].name)
        } else if self.excluded.contains(token) {
            Resolution::Excluded
        } else {
            Resolution::Unknown
        }
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile {
            format_version: CATALOG_FORMAT_VERSION,
            language: self.language.clone(),
            excluded_tokens: self.excluded_tokens.clone(),
            instructions: self.defs.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("catalog serializes");
        s.push('\n');
        s
    }
}

/// Parses catalog file content.
pub fn load_catalog(source: &str) -> Result<InstructionCatalog> {
    let file: CatalogFile = serde_json::from_str(source).map_err(|e| Error::CatalogParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.format_version != CATALOG_FORMAT_VERSION {
        return Err(Error::InvalidCatalog(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    InstructionCatalog::new(file.language, file.instructions, file.excluded_tokens)
}

pub fn resolve_token<'a>(catalog: &'a InstructionCatalog, token: &str) -> Resolution<'a> {
    catalog.resolve(token)
}
