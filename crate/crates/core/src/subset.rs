//! Instruction subsets and families of subsets.
//!
//! An [`InstructionSubset`] is the set of distinct instructions used by one
//! program unit, or a derived subset built by merging such sets. Members are
//! kept sorted and unique at all times, so equality, hashing and ordering are
//! all structural.

use std::cmp::Ordering;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterTrace;
use crate::error::{Error, Result};

pub const FAMILY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct InstructionSubset(Vec<String>);

impl InstructionSubset {
    pub fn new<I, S>(members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = members.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        InstructionSubset(v)
    }

    /// Wraps a vector that is already sorted and duplicate-free.
    pub(crate) fn from_sorted_unchecked(members: Vec<String>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        InstructionSubset(members)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn members(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.binary_search_by(|m| m.as_str().cmp(name)).is_ok()
    }

    /// Merge-based containment test over the sorted member lists.
    pub fn is_subset_of(&self, other: &InstructionSubset) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut theirs = other.0.iter();
        'outer: for mine in &self.0 {
            for t in theirs.by_ref() {
                match t.cmp(mine) {
                    Ordering::Less => continue,
                    Ordering::Equal => continue 'outer,
                    Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &InstructionSubset) -> InstructionSubset {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(self.0[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        InstructionSubset(out)
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }
}

impl From<Vec<String>> for InstructionSubset {
    fn from(v: Vec<String>) -> Self {
        InstructionSubset::new(v)
    }
}

impl From<InstructionSubset> for Vec<String> {
    fn from(s: InstructionSubset) -> Self {
        s.0
    }
}

impl<'a> FromIterator<&'a str> for InstructionSubset {
    fn from_iter<T: IntoIterator<Item = &'a str>>(iter: T) -> Self {
        InstructionSubset::new(iter)
    }
}

impl fmt::Display for InstructionSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(","))
    }
}

/// Processing stage a family has reached.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    #[default]
    Raw,
    Deduped,
    Reduced,
    Amplified,
    Derived,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyMeta {
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub size_limit: Option<usize>,
    #[serde(default)]
    pub headroom: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ClusterTrace>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubsetFamily {
    pub meta: FamilyMeta,
    pub subsets: Vec<InstructionSubset>,
}

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    format_version: u32,
    meta: FamilyMeta,
    subsets: Vec<InstructionSubset>,
}

impl SubsetFamily {
    pub fn new(subsets: Vec<InstructionSubset>) -> Self {
        SubsetFamily {
            meta: FamilyMeta::default(),
            subsets,
        }
    }

    pub fn with_meta(meta: FamilyMeta, subsets: Vec<InstructionSubset>) -> Self {
        SubsetFamily { meta, subsets }
    }

    /// Builds a family from anything that yields member lists.
    pub fn from_lists<I, J, S>(lists: I) -> Self
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SubsetFamily::new(lists.into_iter().map(InstructionSubset::new).collect())
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, InstructionSubset> {
        self.subsets.iter()
    }

    pub fn max_subset_len(&self) -> usize {
        self.subsets.iter().map(InstructionSubset::len).max().unwrap_or(0)
    }

    /// Same family with a replaced subset list and an updated stage.
    pub(crate) fn derive(&self, stage: Stage, subsets: Vec<InstructionSubset>) -> SubsetFamily {
        let mut meta = self.meta.clone();
        meta.stage = meta.stage.max(stage);
        SubsetFamily { meta, subsets }
    }

    /// Subsets sorted lexicographically; the order used when writing files.
    pub fn canonical_subsets(&self) -> Vec<InstructionSubset> {
        let mut v = self.subsets.clone();
        v.sort();
        v
    }

    pub fn canonicalize(&mut self) {
        self.subsets.sort();
    }

    /// Parses the family file format. Member lists are normalised on read.
    pub fn from_json(src: &str) -> Result<SubsetFamily> {
        let file: FamilyFile = serde_json::from_str(src).map_err(|e| Error::Format {
            what: "family file",
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.format_version != FAMILY_FORMAT_VERSION {
            return Err(Error::Format {
                what: "family file",
                line: 1,
                message: format!("unsupported format_version {}", file.format_version),
            });
        }
        if let Some(i) = file.subsets.iter().position(InstructionSubset::is_empty) {
            return Err(Error::Format {
                what: "family file",
                line: 1,
                message: format!("subset #{i} is empty"),
            });
        }
        Ok(SubsetFamily {
            meta: file.meta,
            subsets: file.subsets,
        })
    }

    /// Canonical text form: subsets sorted, one per line.
    pub fn to_json(&self) -> String {
        let meta = serde_json::to_string(&self.meta).expect("meta serializes");
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"format_version\": {FAMILY_FORMAT_VERSION},");
        let _ = writeln!(out, "  \"meta\": {meta},");
        out.push_str("  \"subsets\": [");
        let subsets = self.canonical_subsets();
        for (i, s) in subsets.iter().enumerate() {
            out.push_str(if i == 0 { "\n    " } else { ",\n    " });
            out.push_str(&serde_json::to_string(s).expect("subset serializes"));
        }
        if !subsets.is_empty() {
            out.push_str("\n  ");
        }
        out.push_str("]\n}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(items: &[&str]) -> InstructionSubset {
        items.iter().copied().collect()
    }

    #[test]
    fn members_are_sorted_and_unique() {
        let x = InstructionSubset::new(["len", "+", "len", "abs"]);
        assert_eq!(x.members(), &["+", "abs", "len"]);
    }

    #[test]
    fn subset_test_is_merge_based() {
        assert!(s(&["a", "c"]).is_subset_of(&s(&["a", "b", "c"])));
        assert!(!s(&["a", "d"]).is_subset_of(&s(&["a", "b", "c"])));
        assert!(s(&[]).is_subset_of(&s(&["a"])));
        assert!(!s(&["z"]).is_subset_of(&s(&["a"])));
        assert!(s(&["a", "b"]).is_subset_of(&s(&["a", "b"])));
    }

    #[test]
    fn union_merges() {
        assert_eq!(s(&["a", "c"]).union(&s(&["b", "c"])), s(&["a", "b", "c"]));
    }

    #[test]
    fn family_json_is_canonical() {
        let fam = SubsetFamily::from_lists([vec!["len", "+"], vec!["abs"]]);
        let text = fam.to_json();
        let back = SubsetFamily::from_json(&text).unwrap();
        assert_eq!(back.subsets, vec![s(&["+", "len"]), s(&["abs"])]);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn family_rejects_bad_version_and_empty_subsets() {
        let bad = r#"{"format_version": 9, "meta": {}, "subsets": []}"#;
        assert!(SubsetFamily::from_json(bad).is_err());
        let empty = r#"{"format_version": 1, "meta": {}, "subsets": [[]]}"#;
        assert!(SubsetFamily::from_json(empty).is_err());
    }
}
