//! Interned set representations used on the hot paths.
//!
//! Instruction names are interned in sorted order, so comparing id vectors
//! gives the same answer as comparing the name vectors they came from.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::subset::InstructionSubset;

pub(crate) type IdSet = Vec<u32>;

#[derive(Debug, Clone, Default)]
pub(crate) struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn from_subsets<'a, I>(subsets: I) -> Self
    where
        I: IntoIterator<Item = &'a InstructionSubset>,
    {
        let mut names: Vec<String> = subsets
            .into_iter()
            .flat_map(|s| s.members().iter().cloned())
            .collect();
        names.sort();
        names.dedup();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Vocab { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    /// `None` when some member is outside the vocabulary.
    pub fn encode(&self, s: &InstructionSubset) -> Option<IdSet> {
        s.iter().map(|m| self.id(m)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> InstructionSubset {
        InstructionSubset::from_sorted_unchecked(
            ids.iter().map(|&i| self.names[i as usize].clone()).collect(),
        )
    }
}

pub(crate) fn is_subset(a: &[u32], b: &[u32]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for &x in a {
        loop {
            if j == b.len() {
                return false;
            }
            match b[j].cmp(&x) {
                Ordering::Less => j += 1,
                Ordering::Equal => {
                    j += 1;
                    break;
                }
                Ordering::Greater => return false,
            }
        }
    }
    true
}

/// The single member of `b` missing from `a`, if exactly one is missing.
pub(crate) fn sole_missing(b: &[u32], a: &[u32]) -> Option<u32> {
    let mut missing = None;
    let mut j = 0;
    for &x in b {
        while j < a.len() && a[j] < x {
            j += 1;
        }
        if j < a.len() && a[j] == x {
            j += 1;
        } else if missing.replace(x).is_some() {
            return None;
        }
    }
    missing
}

/// Rows of fixed-width bitsets over a small interned universe, stored
/// contiguously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitTable {
    width: usize,
    words: Vec<u64>,
    sizes: Vec<u32>,
}

impl BitTable {
    pub fn new(universe: usize) -> Self {
        BitTable {
            width: universe.div_ceil(64).max(1),
            words: Vec::new(),
            sizes: Vec::new(),
        }
    }

    pub fn from_sets(sets: &[IdSet], universe: usize) -> Self {
        let mut t = BitTable::new(universe);
        for s in sets {
            t.push_ids(s);
        }
        t
    }

    /// An empty table of the same width.
    pub fn empty_like(&self) -> Self {
        BitTable {
            width: self.width,
            words: Vec::new(),
            sizes: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self, row: usize) -> usize {
        self.sizes[row] as usize
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.words[row * self.width..(row + 1) * self.width]
    }

    pub fn push_ids(&mut self, ids: &[u32]) {
        let base = self.words.len();
        self.words.resize(base + self.width, 0);
        for &i in ids {
            self.words[base + (i / 64) as usize] |= 1 << (i % 64);
        }
        self.sizes.push(ids.len() as u32);
    }

    pub fn push_row(&mut self, bits: &[u64], len: usize) {
        self.words.extend_from_slice(bits);
        self.sizes.push(len as u32);
    }

    /// Sizes of `bits` intersected with every row, in row order.
    pub fn intersections<'a>(&'a self, bits: &'a [u64]) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.words
            .chunks_exact(self.width)
            .zip(&self.sizes)
            .map(move |(row, &size)| {
                let inter: u32 = row.iter().zip(bits).map(|(a, b)| (a & b).count_ones()).sum();
                (size as usize, inter as usize)
            })
    }

    /// ORs `bits` into `row`.
    pub fn union_into(&mut self, row: usize, bits: &[u64]) {
        let dst = &mut self.words[row * self.width..(row + 1) * self.width];
        let mut len = 0;
        for (a, b) in dst.iter_mut().zip(bits) {
            *a |= b;
            len += a.count_ones();
        }
        self.sizes[row] = len;
    }

    pub fn to_ids(&self, row: usize) -> IdSet {
        let mut out = Vec::with_capacity(self.len(row));
        for (wi, &w) in self.row(row).iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let bit = w.trailing_zeros();
                out.push(wi as u32 * 64 + bit);
                w &= w - 1;
            }
        }
        out
    }
}
