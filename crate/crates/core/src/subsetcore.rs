//! Set algebra over subset families: the cover relation, de-duplication,
//! proper-subset removal, size filtering and amplification.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::setops::{self, IdSet, Vocab};
use crate::subset::{InstructionSubset, Stage, SubsetFamily};

/// Default amplification factor: 50% more subsets.
pub const DEFAULT_AMPLIFY_FACTOR: f64 = 0.5;

/// True iff some member of `family` contains every instruction of `iu`.
pub fn covers(family: &SubsetFamily, iu: &InstructionSubset) -> bool {
    family.subsets.iter().any(|s| iu.is_subset_of(s))
}

/// Keeps the first occurrence of every distinct subset.
pub fn dedupe(family: &SubsetFamily) -> SubsetFamily {
    let mut seen = HashSet::with_capacity(family.len());
    let subsets = family
        .subsets
        .iter()
        .filter(|s| seen.insert(*s))
        .cloned()
        .collect();
    family.derive(Stage::Deduped, subsets)
}

/// Subsets of size at most `limit`, order preserved.
pub fn filter_by_size(family: &SubsetFamily, limit: usize) -> SubsetFamily {
    let subsets = family
        .subsets
        .iter()
        .filter(|s| s.len() <= limit)
        .cloned()
        .collect();
    let mut out = family.derive(family.meta.stage, subsets);
    out.meta.size_limit = Some(limit);
    out
}

/// Removes every subset that is a proper subset of another member.
///
/// Containment is transitive, so a single pass against the full family
/// reaches the same fixpoint as repeated passes. Survivors keep their
/// relative order.
pub fn remove_proper_subsets(family: &SubsetFamily) -> SubsetFamily {
    let vocab = Vocab::from_subsets(&family.subsets);
    let sets: Vec<IdSet> = family
        .subsets
        .iter()
        .map(|s| vocab.encode(s).expect("vocabulary built from family"))
        .collect();
    let keep = maximal_mask(&sets, vocab.len());
    let subsets = family
        .subsets
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(s, _)| s.clone())
        .collect();
    family.derive(Stage::Reduced, subsets)
}

/// `mask[i]` is false iff `sets[i]` is a proper subset of some other set.
pub(crate) fn maximal_mask(sets: &[IdSet], universe: usize) -> Vec<bool> {
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); universe];
    for (i, s) in sets.iter().enumerate() {
        for &x in s {
            postings[x as usize].push(i as u32);
        }
    }
    let any_nonempty = sets.iter().any(|s| !s.is_empty());
    sets.iter()
        .enumerate()
        .map(|(i, s)| {
            if s.is_empty() {
                return !any_nonempty;
            }
            // Any strict superset must appear in the postings of every member,
            // so scanning the shortest list is enough.
            let rarest = s
                .iter()
                .min_by_key(|&&x| postings[x as usize].len())
                .expect("non-empty");
            !postings[*rarest as usize].iter().any(|&j| {
                let j = j as usize;
                j != i && sets[j].len() > s.len() && setops::is_subset(s, &sets[j])
            })
        })
        .collect()
}

/// Adds up to `ceil(factor * |family|)` artificial subsets, each the union of
/// two distinct members.
///
/// Only members of size at most `cap / 2` are paired. Pairs are drawn
/// uniformly without replacement from a seeded ChaCha stream; a pair is
/// rejected when its union exceeds `cap` or is already present. At most
/// `10 * target` draws are made. The input is de-duplicated first.
pub fn amplify(family: &SubsetFamily, factor: f64, cap: usize, seed: u64) -> Result<SubsetFamily> {
    if !factor.is_finite() || factor < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "amplification factor must be a non-negative number, got {factor}"
        )));
    }
    let base = dedupe(family);
    let target = (factor * base.len() as f64).ceil() as usize;
    let pool: Vec<usize> = base
        .subsets
        .iter()
        .enumerate()
        .filter(|(_, s)| s.len() <= cap / 2)
        .map(|(i, _)| i)
        .collect();

    let mut subsets = base.subsets.clone();
    if target > 0 && pool.len() >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut present: HashSet<InstructionSubset> = subsets.iter().cloned().collect();
        let mut drawn: HashSet<(usize, usize)> = HashSet::new();
        let possible_pairs = pool.len() * (pool.len() - 1) / 2;
        let budget = target.saturating_mul(10);
        let mut created = 0;
        let mut attempts = 0;
        while created < target && attempts < budget && drawn.len() < possible_pairs {
            attempts += 1;
            let a = rng.random_range(0..pool.len());
            let mut b = rng.random_range(0..pool.len() - 1);
            if b >= a {
                b += 1;
            }
            let pair = (a.min(b), a.max(b));
            if !drawn.insert(pair) {
                continue;
            }
            let merged = base.subsets[pool[pair.0]].union(&base.subsets[pool[pair.1]]);
            if merged.len() > cap || present.contains(&merged) {
                continue;
            }
            present.insert(merged.clone());
            subsets.push(merged);
            created += 1;
        }
    }
    let mut out = base.derive(Stage::Amplified, subsets);
    out.meta.seed = Some(seed);
    Ok(out)
}
