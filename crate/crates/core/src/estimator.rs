//! Search-space size of an instruction set, and what partitioning it into
//! subsets saves.
//!
//! Values live on levels. Inputs sit on level 0; a value on level k is an
//! instruction applied to arguments from levels below k, at least one of
//! them from level k - 1. With `C_k` the number of values on levels 0..=k,
//! an instruction of arity a creates `C_{k-1}^a - C_{k-2}^a` values on
//! level k. Counts are syntactic: equal results of different applications
//! are different nodes.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::catalog::InstructionCatalog;
use crate::error::{Error, Result};

/// Default node limit for [`enumerate_space`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArityProfile {
    pub inputs: u64,
    pub unary_count: u64,
    pub binary_count: u64,
    /// Instructions taking three or more arguments, keyed by arity.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub higher: BTreeMap<u32, u64>,
}

impl ArityProfile {
    pub fn new(inputs: u64, unary_count: u64, binary_count: u64) -> Self {
        ArityProfile {
            inputs,
            unary_count,
            binary_count,
            higher: BTreeMap::new(),
        }
    }

    /// Counts the catalog's instructions by arity. Zero-argument entries
    /// produce no new values from inputs and are left out.
    pub fn from_catalog(catalog: &InstructionCatalog, inputs: u64) -> Self {
        let mut p = ArityProfile::new(inputs, 0, 0);
        for def in catalog.defs() {
            match def.arity {
                0 => {}
                1 => p.unary_count += 1,
                2 => p.binary_count += 1,
                a => *p.higher.entry(a).or_default() += 1,
            }
        }
        p
    }

    pub fn instruction_count(&self) -> u64 {
        self.unary_count + self.binary_count + self.higher.values().sum::<u64>()
    }

    /// `(arity, count)` pairs with non-zero counts, ascending by arity.
    pub fn arities(&self) -> Vec<(u32, u64)> {
        let mut v = vec![(1, self.unary_count), (2, self.binary_count)];
        v.extend(self.higher.iter().map(|(&a, &c)| (a, c)));
        v.retain(|&(_, c)| c > 0);
        v
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpaceEstimate {
    /// New values on levels 1..=depth.
    pub per_level: Vec<BigUint>,
    /// Sum of `per_level`; inputs are not counted.
    pub cumulative: BigUint,
}

/// Closed-form level counts.
pub fn space_size(profile: &ArityProfile, depth: usize) -> SpaceEstimate {
    let arities = profile.arities();
    let mut prev2 = BigUint::zero();
    let mut prev1 = BigUint::from(profile.inputs);
    let mut per_level = Vec::with_capacity(depth);
    let mut cumulative = BigUint::zero();
    for _ in 0..depth {
        let mut level = BigUint::zero();
        for &(arity, count) in &arities {
            level += (prev1.pow(arity) - prev2.pow(arity)) * count;
        }
        cumulative += &level;
        prev2 = prev1.clone();
        prev1 += &level;
        per_level.push(level);
    }
    SpaceEstimate { per_level, cumulative }
}

/// Counts the space by building every application term.
///
/// Each level tries every instruction on every argument tuple drawn from
/// the values built so far and keeps the tuples whose newest argument is on
/// the level just below. Refuses with [`Error::BudgetExceeded`] as soon as
/// more than `budget` nodes would be needed.
pub fn enumerate_space(profile: &ArityProfile, depth: usize, budget: u64) -> Result<SpaceEstimate> {
    // Term arena. `level[v]` is the level of value v; applications also
    // record their instruction and argument values.
    let mut level: Vec<u32> = vec![0; profile.inputs as usize];
    let mut op: Vec<u32> = vec![u32::MAX; profile.inputs as usize];
    let mut args: Vec<u32> = Vec::new();
    let mut instructions: Vec<u32> = Vec::new();
    for (arity, count) in profile.arities() {
        instructions.extend(std::iter::repeat_n(arity, count as usize));
    }

    let mut per_level = Vec::with_capacity(depth);
    let mut created: u64 = 0;
    for k in 1..=depth as u32 {
        let available = level.len();
        let mut new_here: u64 = 0;
        for (instr, &arity) in instructions.iter().enumerate() {
            if available == 0 {
                break;
            }
            let mut tuple = vec![0usize; arity as usize];
            loop {
                let newest = tuple.iter().map(|&v| level[v]).max().unwrap_or(0);
                if newest + 1 == k {
                    created += 1;
                    if created > budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    new_here += 1;
                    op.push(instr as u32);
                    args.extend(tuple.iter().map(|&v| v as u32));
                    level.push(k);
                }
                // Odometer over all tuples of already available values.
                let mut pos = 0;
                loop {
                    if pos == tuple.len() {
                        break;
                    }
                    tuple[pos] += 1;
                    if tuple[pos] < available {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
                if pos == tuple.len() {
                    break;
                }
            }
        }
        per_level.push(BigUint::from(new_here));
    }
    debug_assert_eq!(op.len(), level.len());
    let cumulative = per_level.iter().sum();
    Ok(SpaceEstimate { per_level, cumulative })
}

/// An exact non-negative ratio of big integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub numerator: BigUint,
    pub denominator: BigUint,
}

fn log10_big(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    let shift = bits.saturating_sub(64);
    let top = (n >> shift).to_f64().expect("fits after shift");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

impl Ratio {
    pub fn log10(&self) -> f64 {
        log10_big(&self.numerator) - log10_big(&self.denominator)
    }

    pub fn to_f64(&self) -> f64 {
        if self.numerator.is_zero() {
            0.0
        } else {
            10f64.powf(self.log10())
        }
    }
}

/// Full search space over the combined space of `num_subsets` partitions,
/// each shaped like `subset`.
pub fn reduction_factor(
    full: &ArityProfile,
    subset: &ArityProfile,
    num_subsets: u64,
    depth: usize,
) -> Result<Ratio> {
    if num_subsets == 0 {
        return Err(Error::InvalidArgument("number of subsets must be at least 1".into()));
    }
    let numerator = space_size(full, depth).cumulative;
    let denominator = space_size(subset, depth).cumulative * num_subsets;
    if denominator.is_zero() {
        return Err(Error::ZeroDenominator(
            "subset profile generates no values at this depth".into(),
        ));
    }
    Ok(Ratio { numerator, denominator })
}

/// Profile of `overlap` instructions shared with another subset, split
/// across arities in the proportions of `subset`. The binary share is
/// rounded up; the rest is filled from unary, then higher arities.
pub fn overlap_profile(overlap: u64, subset: &ArityProfile) -> Result<ArityProfile> {
    let total = subset.instruction_count();
    if overlap > total {
        return Err(Error::InvalidArgument(format!(
            "overlap {overlap} exceeds subset size {total}"
        )));
    }
    let mut out = ArityProfile::new(subset.inputs, 0, 0);
    if overlap == 0 {
        return Ok(out);
    }
    out.binary_count = (overlap * subset.binary_count).div_ceil(total).min(subset.binary_count);
    let mut left = overlap - out.binary_count;
    for (&arity, &count) in &subset.higher {
        let share = (overlap * count / total).min(count).min(left);
        if share > 0 {
            out.higher.insert(arity, share);
            left -= share;
        }
    }
    let unary = left.min(subset.unary_count);
    out.unary_count = unary;
    left -= unary;
    // Rounding can leave a remainder; hand it to whichever arity has room.
    let room = subset.binary_count - out.binary_count;
    let extra = left.min(room);
    out.binary_count += extra;
    left -= extra;
    for (&arity, &count) in &subset.higher {
        if left == 0 {
            break;
        }
        let have = out.higher.get(&arity).copied().unwrap_or(0);
        let extra = left.min(count - have);
        if extra > 0 {
            out.higher.insert(arity, have + extra);
            left -= extra;
        }
    }
    debug_assert_eq!(left, 0);
    Ok(out)
}

/// Share of a partition's search tree that another partition also searches
/// because of `overlap` shared instructions, for levels 1..=depth.
pub fn redundancy(overlap: u64, subset: &ArityProfile, depth: usize) -> Result<Vec<f64>> {
    let shared = overlap_profile(overlap, subset)?;
    let whole = space_size(subset, depth);
    let part = space_size(&shared, depth);
    let mut out = Vec::with_capacity(depth);
    let mut num = BigUint::zero();
    let mut den = BigUint::zero();
    for (k, (p, w)) in part.per_level.iter().zip(&whole.per_level).enumerate() {
        num += p;
        den += w;
        if den.is_zero() {
            return Err(Error::ZeroDenominator(format!(
                "subset profile generates no values up to level {}",
                k + 1
            )));
        }
        out.push(
            Ratio {
                numerator: num.clone(),
                denominator: den.clone(),
            }
            .to_f64(),
        );
    }
    Ok(out)
}
