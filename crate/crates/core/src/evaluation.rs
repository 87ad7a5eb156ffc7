//! Train/test splitting, coverage of held-out units, and corpus
//! distribution statistics.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterConfig};
use crate::corpus::{units_to_family, UnitRecord};
use crate::error::{Error, Result};
use crate::setops::{self, IdSet, Vocab};
use crate::subset::{InstructionSubset, SubsetFamily};

/// Anything carrying the instruction subset of one program unit.
pub trait AsSubset {
    fn subset(&self) -> &InstructionSubset;
}

impl AsSubset for InstructionSubset {
    fn subset(&self) -> &InstructionSubset {
        self
    }
}

impl AsSubset for UnitRecord {
    fn subset(&self) -> &InstructionSubset {
        &self.instructions
    }
}

/// Splits at file granularity: all units of one path land on the same
/// side. `round(fraction * files)` files, at least one, go to training.
/// Both halves keep the input order.
pub fn split_corpus(
    units: &[UnitRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<UnitRecord>, Vec<UnitRecord>)> {
    if units.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1], got {train_fraction}"
        )));
    }
    let mut files: Vec<&str> = units
        .iter()
        .map(|u| u.path.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = files.len();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n);
    files.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_files: HashSet<&str> = files[..n_train].iter().copied().collect();
    let (train, test) = units
        .iter()
        .cloned()
        .partition(|u| train_files.contains(u.path.as_str()));
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetCoverage {
    pub index: usize,
    /// Eligible units this subset covers on its own.
    pub covered: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub size_limit: usize,
    pub total_units: usize,
    /// Units with at most `size_limit` instructions.
    pub eligible_units: usize,
    /// Eligible units covered by some subset.
    pub covered_units: usize,
    /// Units of any size covered by some subset.
    pub covered_all_units: usize,
    /// `100 * covered_units / eligible_units`, 0 when nothing is eligible.
    pub coverage_eligible: f64,
    /// `100 * covered_all_units / total_units`, 0 for no units.
    pub coverage_all: f64,
    pub per_subset: Vec<SubsetCoverage>,
}

impl CoverageReport {
    /// Subsets ordered by how many eligible units they cover, most first;
    /// ties keep family order.
    pub fn ranked(&self) -> Vec<SubsetCoverage> {
        let mut v = self.per_subset.clone();
        v.sort_by(|a, b| b.covered.cmp(&a.covered).then(a.index.cmp(&b.index)));
        v
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Family members containing `unit`, found through the postings of the
/// unit's rarest instruction.
fn covering(unit: &IdSet, sets: &[IdSet], postings: &[Vec<u32>]) -> Vec<u32> {
    let Some(rarest) = unit.iter().min_by_key(|&&x| postings[x as usize].len()) else {
        // The empty set is inside every member.
        return (0..sets.len() as u32).collect();
    };
    postings[*rarest as usize]
        .iter()
        .copied()
        .filter(|&j| setops::is_subset(unit, &sets[j as usize]))
        .collect()
}

/// Coverage of `units` by `ids`. A unit is covered when some member of
/// `ids` contains all of its instructions.
pub fn measure_coverage<U: AsSubset + Sync>(ids: &SubsetFamily, units: &[U], size_limit: usize) -> CoverageReport {
    let vocab = Vocab::from_subsets(&ids.subsets);
    let sets: Vec<IdSet> = ids
        .subsets
        .iter()
        .map(|s| vocab.encode(s).expect("vocabulary built from family"))
        .collect();
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); vocab.len()];
    for (j, s) in sets.iter().enumerate() {
        for &x in s {
            postings[x as usize].push(j as u32);
        }
    }

    struct Acc {
        eligible: usize,
        covered: usize,
        covered_all: usize,
        per_subset: Vec<usize>,
    }
    let fresh = || Acc {
        eligible: 0,
        covered: 0,
        covered_all: 0,
        per_subset: vec![0; sets.len()],
    };
    let acc = units
        .par_iter()
        .fold(fresh, |mut acc, u| {
            let s = u.subset();
            let eligible = s.len() <= size_limit;
            acc.eligible += usize::from(eligible);
            let hits = vocab.encode(s).map(|e| covering(&e, &sets, &postings)).unwrap_or_default();
            if !hits.is_empty() {
                acc.covered_all += 1;
                if eligible {
                    acc.covered += 1;
                    for j in hits {
                        acc.per_subset[j as usize] += 1;
                    }
                }
            }
            acc
        })
        .reduce(fresh, |mut a, b| {
            a.eligible += b.eligible;
            a.covered += b.covered;
            a.covered_all += b.covered_all;
            for (x, y) in a.per_subset.iter_mut().zip(b.per_subset) {
                *x += y;
            }
            a
        });

    CoverageReport {
        size_limit,
        total_units: units.len(),
        eligible_units: acc.eligible,
        covered_units: acc.covered,
        covered_all_units: acc.covered_all,
        coverage_eligible: percent(acc.covered, acc.eligible),
        coverage_all: percent(acc.covered_all, units.len()),
        per_subset: acc
            .per_subset
            .into_iter()
            .enumerate()
            .map(|(index, covered)| SubsetCoverage { index, covered })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeBucket {
    pub size: usize,
    pub units: usize,
    pub cumulative_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionCount {
    pub instruction: String,
    pub units: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCount {
    pub first: String,
    pub second: String,
    pub units: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub total_units: usize,
    /// Ascending by size.
    pub size_histogram: Vec<SizeBucket>,
    /// Units containing each instruction, most frequent first.
    pub instruction_frequency: Vec<InstructionCount>,
    /// Units containing both members of each pair, most frequent first.
    /// `first < second`.
    pub pair_frequency: Vec<PairCount>,
}

/// Size histogram and instruction and pair frequencies. Rankings are by
/// descending count, then lexicographic.
pub fn corpus_distributions<U: AsSubset>(units: &[U]) -> DistributionReport {
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    let vocab = Vocab::from_subsets(units.iter().map(AsSubset::subset));
    let mut singles = vec![0usize; vocab.len()];
    let mut pairs: HashMap<(u32, u32), usize> = HashMap::new();
    for u in units {
        let s = vocab.encode(u.subset()).expect("vocabulary built from units");
        *sizes.entry(s.len()).or_default() += 1;
        for (i, &a) in s.iter().enumerate() {
            singles[a as usize] += 1;
            for &b in &s[i + 1..] {
                *pairs.entry((a, b)).or_default() += 1;
            }
        }
    }

    let mut size_keys: Vec<_> = sizes.into_iter().collect();
    size_keys.sort_unstable();
    let mut running = 0;
    let size_histogram = size_keys
        .into_iter()
        .map(|(size, count)| {
            running += count;
            SizeBucket {
                size,
                units: count,
                cumulative_percent: percent(running, units.len()),
            }
        })
        .collect();

    // Interned ids follow name order, so sorting by id breaks ties
    // lexicographically.
    let mut ranked: Vec<(u32, usize)> = singles.into_iter().enumerate().map(|(i, c)| (i as u32, c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let instruction_frequency = ranked
        .into_iter()
        .map(|(i, c)| InstructionCount {
            instruction: vocab.name(i).to_owned(),
            units: c,
        })
        .collect();

    let mut ranked_pairs: Vec<((u32, u32), usize)> = pairs.into_iter().collect();
    ranked_pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let pair_frequency = ranked_pairs
        .into_iter()
        .map(|((a, b), c)| PairCount {
            first: vocab.name(a).to_owned(),
            second: vocab.name(b).to_owned(),
            units: c,
        })
        .collect();

    DistributionReport {
        total_units: units.len(),
        size_histogram,
        instruction_frequency,
        pair_frequency,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub sizes: Vec<usize>,
    pub fractions: Vec<f64>,
    /// One split per seed; the same seed also drives amplification.
    pub seeds: Vec<u64>,
    /// Headroom per size; `None` uses the default for each size.
    pub headroom: Option<usize>,
    pub amplify_factor: f64,
    /// Requested derived subsets; 0 calibrates each cell.
    pub num_ids: usize,
    pub increment: usize,
}

impl CurveConfig {
    pub fn cluster_config(&self, size: usize, seed: u64) -> ClusterConfig {
        let mut c = ClusterConfig::new(size);
        if let Some(h) = self.headroom {
            c.headroom = h;
        }
        c.seed = seed;
        c.amplify_factor = self.amplify_factor;
        c.num_ids = self.num_ids;
        c.increment = self.increment;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub size: usize,
    pub fraction: f64,
    pub seed: u64,
    pub train_units: usize,
    pub num_ids: usize,
    pub coverage_eligible: f64,
    pub coverage_all: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveCell {
    pub size: usize,
    pub fraction: f64,
    pub mean_coverage_eligible: f64,
    pub mean_coverage_all: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    /// Ordered by size, then fraction, then seed.
    pub rows: Vec<CurveRow>,
    /// Means over seeds, ordered by size, then fraction.
    pub cells: Vec<CurveCell>,
}

/// For each size, fraction and seed: split, cluster the training side and
/// measure coverage against every unit.
pub fn coverage_curve(units: &[UnitRecord], config: &CurveConfig) -> Result<CurveReport> {
    if config.sizes.is_empty() || config.fractions.is_empty() || config.seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "sizes, fractions and seeds must all be non-empty".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &size in &config.sizes {
        for &fraction in &config.fractions {
            for &seed in &config.seeds {
                jobs.push((size, fraction, seed));
            }
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(size, fraction, seed)| {
            let (train, _) = split_corpus(units, fraction, seed)?;
            let family = units_to_family(&train, "train");
            let result = clustering::cluster(&family, &config.cluster_config(size, seed))?;
            let report = measure_coverage(&result.ids, units, size);
            Ok(CurveRow {
                size,
                fraction,
                seed,
                train_units: train.len(),
                num_ids: result.num_created,
                coverage_eligible: report.coverage_eligible,
                coverage_all: report.coverage_all,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_cell = config.seeds.len();
    let cells = rows
        .chunks(per_cell)
        .map(|chunk| CurveCell {
            size: chunk[0].size,
            fraction: chunk[0].fraction,
            mean_coverage_eligible: chunk.iter().map(|r| r.coverage_eligible).sum::<f64>() / per_cell as f64,
            mean_coverage_all: chunk.iter().map(|r| r.coverage_all).sum::<f64>() / per_cell as f64,
        })
        .collect();
    Ok(CurveReport { rows, cells })
}
