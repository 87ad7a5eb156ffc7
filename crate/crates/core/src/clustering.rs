//! Clustering of program-unit subsets into derived subsets.
//!
//! The pipeline runs de-duplication, size filtering, amplification and
//! proper-subset removal, then two clustering stages and a size-driven
//! post-merge:
//!
//! 1. *Augmentation*: each subset, largest first, may gain one instruction
//!    when doing so swallows other subsets; the instruction swallowing the
//!    most wins.
//! 2. *Placement*: subsets are poured into a requested number of derived
//!    subsets, each joining the one it overlaps most among those with room.
//! 3. *Post-merge*: the smallest derived subset is folded into the largest
//!    one it fits, until no pair fits under the cap.
//!
//! Every tie is broken lexicographically (instructions, subsets) or by
//! lowest index (derived subsets), so results depend only on the input and
//! the configuration.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setops::{self, BitTable, IdSet, Vocab};
use crate::subset::{InstructionSubset, Stage, SubsetFamily};
use crate::subsetcore::{self, DEFAULT_AMPLIFY_FACTOR};

pub const DEFAULT_INCREMENT: usize = 10;

/// 20% of the target size, rounded up.
pub fn default_headroom(target_size: usize) -> usize {
    target_size.div_ceil(5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Nominal derived-subset size M; larger input subsets are ignored.
    pub target_size: usize,
    /// Extra room on top of M; derived subsets may hold M + headroom.
    pub headroom: usize,
    /// Requested number of derived subsets; 0 calibrates automatically.
    pub num_ids: usize,
    pub seed: u64,
    pub amplify_factor: f64,
    /// Step used when calibrating `num_ids`.
    pub increment: usize,
}

impl ClusterConfig {
    pub fn new(target_size: usize) -> Self {
        ClusterConfig {
            target_size,
            headroom: default_headroom(target_size),
            num_ids: 0,
            seed: 0,
            amplify_factor: DEFAULT_AMPLIFY_FACTOR,
            increment: DEFAULT_INCREMENT,
        }
    }

    pub fn cap(&self) -> usize {
        self.target_size + self.headroom
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_size == 0 {
            return Err(Error::InvalidArgument("target size must be at least 1".into()));
        }
        if self.increment == 0 {
            return Err(Error::InvalidArgument("calibration increment must be at least 1".into()));
        }
        if !self.amplify_factor.is_finite() || self.amplify_factor < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "amplification factor must be a non-negative number, got {}",
                self.amplify_factor
            )));
        }
        Ok(())
    }
}

/// Family sizes after each pipeline step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterTrace {
    pub input: usize,
    pub after_dedupe: usize,
    pub after_filter: usize,
    pub after_amplify: usize,
    pub after_reduce: usize,
    pub after_stage1: usize,
    pub requested_ids: usize,
    pub after_stage2: usize,
    pub after_postmerge: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    pub ids: SubsetFamily,
    pub num_created: usize,
    pub trace: ClusterTrace,
}

/// One decision of the augmentation stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentStep {
    /// The subset as it stood before the step.
    pub subset: InstructionSubset,
    pub added: Option<String>,
    /// Other subsets deleted because they became subsets of the augmented one.
    pub subsumed: Vec<InstructionSubset>,
}

/// Descending size, then lexicographic.
fn sort_processing_order(sets: &mut [IdSet]) {
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
}

struct RawStep {
    before: IdSet,
    added: Option<u32>,
    subsumed: Vec<IdSet>,
}

/// Augmentation over an antichain of interned sets. Returns the survivors in
/// processing order.
fn augment(mut sets: Vec<IdSet>, cap: usize, universe: usize, record: bool) -> (Vec<IdSet>, Vec<RawStep>) {
    sort_processing_order(&mut sets);
    let n = sets.len();
    let mut alive = vec![true; n];
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); universe];
    let mut singletons = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        for &x in s {
            postings[x as usize].push(i as u32);
        }
        if s.len() == 1 {
            singletons.push(i);
        }
    }

    let mut hits = vec![0u32; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut gain = vec![0u32; universe];
    let mut candidates: Vec<(u32, usize)> = Vec::new();
    let mut steps = Vec::new();

    for pos in 0..n {
        if !alive[pos] {
            continue;
        }
        if sets[pos].len() >= cap {
            if record {
                steps.push(RawStep {
                    before: sets[pos].clone(),
                    added: None,
                    subsumed: Vec::new(),
                });
            }
            continue;
        }

        // Another set J is swallowed by adding i exactly when J \ IU = {i}.
        for &x in &sets[pos] {
            for &j in &postings[x as usize] {
                let j = j as usize;
                if j != pos && alive[j] {
                    if hits[j] == 0 {
                        touched.push(j);
                    }
                    hits[j] += 1;
                }
            }
        }
        candidates.clear();
        for &j in &touched {
            if sets[j].len() == hits[j] as usize + 1 {
                let missing = setops::sole_missing(&sets[j], &sets[pos])
                    .expect("exactly one member outside the current subset");
                candidates.push((missing, j));
            }
            hits[j] = 0;
        }
        touched.clear();
        for &j in &singletons {
            // Earlier subsets may have grown since they were listed.
            if j != pos && alive[j] && sets[j].len() == 1 && !sets[pos].contains(&sets[j][0]) {
                candidates.push((sets[j][0], j));
            }
        }

        let mut best: Option<(u32, u32)> = None;
        for &(i, _) in &candidates {
            gain[i as usize] += 1;
        }
        for &(i, _) in &candidates {
            let g = gain[i as usize];
            best = match best {
                Some((bi, bg)) if bg > g || (bg == g && bi <= i) => Some((bi, bg)),
                _ => Some((i, g)),
            };
        }
        for &(i, _) in &candidates {
            gain[i as usize] = 0;
        }

        let Some((instr, _)) = best else {
            if record {
                steps.push(RawStep {
                    before: sets[pos].clone(),
                    added: None,
                    subsumed: Vec::new(),
                });
            }
            continue;
        };
        let before = sets[pos].clone();
        let mut subsumed = Vec::new();
        for &(i, j) in &candidates {
            if i == instr {
                alive[j] = false;
                if record {
                    subsumed.push(sets[j].clone());
                }
            }
        }
        let at = sets[pos].partition_point(|&x| x < instr);
        sets[pos].insert(at, instr);
        postings[instr as usize].push(pos as u32);
        if record {
            subsumed.sort();
            steps.push(RawStep {
                before,
                added: Some(instr),
                subsumed,
            });
        }
    }

    let survivors = sets
        .into_iter()
        .zip(alive)
        .filter_map(|(s, a)| a.then_some(s))
        .collect();
    (survivors, steps)
}

/// Places sets (already in processing order) into derived subsets.
fn place(sets: &BitTable, num_ids: usize, cap: usize) -> Result<BitTable> {
    let mut ids = sets.empty_like();
    for i in 0..sets.rows() {
        let size = sets.len(i);
        if size > cap {
            return Err(Error::OversizedSubset { size, cap });
        }
        let bits = sets.row(i);
        if ids.rows() < num_ids {
            ids.push_row(bits, size);
            continue;
        }
        // Most overlap among those with room, then smallest, then lowest index.
        let mut best: Option<(usize, usize, usize)> = None;
        for (k, (len, inter)) in ids.intersections(bits).enumerate() {
            if len + size - inter > cap {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bi, bl)) => inter > bi || (inter == bi && len < bl),
            };
            if better {
                best = Some((k, inter, len));
            }
        }
        match best {
            Some((k, _, _)) => ids.union_into(k, bits),
            None => ids.push_row(bits, size),
        }
    }
    Ok(ids)
}

/// Folds the smallest derived subset into the largest one it fits, repeatedly.
/// Returns the surviving rows in order.
///
/// A subset that fits nowhere never fits later, since other subsets only
/// grow, so it is retired instead of being retried.
fn merge_small(ids: &mut BitTable, cap: usize) -> Vec<usize> {
    let k = ids.rows();
    let mut alive = vec![true; k];
    // Candidates still looking for a target, smallest first.
    let mut pending: BTreeSet<(usize, usize)> = (0..k).map(|i| (ids.len(i), i)).collect();
    while let Some((src_len, src)) = pending.pop_first() {
        let bits = ids.row(src).to_vec();
        let mut dst: Option<(usize, usize)> = None;
        for (t, (len, inter)) in ids.intersections(&bits).enumerate() {
            if t == src || !alive[t] || len + src_len - inter > cap {
                continue;
            }
            if dst.is_none_or(|(_, best)| len > best) {
                dst = Some((t, len));
            }
        }
        if let Some((t, old_len)) = dst {
            ids.union_into(t, &bits);
            alive[src] = false;
            if pending.remove(&(old_len, t)) {
                pending.insert((ids.len(t), t));
            }
        }
    }
    (0..k).filter(|&i| alive[i]).collect()
}

fn encode_family(family: &SubsetFamily) -> (Vocab, Vec<IdSet>) {
    let vocab = Vocab::from_subsets(&family.subsets);
    let sets = family
        .subsets
        .iter()
        .map(|s| vocab.encode(s).expect("vocabulary built from family"))
        .collect();
    (vocab, sets)
}

/// Augmentation stage on its own. `family` must be de-duplicated and free of
/// proper subsets.
pub fn stage1_augment(family: &SubsetFamily, cap: usize) -> SubsetFamily {
    stage1_augment_traced(family, cap).0
}

/// Augmentation stage, also returning one [`AugmentStep`] per subset that
/// was still alive when its turn came.
pub fn stage1_augment_traced(family: &SubsetFamily, cap: usize) -> (SubsetFamily, Vec<AugmentStep>) {
    let (vocab, sets) = encode_family(family);
    let (out, steps) = augment(sets, cap, vocab.len(), true);
    let steps = steps
        .into_iter()
        .map(|st| AugmentStep {
            subset: vocab.decode(&st.before),
            added: st.added.map(|i| vocab.name(i).to_owned()),
            subsumed: st.subsumed.iter().map(|s| vocab.decode(s)).collect(),
        })
        .collect();
    let subsets = out.iter().map(|s| vocab.decode(s)).collect();
    (family.derive(Stage::Reduced, subsets), steps)
}

/// Placement stage on its own. Members are processed in descending size
/// order regardless of their order in `family`.
pub fn stage2_merge(family: &SubsetFamily, num_ids: usize, cap: usize) -> Result<SubsetFamily> {
    let (vocab, mut sets) = encode_family(family);
    sort_processing_order(&mut sets);
    let ids = place(&BitTable::from_sets(&sets, vocab.len()), num_ids, cap)?;
    let subsets = (0..ids.rows()).map(|k| vocab.decode(&ids.to_ids(k))).collect();
    Ok(family.derive(Stage::Derived, subsets))
}

/// Post-merge stage on its own; survivors keep their relative order.
pub fn post_merge(ids: &SubsetFamily, cap: usize) -> SubsetFamily {
    let (vocab, sets) = encode_family(ids);
    let mut table = BitTable::from_sets(&sets, vocab.len());
    let survivors = merge_small(&mut table, cap);
    let subsets = survivors.iter().map(|&k| vocab.decode(&table.to_ids(k))).collect();
    ids.derive(Stage::Derived, subsets)
}

/// Size of a set of rows no two of which fit together under `cap`, built
/// greedily. Each of them needs its own derived subset, so no run can end
/// with fewer.
fn incompatible_clique(sets: &BitTable, cap: usize) -> usize {
    let mut clique = sets.empty_like();
    for i in 0..sets.rows() {
        let size = sets.len(i);
        let bits = sets.row(i);
        if clique.intersections(bits).all(|(len, inter)| len + size - inter > cap) {
            clique.push_row(bits, size);
        }
    }
    clique.rows()
}

/// Pre-processed input ready for placement; placement and post-merge can be
/// re-run cheaply for different requested counts.
#[derive(Clone, Debug)]
pub struct Clusterer {
    config: ClusterConfig,
    source: String,
    vocab: Vocab,
    sets: Vec<IdSet>,
    table: BitTable,
    /// No request below this can be honoured.
    lower_bound: usize,
    trace: ClusterTrace,
}

impl Clusterer {
    pub fn prepare(units: &SubsetFamily, config: &ClusterConfig) -> Result<Clusterer> {
        config.validate()?;
        let mut trace = ClusterTrace {
            input: units.len(),
            ..ClusterTrace::default()
        };
        let deduped = subsetcore::dedupe(units);
        trace.after_dedupe = deduped.len();
        let admitted = subsetcore::filter_by_size(&deduped, config.target_size);
        trace.after_filter = admitted.len();
        // Merged subsets are kept within M so they are never filtered out.
        let amplified = subsetcore::amplify(
            &admitted,
            config.amplify_factor,
            config.target_size,
            config.seed,
        )?;
        trace.after_amplify = amplified.len();
        let reduced = subsetcore::remove_proper_subsets(&amplified);
        trace.after_reduce = reduced.len();

        let (vocab, sets) = encode_family(&reduced);
        let (mut sets, _) = augment(sets, config.cap(), vocab.len(), false);
        trace.after_stage1 = sets.len();
        sort_processing_order(&mut sets);
        let table = BitTable::from_sets(&sets, vocab.len());
        Ok(Clusterer {
            config: config.clone(),
            source: units.meta.source.clone(),
            lower_bound: incompatible_clique(&table, config.cap()),
            table,
            vocab,
            sets,
            trace,
        })
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    /// Subsets left after augmentation, in placement order.
    pub fn stage1_subsets(&self) -> Vec<InstructionSubset> {
        self.sets.iter().map(|s| self.vocab.decode(s)).collect()
    }

    /// Placement and post-merge: the final table, its surviving rows and
    /// the number of derived subsets placement created.
    fn run(&self, num_ids: usize) -> (BitTable, Vec<usize>, usize) {
        let mut placed = place(&self.table, num_ids, self.config.cap()).expect("prepared subsets fit the cap");
        let after_stage2 = placed.rows();
        let survivors = merge_small(&mut placed, self.config.cap());
        (placed, survivors, after_stage2)
    }

    /// Number of derived subsets produced for a request of `num_ids`.
    pub fn created_for(&self, num_ids: usize) -> usize {
        self.run(num_ids).1.len()
    }

    pub fn finish(&self, num_ids: usize) -> ClusterResult {
        let (table, survivors, after_stage2) = self.run(num_ids);
        let mut subsets: Vec<InstructionSubset> =
            survivors.iter().map(|&k| self.vocab.decode(&table.to_ids(k))).collect();
        subsets.sort();
        let mut trace = self.trace.clone();
        trace.requested_ids = num_ids;
        trace.after_stage2 = after_stage2;
        trace.after_postmerge = subsets.len();
        let mut family = SubsetFamily::new(subsets);
        family.meta.source = self.source.clone();
        family.meta.size_limit = Some(self.config.target_size);
        family.meta.headroom = self.config.headroom;
        family.meta.seed = Some(self.config.seed);
        family.meta.stage = Stage::Derived;
        family.meta.trace = Some(trace.clone());
        ClusterResult {
            num_created: family.len(),
            ids: family,
            trace,
        }
    }

    /// Smallest positive multiple of `increment` whose request is honoured,
    /// i.e. no more derived subsets are created than were asked for.
    ///
    /// Requests at or above the number of prepared subsets are always
    /// honoured, so the search terminates. It starts at the first multiple
    /// not below a greedy set of pairwise incompatible subsets, since any
    /// smaller request yields at least that many. An empty input calibrates
    /// to 0.
    pub fn calibrate(&self, increment: usize) -> Result<usize> {
        if increment == 0 {
            return Err(Error::InvalidArgument("calibration increment must be at least 1".into()));
        }
        if self.sets.is_empty() {
            return Ok(0);
        }
        let batch = rayon::current_num_threads().max(1);
        let mut step = self.lower_bound.div_ceil(increment).max(1);
        loop {
            let candidates: Vec<usize> = (step..step + batch).map(|k| k * increment).collect();
            let honoured: Vec<bool> = candidates
                .par_iter()
                .map(|&n| self.created_for(n) <= n)
                .collect();
            if let Some(p) = honoured.iter().position(|&h| h) {
                return Ok(candidates[p]);
            }
            step += batch;
        }
    }
}

/// Full pipeline. With `config.num_ids == 0` the request is calibrated first
/// using `config.increment`.
pub fn cluster(units: &SubsetFamily, config: &ClusterConfig) -> Result<ClusterResult> {
    let prepared = Clusterer::prepare(units, config)?;
    let num_ids = if config.num_ids == 0 {
        prepared.calibrate(config.increment)?
    } else {
        config.num_ids
    };
    Ok(prepared.finish(num_ids))
}

/// Calibrated number of derived subsets for `units` under `config`
/// (its `num_ids` is ignored).
pub fn calibrate_num_ids(units: &SubsetFamily, config: &ClusterConfig, increment: usize) -> Result<usize> {
    Clusterer::prepare(units, config)?.calibrate(increment)
}
