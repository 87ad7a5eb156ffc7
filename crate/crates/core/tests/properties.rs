use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use subsetminer::clustering::{cluster, ClusterConfig};
use subsetminer::corpus::{UnitKind, UnitRecord};
use subsetminer::estimator::{redundancy, space_size, ArityProfile};
use subsetminer::evaluation::{corpus_distributions, measure_coverage, split_corpus};
use subsetminer::subsetcore::{covers, dedupe, remove_proper_subsets};
use subsetminer::{InstructionSubset, SubsetFamily};

const NAMES: [&str; 10] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];

fn subset() -> impl Strategy<Value = InstructionSubset> {
    prop::collection::btree_set(0..NAMES.len(), 1..6)
        .prop_map(|ix| InstructionSubset::new(ix.into_iter().map(|i| NAMES[i])))
}

fn family() -> impl Strategy<Value = SubsetFamily> {
    prop::collection::vec(subset(), 0..40).prop_map(SubsetFamily::new)
}

fn records() -> impl Strategy<Value = Vec<UnitRecord>> {
    prop::collection::vec((0..8usize, subset()), 1..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (file, instructions))| UnitRecord {
                path: format!("f{file}.py"),
                kind: UnitKind::Function,
                name: format!("u{i}"),
                instructions,
            })
            .collect()
    })
}

fn is_antichain(f: &SubsetFamily) -> bool {
    f.subsets.iter().enumerate().all(|(i, a)| {
        f.subsets
            .iter()
            .enumerate()
            .all(|(j, b)| i == j || !a.is_subset_of(b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dedupe_is_idempotent(f in family()) {
        let once = dedupe(&f);
        prop_assert_eq!(&dedupe(&once).subsets, &once.subsets);
        let distinct: BTreeSet<_> = f.subsets.iter().collect();
        prop_assert_eq!(once.len(), distinct.len());
    }

    #[test]
    fn reduction_is_an_idempotent_covering_antichain(f in family()) {
        let r = remove_proper_subsets(&dedupe(&f));
        prop_assert!(is_antichain(&r));
        prop_assert_eq!(&remove_proper_subsets(&r).subsets, &r.subsets);
        for s in &f.subsets {
            prop_assert!(covers(&r, s));
        }
        for s in &r.subsets {
            prop_assert!(f.subsets.contains(s));
        }
    }

    #[test]
    fn clustering_covers_admitted_units_within_cap(
        f in family(),
        m in 3..8usize,
        num_ids in 0..6usize,
        seed in 0..4u64,
    ) {
        let mut config = ClusterConfig::new(m);
        config.num_ids = num_ids;
        config.seed = seed;
        config.increment = 1;
        let out = cluster(&f, &config).unwrap();
        let cap = config.cap();
        prop_assert!(out.ids.subsets.iter().all(|s| s.len() <= cap));
        for s in f.subsets.iter().filter(|s| s.len() <= m) {
            prop_assert!(covers(&out.ids, s), "{} uncovered", s);
        }
        prop_assert_eq!(out.num_created, out.ids.len());
        let again = cluster(&f, &config).unwrap();
        prop_assert_eq!(out.ids.to_json(), again.ids.to_json());
    }

    #[test]
    fn coverage_grows_with_the_family(
        ids in family(),
        extra in subset(),
        units in prop::collection::vec(subset(), 0..40),
        replace in any::<prop::sample::Index>(),
    ) {
        let base = measure_coverage(&ids, &units, 5);
        let mut more = ids.clone();
        more.subsets.push(extra.clone());
        let grown = measure_coverage(&more, &units, 5);
        prop_assert!(grown.covered_units >= base.covered_units);
        prop_assert!(grown.covered_all_units >= base.covered_all_units);

        if !ids.is_empty() {
            let k = replace.index(ids.len());
            let mut wider = ids.clone();
            wider.subsets[k] = wider.subsets[k].union(&extra);
            let widened = measure_coverage(&wider, &units, 5);
            prop_assert!(widened.covered_units >= base.covered_units);
        }
        let brute = units.iter().filter(|u| u.len() <= 5 && covers(&ids, u)).count();
        prop_assert_eq!(base.covered_units, brute);
    }

    #[test]
    fn space_grows_with_every_parameter(
        inputs in 1..4u64,
        unary in 0..3u64,
        binary in 0..3u64,
        depth in 0..5usize,
    ) {
        let p = ArityProfile::new(inputs, unary, binary);
        let base = space_size(&p, depth).cumulative;
        prop_assert!(space_size(&p, depth + 1).cumulative >= base);
        prop_assert!(space_size(&ArityProfile::new(inputs + 1, unary, binary), depth).cumulative >= base);
        prop_assert!(space_size(&ArityProfile::new(inputs, unary + 1, binary), depth).cumulative >= base);
        prop_assert!(space_size(&ArityProfile::new(inputs, unary, binary + 1), depth).cumulative >= base);
    }

    #[test]
    fn redundancy_shrinks_with_depth_and_grows_with_overlap(
        unary in 0..5u64,
        binary in 1..8u64,
        overlap_seed in any::<prop::sample::Index>(),
    ) {
        let subset = ArityProfile::new(1, unary, binary);
        let total = unary + binary;
        let overlap = 1 + overlap_seed.index(total as usize) as u64;
        let r = redundancy(overlap, &subset, 4).unwrap();
        prop_assert!(r.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
        if overlap < total {
            let bigger = redundancy(overlap + 1, &subset, 4).unwrap();
            prop_assert!(r.iter().zip(&bigger).all(|(a, b)| a <= b));
        }
        let full = redundancy(total, &subset, 4).unwrap();
        prop_assert!(full.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn distributions_agree_with_direct_counts(units in prop::collection::vec(subset(), 0..50)) {
        let d = corpus_distributions(&units);
        prop_assert_eq!(d.total_units, units.len());
        prop_assert_eq!(d.size_histogram.iter().map(|b| b.units).sum::<usize>(), units.len());
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for u in &units {
            for m in u.iter() {
                *freq.entry(m).or_default() += 1;
            }
        }
        prop_assert_eq!(d.instruction_frequency.len(), freq.len());
        for c in &d.instruction_frequency {
            prop_assert_eq!(freq[c.instruction.as_str()], c.units);
        }
        for p in &d.pair_frequency {
            prop_assert!(p.units <= freq[p.first.as_str()].min(freq[p.second.as_str()]));
        }
    }

    #[test]
    fn split_is_a_file_granular_partition(units in records(), fraction in 0.05..=1.0f64, seed in 0..50u64) {
        let (train, test) = split_corpus(&units, fraction, seed).unwrap();
        prop_assert_eq!(train.len() + test.len(), units.len());
        prop_assert!(!train.is_empty());
        let train_files: BTreeSet<_> = train.iter().map(|u| &u.path).collect();
        prop_assert!(test.iter().all(|u| !train_files.contains(&u.path)));
        let all: Vec<_> = units.iter().map(|u| &u.name).collect();
        let mut rejoined: Vec<_> = train.iter().chain(&test).map(|u| &u.name).collect();
        rejoined.sort_by_key(|n| all.iter().position(|m| m == n));
        prop_assert_eq!(rejoined, all);
        if fraction == 1.0 {
            prop_assert!(test.is_empty());
        }
    }
}
