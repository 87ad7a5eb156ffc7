//! Acceptance checks. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero when any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subsetminer::clustering::{calibrate_num_ids, cluster, stage1_augment_traced, ClusterConfig};
use subsetminer::corpus::{units_to_family, UnitRecord};
use subsetminer::estimator::{
    enumerate_space, redundancy, reduction_factor, space_size, ArityProfile, DEFAULT_ENUMERATION_BUDGET,
};
use subsetminer::evaluation::{corpus_distributions, coverage_curve, measure_coverage, CurveConfig};
use subsetminer::subsetcore::{remove_proper_subsets, DEFAULT_AMPLIFY_FACTOR};
use subsetminer::synth::{synth_units, SynthConfig};
use subsetminer::{InstructionCatalog, InstructionSubset, SubsetFamily};

type Outcome = Result<String, String>;

fn vocabulary() -> Vec<String> {
    InstructionCatalog::builtin_python().names().map(str::to_owned).collect()
}

fn synth(units: usize, seed: u64) -> Vec<UnitRecord> {
    synth_units(&vocabulary(), &SynthConfig::new(units, seed)).expect("synthetic corpus")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn training_coverage() -> Outcome {
    let mut runs = 0;
    for seed in 0..50u64 {
        let units = synth(1000, seed);
        let family = units_to_family(&units, "synth");
        for m in [10, 30] {
            let mut config = ClusterConfig::new(m);
            config.seed = seed;
            let out = cluster(&family, &config).map_err(|e| e.to_string())?;
            let report = measure_coverage(&out.ids, &units, m);
            ensure(report.coverage_eligible == 100.0, || {
                format!("seed {seed}, M {m}: coverage {}", report.coverage_eligible)
            })?;
            let eligible: Vec<_> = units.iter().filter(|u| u.instructions.len() <= m).collect();
            ensure(eligible.len() == report.eligible_units && !eligible.is_empty(), || {
                format!("seed {seed}, M {m}: eligible count mismatch")
            })?;
            // Containment checked directly on names, independent of the interned fast path.
            for u in eligible {
                let names: BTreeSet<&str> = u.instructions.iter().collect();
                let hit = out
                    .ids
                    .subsets
                    .iter()
                    .any(|s| names.iter().all(|n| s.members().iter().any(|x| x == n)));
                ensure(hit, || format!("seed {seed}, M {m}: unit {} uncovered", u.name))?;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs at 100.00%"))
}

fn mask_subset(mask: u32, names: &[String]) -> InstructionSubset {
    InstructionSubset::new((0..names.len()).filter(|i| mask >> i & 1 == 1).map(|i| names[i].as_str()))
}

fn fixpoint_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut total = 0;
    for case in 0..1000 {
        let universe = rng.random_range(1..=15usize);
        let n = rng.random_range(0..=300usize);
        let names: Vec<String> = (0..universe).map(|i| format!("op{i:02}")).collect();
        let masks: Vec<u32> = (0..n)
            .map(|_| {
                let size = rng.random_range(1..=universe);
                let mut idx: Vec<usize> = (0..universe).collect();
                idx.shuffle(&mut rng);
                idx[..size].iter().fold(0, |m, &i| m | 1 << i)
            })
            .collect();
        let expected: Vec<InstructionSubset> = masks
            .iter()
            .filter(|&&a| !masks.iter().any(|&b| a != b && a & b == a))
            .map(|&m| mask_subset(m, &names))
            .collect();
        let family = SubsetFamily::new(masks.iter().map(|&m| mask_subset(m, &names)).collect());
        let got = remove_proper_subsets(&family);
        ensure(got.subsets == expected, || format!("case {case}: families differ"))?;
        total += n;
    }
    Ok(format!("1000 families, {total} subsets"))
}

const STAGE1_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const STAGE1_CASES: usize = 100_000;

fn incomparable(a: u32, b: u32) -> bool {
    a & b != a && a & b != b
}

/// Antichains of `k` non-empty subsets of six instructions, in
/// lexicographic order of their masks.
fn antichains(k: usize, out: &mut Vec<Vec<u32>>) {
    fn rec(start: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for m in start..64 {
            if cur.iter().all(|&c| incomparable(c, m)) {
                cur.push(m);
                rec(m + 1, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(1, k, &mut Vec::new(), out);
}

fn names_of(mask: u32) -> BTreeSet<&'static str> {
    (0..6).filter(|i| mask >> i & 1 == 1).map(|i| STAGE1_NAMES[i]).collect()
}

fn to_subset(s: &BTreeSet<&str>) -> InstructionSubset {
    InstructionSubset::new(s.iter().copied())
}

/// Replays one run, recomputing every decision by brute force.
fn check_stage1(masks: &[u32], cap: usize) -> Result<(), String> {
    let family = SubsetFamily::new(masks.iter().map(|&m| to_subset(&names_of(m))).collect());
    let (out, steps) = stage1_augment_traced(&family, cap);

    let mut order: Vec<BTreeSet<&str>> = masks.iter().map(|&m| names_of(m)).collect();
    order.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| to_subset(a).cmp(&to_subset(b)))
    });
    // Current contents of every set, indexed by processing position.
    let mut current: Vec<Option<BTreeSet<&str>>> = order.iter().cloned().map(Some).collect();
    let mut steps = steps.into_iter();
    for pos in 0..current.len() {
        let Some(me) = current[pos].clone() else { continue };
        let step = steps.next().ok_or("missing step")?;
        if step.subset != to_subset(&me) {
            return Err(format!("step subset {} != {}", step.subset, to_subset(&me)));
        }
        let mut best: Option<(&str, Vec<usize>)> = None;
        if me.len() < cap {
            for x in STAGE1_NAMES {
                if me.contains(x) {
                    continue;
                }
                let mut grown = me.clone();
                grown.insert(x);
                let swallowed: Vec<usize> = (0..current.len())
                    .filter(|&j| j != pos)
                    .filter(|&j| current[j].as_ref().is_some_and(|t| t.is_subset(&grown)))
                    .collect();
                if !swallowed.is_empty() && best.as_ref().is_none_or(|(_, b)| swallowed.len() > b.len()) {
                    best = Some((x, swallowed));
                }
            }
        }
        match best {
            None => {
                if step.added.is_some() || !step.subsumed.is_empty() {
                    return Err(format!("{}: expected no augmentation, got {:?}", to_subset(&me), step.added));
                }
            }
            Some((x, swallowed)) => {
                if step.added.as_deref() != Some(x) {
                    return Err(format!("{}: expected {x}, got {:?}", to_subset(&me), step.added));
                }
                let mut expected: Vec<InstructionSubset> = swallowed
                    .iter()
                    .map(|&j| to_subset(current[j].as_ref().unwrap()))
                    .collect();
                expected.sort();
                if step.subsumed != expected {
                    return Err(format!("{}: subsumed sets differ", to_subset(&me)));
                }
                for j in swallowed {
                    current[j] = None;
                }
                current[pos].as_mut().unwrap().insert(x);
            }
        }
    }
    if steps.next().is_some() {
        return Err("extra steps".into());
    }
    let expected: BTreeSet<InstructionSubset> = current.iter().flatten().map(to_subset).collect();
    let got: BTreeSet<InstructionSubset> = out.subsets.iter().cloned().collect();
    if got != expected || out.len() != expected.len() {
        return Err("final family differs".into());
    }
    Ok(())
}

fn stage1_oracle() -> Outcome {
    let mut families = Vec::new();
    for k in 1..=3 {
        antichains(k, &mut families);
    }
    let exhaustive = families.len();
    // Larger antichains are far too many to list; sample the rest.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    while families.len() < STAGE1_CASES {
        let k = rng.random_range(4..=6);
        let mut fam: Vec<u32> = Vec::with_capacity(k);
        let mut tries = 0;
        while fam.len() < k && tries < 200 {
            tries += 1;
            let m = rng.random_range(1..64u32);
            if fam.iter().all(|&c| incomparable(c, m)) {
                fam.push(m);
            }
        }
        if fam.len() == k {
            families.push(fam);
        }
    }
    for (i, fam) in families.iter().enumerate() {
        let cap = 2 + i % 5;
        check_stage1(fam, cap).map_err(|e| format!("family {fam:?}, cap {cap}: {e}"))?;
    }
    Ok(format!(
        "{} families ({exhaustive} exhaustive up to 3 subsets, rest sampled)",
        families.len()
    ))
}

fn estimator_oracle() -> Outcome {
    let mut cases = 0;
    for inputs in 1..=3 {
        for unary in 0..=2 {
            for binary in 0..=2 {
                if unary + binary == 0 {
                    continue;
                }
                let p = ArityProfile::new(inputs, unary, binary);
                for depth in 0..=3 {
                    let closed = space_size(&p, depth);
                    let built = enumerate_space(&p, depth, DEFAULT_ENUMERATION_BUDGET).map_err(|e| e.to_string())?;
                    ensure(closed == built, || {
                        format!("inputs {inputs}, unary {unary}, binary {binary}, depth {depth}: {closed:?} vs {built:?}")
                    })?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} grid points agree"))
}

/// Values through `depth` levels, inputs included, in floating point:
/// every value at a level is an input or an instruction applied to earlier values.
fn values_f64(inputs: f64, unary: f64, binary: f64, depth: usize) -> f64 {
    (0..depth).fold(inputs, |n, _| inputs + unary * n + binary * n * n)
}

fn reduction_magnitude() -> Outcome {
    let full = ArityProfile::new(1, 0, 200);
    let subset = ArityProfile::new(1, 0, 10);
    let ratio = reduction_factor(&full, &subset, 1000, 5).map_err(|e| e.to_string())?;
    let log = ratio.log10();
    let oracle = ((values_f64(1.0, 0.0, 200.0, 5) - 1.0) / (1000.0 * (values_f64(1.0, 0.0, 10.0, 5) - 1.0))).log10();
    ensure((log - oracle).abs() < 1e-9 * oracle.abs(), || format!("log10 {log} vs float {oracle}"))?;
    ensure(log > 6.0, || format!("log10 {log} <= 6"))?;
    Ok(format!("log10 reduction {log:.2}"))
}

fn redundancy_decay() -> Outcome {
    let subset = ArityProfile::new(1, 0, 10);
    let r = redundancy(2, &subset, 5).map_err(|e| e.to_string())?;
    ensure(r.len() == 5, || format!("{} levels", r.len()))?;
    for (k, &rk) in r.iter().enumerate() {
        let d = k + 1;
        let oracle = (values_f64(1.0, 0.0, 2.0, d) - 1.0) / (values_f64(1.0, 0.0, 10.0, d) - 1.0);
        ensure((rk - oracle).abs() <= 1e-9 * oracle, || format!("R{d} {rk} vs float {oracle}"))?;
    }
    ensure(r.windows(2).all(|w| w[0] > w[1]), || format!("not strictly decreasing: {r:?}"))?;
    ensure(r[4] < 0.01, || format!("R5 {}", r[4]))?;
    Ok(format!("R1..R5 = {}", r.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")))
}

fn fixed_corpus() -> Vec<UnitRecord> {
    synth(10_000, 42)
}

fn coverage_trend(units: &[UnitRecord]) -> Outcome {
    let config = CurveConfig {
        sizes: vec![10],
        fractions: (1..=10).map(|k| k as f64 / 10.0).collect(),
        seeds: (0..5).collect(),
        headroom: None,
        amplify_factor: DEFAULT_AMPLIFY_FACTOR,
        num_ids: 0,
        increment: 10,
    };
    let report = coverage_curve(units, &config).map_err(|e| e.to_string())?;
    let means: Vec<f64> = report.cells.iter().map(|c| c.mean_coverage_eligible).collect();
    ensure(means.len() == 10, || format!("{} cells", means.len()))?;
    let shown = means.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(" ");
    for (i, w) in means.windows(2).enumerate() {
        ensure(w[1] >= w[0] - 1.0, || {
            format!("dip of {:.2} pp after fraction {:.1}: {shown}", w[0] - w[1], config.fractions[i])
        })?;
    }
    ensure(means[9] == 100.0, || format!("fraction 1.0 gives {}", means[9]))?;
    Ok(format!("means {shown}"))
}

fn subset_count_trend(units: &[UnitRecord]) -> Outcome {
    let family = units_to_family(units, "synth");
    let mut counts = Vec::new();
    for m in [10, 20, 30, 40, 50] {
        let n = calibrate_num_ids(&family, &ClusterConfig::new(m), 10).map_err(|e| e.to_string())?;
        counts.push((m, n));
    }
    let shown = counts.iter().map(|(m, n)| format!("M{m}:{n}")).collect::<Vec<_>>().join(" ");
    ensure(counts.windows(2).all(|w| w[1].1 <= w[0].1), || format!("increase in {shown}"))?;
    Ok(shown)
}

const BIN: &str = env!("CARGO_BIN_EXE_subsetminer");

fn run_all_subcommands(dir: &Path, jobs: &str) -> Result<(), String> {
    fs::create_dir_all(dir.join("src/pkg")).map_err(|e| e.to_string())?;
    fs::write(
        dir.join("src/a.py"),
        "import os\n\ndef f(xs):\n    return sorted(len(x) + 1 for x in xs)\n\nclass K:\n    def m(self, y):\n        return abs(y) * 2\n\nprint(f(['a']))\n",
    )
    .map_err(|e| e.to_string())?;
    fs::write(dir.join("src/pkg/b.py"), "def g(d):\n    return max(d.keys(), default=0) - min(d)\n")
        .map_err(|e| e.to_string())?;
    let commands: [&[&str]; 10] = [
        &["synth", "--count", "1500", "--seed", "3", "--out", "units.jsonl"],
        &["extract", "--root", "src", "--out", "ex.jsonl", "--stats", "ex_stats.json"],
        &["prep", "--units", "units.jsonl", "--size", "10", "--out", "prep.json"],
        &["cluster", "--units", "units.jsonl", "--size", "10", "--seed", "5", "--out", "fam.json"],
        &["cluster", "--family", "prep.json", "--size", "10", "--num-ids", "40", "--out", "fam40.json"],
        &["calibrate", "--units", "units.jsonl", "--sizes", "10,20", "--out", "cal.csv"],
        &[
            "coverage", "--family", "fam.json", "--units", "units.jsonl", "--out", "cov.json", "--summary-csv",
            "cov.csv", "--per-subset-csv", "per.csv",
        ],
        &[
            "curve", "--units", "units.jsonl", "--sizes", "10", "--fractions", "0.3,1.0", "--runs", "2", "--out",
            "curve.csv", "--means", "means.csv",
        ],
        &[
            "stats", "--units", "units.jsonl", "--out", "stats.json", "--histogram", "h.csv", "--instructions",
            "i.csv", "--pairs", "p.csv",
        ],
        &[
            "estimate", "--unary", "2", "--binary", "3", "--depth", "4", "--subset-binary", "2", "--subset-unary", "1",
            "--num-subsets", "10", "--overlap", "1", "--out", "est.csv",
        ],
    ];
    for args in commands {
        let out = Command::new(BIN)
            .arg("--jobs")
            .arg(jobs)
            .args(args)
            .current_dir(dir)
            .env_remove("SUBSETMINER_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr).trim())
        })?;
    }
    Ok(())
}

fn tree_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let one = root.path().join("jobs1");
    let eight = root.path().join("jobs8");
    run_all_subcommands(&one, "1")?;
    run_all_subcommands(&eight, "8")?;
    let a = tree_contents(&one);
    let b = tree_contents(&eight);
    ensure(a.keys().eq(b.keys()), || "different sets of output files".into())?;
    let manifests = a.keys().filter(|k| k.ends_with(".manifest.json")).count();
    ensure(manifests == 10, || format!("{manifests} manifests"))?;
    for (name, bytes) in &a {
        ensure(&b[name] == bytes, || format!("{name} differs"))?;
    }
    Ok(format!("{} files identical, {manifests} manifests", a.len()))
}

fn distribution_bookkeeping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for fixture in 0..100 {
        let vocab: Vec<String> = (0..rng.random_range(1..=20)).map(|i| format!("x{i}")).collect();
        let n = rng.random_range(0..=300);
        let units: Vec<InstructionSubset> = (0..n)
            .map(|_| {
                let size = rng.random_range(1..=vocab.len().min(8));
                let mut v = vocab.clone();
                v.shuffle(&mut rng);
                InstructionSubset::new(v.into_iter().take(size))
            })
            .collect();
        let d = corpus_distributions(&units);
        let fail = |what: &str| format!("fixture {fixture}: {what}");

        ensure(d.total_units == n, || fail("unit count"))?;
        ensure(d.size_histogram.iter().map(|b| b.units).sum::<usize>() == n, || fail("histogram sum"))?;
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for u in &units {
            *sizes.entry(u.len()).or_default() += 1;
        }
        let mut running = 0;
        let expected_hist: Vec<(usize, usize, f64)> = sizes
            .iter()
            .map(|(&s, &c)| {
                running += c;
                (s, c, 100.0 * running as f64 / n as f64)
            })
            .collect();
        let got_hist: Vec<(usize, usize, f64)> =
            d.size_histogram.iter().map(|b| (b.size, b.units, b.cumulative_percent)).collect();
        ensure(got_hist == expected_hist, || fail("histogram"))?;

        let mut singles: Vec<(usize, String)> = Vec::new();
        for a in &vocab {
            let c = units.iter().filter(|u| u.contains(a)).count();
            if c > 0 {
                singles.push((c, a.clone()));
            }
        }
        singles.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| x.1.cmp(&y.1)));
        let got: Vec<(usize, String)> = d.instruction_frequency.iter().map(|c| (c.units, c.instruction.clone())).collect();
        ensure(got == singles, || fail("instruction frequencies"))?;

        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for a in &vocab {
            for b in &vocab {
                if a < b {
                    let c = units.iter().filter(|u| u.contains(a) && u.contains(b)).count();
                    if c > 0 {
                        pairs.push((c, a.clone(), b.clone()));
                    }
                }
            }
        }
        pairs.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| (&x.1, &x.2).cmp(&(&y.1, &y.2))));
        let got: Vec<(usize, String, String)> =
            d.pair_frequency.iter().map(|p| (p.units, p.first.clone(), p.second.clone())).collect();
        ensure(got == pairs, || fail("pair frequencies"))?;
        let single: BTreeMap<&str, usize> = singles.iter().map(|(c, a)| (a.as_str(), *c)).collect();
        ensure(
            pairs.iter().all(|(c, a, b)| *c <= single[a.as_str()].min(single[b.as_str()])),
            || fail("pair above member count"),
        )?;
    }
    Ok("100 fixtures match the nested-loop tally".into())
}

fn main() {
    let mut failed = 0;
    let mut check = |name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    };
    check("training coverage is exact", &training_coverage);
    check("proper-subset removal matches the quadratic filter", &fixpoint_oracle);
    check("augmentation choices match brute force", &stage1_oracle);
    check("closed-form space size matches enumeration", &estimator_oracle);
    check("reduction exceeds six orders of magnitude", &reduction_magnitude);
    check("redundancy decays below 1% by depth 5", &redundancy_decay);
    let corpus = fixed_corpus();
    check("coverage rises with training fraction", &|| coverage_trend(&corpus));
    check("calibrated subset count falls with size", &|| subset_count_trend(&corpus));
    check("outputs are identical across thread counts", &determinism);
    check("distributions match a direct tally", &distribution_bookkeeping);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
