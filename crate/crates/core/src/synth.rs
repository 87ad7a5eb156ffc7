//! Synthetic corpora with realistic subset statistics.
//!
//! Subset sizes follow a shifted geometric distribution, tuned so that
//! about 90% of units use ten or fewer distinct instructions. Instructions
//! are ranked by catalog order and drawn from a Zipf distribution over the
//! ranks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{UnitKind, UnitRecord};
use crate::error::{Error, Result};
use crate::subset::InstructionSubset;

/// `1 - (1 - p)^10 = 0.9`.
pub const DEFAULT_SIZE_P: f64 = 0.2057;
pub const DEFAULT_MAX_SIZE: usize = 74;
pub const DEFAULT_UNITS_PER_FILE: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub units: usize,
    pub units_per_file: usize,
    pub zipf_exponent: f64,
    /// Success probability of the size distribution; sizes are
    /// `1 + Geometric(size_p)`, truncated to `max_size`.
    pub size_p: f64,
    pub max_size: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(units: usize, seed: u64) -> Self {
        SynthConfig {
            units,
            units_per_file: DEFAULT_UNITS_PER_FILE,
            zipf_exponent: 1.0,
            size_p: DEFAULT_SIZE_P,
            max_size: DEFAULT_MAX_SIZE,
            seed,
        }
    }
}

/// Generates `config.units` records over `vocabulary`, whose order defines
/// the frequency ranking.
pub fn synth_units(vocabulary: &[String], config: &SynthConfig) -> Result<Vec<UnitRecord>> {
    if vocabulary.is_empty() {
        return Err(Error::InvalidArgument("vocabulary is empty".into()));
    }
    if config.units_per_file == 0 || config.max_size == 0 {
        return Err(Error::InvalidArgument(
            "units per file and maximum size must be at least 1".into(),
        ));
    }
    if !(config.size_p > 0.0 && config.size_p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "size probability must be in (0, 1], got {}",
            config.size_p
        )));
    }
    let sizes = Geometric::new(config.size_p)
        .map_err(|e| Error::InvalidArgument(format!("size distribution: {e}")))?;
    let ranks = Zipf::new(vocabulary.len() as f64, config.zipf_exponent)
        .map_err(|e| Error::InvalidArgument(format!("zipf distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let max_size = config.max_size.min(vocabulary.len());

    let mut out = Vec::with_capacity(config.units);
    let mut taken = vec![false; vocabulary.len()];
    for i in 0..config.units {
        let size = (1 + sizes.sample(&mut rng) as usize).min(max_size);
        let mut picked: Vec<usize> = Vec::with_capacity(size);
        let mut draws = 0;
        while picked.len() < size && draws < 64 * size {
            draws += 1;
            let r = ranks.sample(&mut rng) as usize - 1;
            if !taken[r] {
                taken[r] = true;
                picked.push(r);
            }
        }
        // Very large subsets may exhaust the draw allowance; fill them with
        // the most frequent instructions not yet taken.
        let mut next = 0;
        while picked.len() < size {
            if !taken[next] {
                taken[next] = true;
                picked.push(next);
            }
            next += 1;
        }
        for &r in &picked {
            taken[r] = false;
        }
        out.push(UnitRecord {
            path: format!("synth/f{:05}.py", i / config.units_per_file),
            kind: UnitKind::Function,
            name: format!("u{i}"),
            instructions: InstructionSubset::new(picked.iter().map(|&r| vocabulary[r].as_str())),
        });
    }
    Ok(out)
}
