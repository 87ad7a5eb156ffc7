//! The `subsetminer` command line.
//!
//! Every subcommand reads its inputs, writes its outputs atomically, and
//! writes a run manifest next to its main output unless that output is
//! stdout (`-`). Diagnostics go to stderr as a single line
//! `error: <kind>: <message>`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::catalog::{load_catalog, InstructionCatalog};
use crate::clustering::{self, default_headroom, ClusterConfig, Clusterer, DEFAULT_INCREMENT};
use crate::corpus::{self, NestedDefs, ScanOptions, SplitOptions, UnitRecord};
use crate::error::{Error, Result};
use crate::estimator::{self, ArityProfile, SpaceEstimate, DEFAULT_ENUMERATION_BUDGET};
use crate::evaluation::{self, CurveConfig};
use crate::subset::SubsetFamily;
use crate::subsetcore::{self, DEFAULT_AMPLIFY_FACTOR};
use crate::synth::{self, SynthConfig, DEFAULT_MAX_SIZE, DEFAULT_SIZE_P, DEFAULT_UNITS_PER_FILE};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const SEED_ENV: &str = "SUBSETMINER_SEED";

#[derive(Parser, Debug)]
#[command(name = "subsetminer", version, about = "Mine and cluster instruction co-occurrence subsets")]
struct Cli {
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan a directory, .zip archive or file into units JSONL.
    Extract(ExtractArgs),
    /// De-duplicate units and drop proper subsets.
    Prep(PrepArgs),
    /// Cluster units into derived subsets.
    Cluster(ClusterArgs),
    /// Find the smallest honoured number of derived subsets per size.
    Calibrate(CalibrateArgs),
    /// Coverage of units by a family of derived subsets.
    Coverage(CoverageArgs),
    /// Coverage of the whole corpus when training on a fraction of it.
    Curve(CurveArgs),
    /// Subset-size histogram and instruction and pair frequencies.
    Stats(StatsArgs),
    /// Search-space size, reduction factor and overlap redundancy.
    Estimate(EstimateArgs),
    /// Generate a synthetic units JSONL corpus.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum NestedMode {
    Separate,
    Inline,
}

#[derive(Args, Debug, Serialize)]
struct ExtractArgs {
    /// Directory, .zip archive or single source file.
    #[arg(long)]
    root: PathBuf,
    /// Catalog JSON; the bundled Python catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// File suffixes to scan, comma separated.
    #[arg(long, value_delimiter = ',', default_value = ".py")]
    extensions: Vec<String>,
    /// Whether definitions nested in functions become their own units.
    #[arg(long, value_enum, default_value_t = NestedMode::Separate)]
    nested_defs: NestedMode,
    /// Units JSONL.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    /// Corpus statistics JSON.
    #[arg(long)]
    #[serde(skip)]
    stats: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct PrepArgs {
    #[arg(long)]
    units: String,
    /// Also drop units with more instructions than this.
    #[arg(long)]
    size: Option<usize>,
    /// Family JSON.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

#[derive(Args, Debug, Serialize)]
#[group(id = "input", required = true, multiple = false, args = ["units", "family"])]
struct ClusterInput {
    /// Units JSONL.
    #[arg(long)]
    units: Option<String>,
    /// Family JSON, e.g. from `prep`.
    #[arg(long)]
    family: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct ClusterParams {
    /// Extra room above the target size [default: ceil(size / 5)].
    #[arg(long)]
    headroom: Option<usize>,
    /// Artificial subsets to add, as a fraction of the input.
    #[arg(long, default_value_t = DEFAULT_AMPLIFY_FACTOR)]
    amplify: f64,
    /// Calibration step.
    #[arg(long, default_value_t = DEFAULT_INCREMENT)]
    increment: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
}

impl ClusterParams {
    fn config(&self, size: usize, num_ids: usize) -> ClusterConfig {
        ClusterConfig {
            target_size: size,
            headroom: self.headroom.unwrap_or_else(|| default_headroom(size)),
            num_ids,
            seed: self.seed,
            amplify_factor: self.amplify,
            increment: self.increment,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ClusterArgs {
    #[command(flatten)]
    input: ClusterInput,
    /// Target size M of the derived subsets.
    #[arg(long, short = 'm')]
    size: usize,
    /// Requested number of derived subsets; 0 calibrates.
    #[arg(long, default_value_t = 0)]
    num_ids: usize,
    #[command(flatten)]
    params: ClusterParams,
    /// Family JSON.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

fn default_sizes() -> Vec<usize> {
    (1..=10).map(|k| k * 10).collect()
}

#[derive(Args, Debug, Serialize)]
struct CalibrateArgs {
    #[command(flatten)]
    input: ClusterInput,
    /// Target sizes, comma separated [default: 10,20,...,100].
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[command(flatten)]
    params: ClusterParams,
    /// CSV: size,headroom,num_ids,created.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct CoverageArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    units: String,
    /// Units larger than this are not eligible [default: the family's size limit].
    #[arg(long)]
    size: Option<usize>,
    /// Report JSON.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    /// One-row CSV summary.
    #[arg(long)]
    #[serde(skip)]
    summary_csv: Option<String>,
    /// CSV ranking the subsets by the units they cover.
    #[arg(long)]
    #[serde(skip)]
    per_subset_csv: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

fn default_fractions() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Args, Debug, Serialize)]
struct CurveArgs {
    #[arg(long)]
    units: String,
    /// Target sizes [default: 10,20,...,100].
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Training fractions [default: 0.1,0.2,...,1.0].
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    /// Splits per cell, using seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Requested number of derived subsets; 0 calibrates every cell.
    #[arg(long, default_value_t = 0)]
    num_ids: usize,
    #[command(flatten)]
    params: ClusterParams,
    /// CSV, one row per size, fraction and seed.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    /// CSV of per-cell means over seeds.
    #[arg(long)]
    #[serde(skip)]
    means: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct StatsArgs {
    #[arg(long)]
    units: String,
    /// Summary JSON.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    /// CSV: size,units,cumulative_percent.
    #[arg(long)]
    #[serde(skip)]
    histogram: Option<String>,
    /// CSV: rank,instruction,units.
    #[arg(long)]
    #[serde(skip)]
    instructions: Option<String>,
    /// CSV: rank,first,second,units.
    #[arg(long)]
    #[serde(skip)]
    pairs: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    #[arg(long, default_value_t = 1)]
    inputs: u64,
    #[arg(long, default_value_t = 0)]
    unary: u64,
    #[arg(long, default_value_t = 0)]
    binary: u64,
    /// Count instructions by arity from this catalog instead.
    #[arg(long, conflicts_with_all = ["unary", "binary", "builtin_catalog"])]
    catalog: Option<PathBuf>,
    /// Count instructions by arity from the bundled catalog.
    #[arg(long)]
    builtin_catalog: bool,
    #[arg(long)]
    depth: usize,
    /// Count by building every term instead of the closed form.
    #[arg(long)]
    enumerate: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
    /// Unary instructions per subset; adds a log10_reduction column.
    #[arg(long)]
    subset_unary: Option<u64>,
    /// Binary instructions per subset; adds a log10_reduction column.
    #[arg(long)]
    subset_binary: Option<u64>,
    #[arg(long, default_value_t = 1)]
    num_subsets: u64,
    /// Instructions shared between subsets; adds a redundancy column.
    #[arg(long)]
    overlap: Option<u64>,
    /// CSV: level,new_values,cumulative,log10_cumulative[,log10_reduction][,redundancy].
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    /// Number of units.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_UNITS_PER_FILE)]
    units_per_file: usize,
    #[arg(long, default_value_t = 1.0)]
    zipf_exponent: f64,
    /// Success probability of the geometric size distribution.
    #[arg(long, default_value_t = DEFAULT_SIZE_P)]
    size_p: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
    max_size: usize,
    /// Instruction vocabulary, most frequent first [default: bundled catalog].
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Units JSONL.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    out: String,
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<String>,
}

/// Records how an output was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    /// Every parameter after defaults are applied. Output paths and the
    /// thread count are left out since they do not affect content.
    pub config: serde_json::Value,
    /// SHA-256 of each input, keyed by the path as given.
    pub input_digests: BTreeMap<String, String>,
    pub tool_version: String,
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => return report(&Error::InvalidArgument(format!("thread pool: {e}"))),
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    let msg = e.to_string().replace(['\n', '\r'], " ");
    eprintln!("error: {}: {}", e.kind(), msg);
    1
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Extract(a) => extract(a),
        Command::Prep(a) => prep(a),
        Command::Cluster(a) => cluster(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Coverage(a) => coverage(a),
        Command::Curve(a) => curve(a),
        Command::Stats(a) => stats(a),
        Command::Estimate(a) => estimate(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

/// Collects input digests while reading.
#[derive(Default)]
struct Inputs {
    digests: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Inputs {
    fn read(&mut self, path: &str) -> Result<String> {
        let bytes = if path == "-" {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(|e| Error::io("<stdin>", e))?;
            buf
        } else {
            fs::read(path).map_err(|e| Error::io(path, e))?
        };
        self.digests.insert(path.to_owned(), sha256_hex(&bytes));
        String::from_utf8(bytes).map_err(|_| Error::Format {
            what: "input",
            line: 0,
            message: format!("{path} is not valid UTF-8"),
        })
    }

    /// Digest of a file, or of a directory's sorted file names and contents.
    fn record_tree(&mut self, root: &Path) -> Result<()> {
        let digest = if root.is_dir() {
            let mut hasher = Sha256::new();
            for entry in WalkDir::new(root).sort_by_file_name() {
                let entry = entry.map_err(|e| {
                    Error::io(root, e.into_io_error().unwrap_or_else(|| io::Error::other("walk failed")))
                })?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
                let bytes = fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
                hasher.update(rel.to_string_lossy().as_bytes());
                hasher.update([0]);
                hasher.update(Sha256::digest(&bytes));
            }
            hex::encode(hasher.finalize())
        } else {
            sha256_hex(&fs::read(root).map_err(|e| Error::io(root, e))?)
        };
        self.digests.insert(root.display().to_string(), digest);
        Ok(())
    }

    fn catalog(&mut self, path: Option<&Path>) -> Result<InstructionCatalog> {
        match path {
            Some(p) => load_catalog(&self.read(&p.to_string_lossy())?),
            None => Ok(InstructionCatalog::builtin_python()),
        }
    }

    fn units(&mut self, path: &str) -> Result<Vec<UnitRecord>> {
        corpus::read_units_jsonl(&self.read(path)?)
    }

    fn family(&mut self, path: &str) -> Result<SubsetFamily> {
        SubsetFamily::from_json(&self.read(path)?)
    }
}

/// Writes `content` to `path` through a temporary file in the same
/// directory, or to stdout for `-`.
fn write_output(path: &str, content: &[u8]) -> Result<()> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(content)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io("<stdout>", e))?;
        return Ok(());
    }
    let target = Path::new(path);
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(content).map_err(|e| Error::io(tmp.path().to_path_buf(), e))?;
    tmp.persist(target).map_err(|e| Error::io(target, e.error))?;
    Ok(())
}

fn finish<C: Serialize>(
    command: &str,
    config: &C,
    inputs: Inputs,
    main_output: &str,
    manifest: Option<&str>,
) -> Result<()> {
    let target = match manifest {
        Some(m) => m.to_owned(),
        None if main_output == "-" => return Ok(()),
        None => format!("{main_output}.manifest.json"),
    };
    let m = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        command: command.to_owned(),
        config: serde_json::to_value(config).expect("config serializes"),
        input_digests: inputs.digests,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
    };
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    write_output(&target, text.as_bytes())
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn pct(x: f64) -> String {
    format!("{x:.2}")
}

fn extract(a: ExtractArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let catalog = inputs.catalog(a.catalog.as_deref())?;
    inputs.record_tree(&a.root)?;
    let options = ScanOptions {
        extensions: a.extensions.clone(),
        split: SplitOptions {
            nested_defs: match a.nested_defs {
                NestedMode::Separate => NestedDefs::Separate,
                NestedMode::Inline => NestedDefs::Inline,
            },
        },
    };
    let (records, stats) = corpus::scan_corpus(&a.root, &catalog, &options)?;
    write_output(&a.out, corpus::write_units_jsonl(&records).as_bytes())?;
    if let Some(path) = &a.stats {
        #[derive(Serialize)]
        struct StatsFile<'a> {
            format_version: u32,
            #[serde(flatten)]
            stats: &'a corpus::CorpusStats,
        }
        write_output(
            path,
            &json_bytes(&StatsFile {
                format_version: REPORT_FORMAT_VERSION,
                stats: &stats,
            }),
        )?;
    }
    finish("extract", &a, inputs, &a.out, a.manifest.as_deref())
}

fn prep(a: PrepArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let units = inputs.units(&a.units)?;
    let mut family = subsetcore::dedupe(&corpus::units_to_family(&units, &a.units));
    if let Some(limit) = a.size {
        family = subsetcore::filter_by_size(&family, limit);
    }
    let family = subsetcore::remove_proper_subsets(&family);
    write_output(&a.out, family.to_json().as_bytes())?;
    finish("prep", &a, inputs, &a.out, a.manifest.as_deref())
}

fn cluster_input(inputs: &mut Inputs, input: &ClusterInput) -> Result<SubsetFamily> {
    match (&input.units, &input.family) {
        (Some(u), _) => Ok(corpus::units_to_family(&inputs.units(u)?, u)),
        (None, Some(f)) => inputs.family(f),
        (None, None) => Err(Error::InvalidArgument("one of --units or --family is required".into())),
    }
}

fn cluster(mut a: ClusterArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let family = cluster_input(&mut inputs, &a.input)?;
    let config = a.params.config(a.size, a.num_ids);
    a.params.headroom = Some(config.headroom);
    let result = clustering::cluster(&family, &config)?;
    write_output(&a.out, result.ids.to_json().as_bytes())?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        #[serde(flatten)]
        args: &'a ClusterArgs,
        calibrated_num_ids: usize,
    }
    let resolved = Resolved {
        args: &a,
        calibrated_num_ids: result.trace.requested_ids,
    };
    finish("cluster", &resolved, inputs, &a.out, a.manifest.as_deref())
}

fn calibrate(mut a: CalibrateArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let family = cluster_input(&mut inputs, &a.input)?;
    if a.sizes.is_empty() {
        a.sizes = default_sizes();
    }
    #[derive(Serialize)]
    struct Row {
        size: usize,
        headroom: usize,
        num_ids: usize,
        created: usize,
    }
    let mut rows = Vec::new();
    for &size in &a.sizes {
        let config = a.params.config(size, 0);
        let prepared = Clusterer::prepare(&family, &config)?;
        let num_ids = prepared.calibrate(config.increment)?;
        rows.push(Row {
            size,
            headroom: config.headroom,
            num_ids,
            created: prepared.created_for(num_ids),
        });
    }
    write_output(&a.out, &csv_bytes(&["size", "headroom", "num_ids", "created"], rows))?;
    finish("calibrate", &a, inputs, &a.out, a.manifest.as_deref())
}

fn coverage(mut a: CoverageArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let family = inputs.family(&a.family)?;
    let units = inputs.units(&a.units)?;
    let size = a.size.or(family.meta.size_limit).ok_or_else(|| {
        Error::InvalidArgument("--size is required when the family records no size limit".into())
    })?;
    a.size = Some(size);
    let report = evaluation::measure_coverage(&family, &units, size);

    #[derive(Serialize)]
    struct ReportFile<'a> {
        format_version: u32,
        #[serde(flatten)]
        report: &'a evaluation::CoverageReport,
    }
    write_output(
        &a.out,
        &json_bytes(&ReportFile {
            format_version: REPORT_FORMAT_VERSION,
            report: &report,
        }),
    )?;
    if let Some(path) = &a.summary_csv {
        let row = (
            report.size_limit,
            report.total_units,
            report.eligible_units,
            report.covered_units,
            report.covered_all_units,
            pct(report.coverage_eligible),
            pct(report.coverage_all),
        );
        let header = [
            "size_limit",
            "total_units",
            "eligible_units",
            "covered_units",
            "covered_all_units",
            "coverage_eligible",
            "coverage_all",
        ];
        write_output(path, &csv_bytes(&header, [row]))?;
    }
    if let Some(path) = &a.per_subset_csv {
        let rows = report.ranked().into_iter().enumerate().map(|(rank, s)| {
            (
                rank + 1,
                s.index,
                s.covered,
                pct(if report.eligible_units == 0 {
                    0.0
                } else {
                    100.0 * s.covered as f64 / report.eligible_units as f64
                }),
                family.subsets[s.index].members().join(" "),
            )
        });
        write_output(
            path,
            &csv_bytes(&["rank", "index", "covered", "covered_percent", "subset"], rows),
        )?;
    }
    finish("coverage", &a, inputs, &a.out, a.manifest.as_deref())
}

fn curve(mut a: CurveArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let units = inputs.units(&a.units)?;
    if a.sizes.is_empty() {
        a.sizes = default_sizes();
    }
    if a.fractions.is_empty() {
        a.fractions = default_fractions();
    }
    if a.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be at least 1".into()));
    }
    let config = CurveConfig {
        sizes: a.sizes.clone(),
        fractions: a.fractions.clone(),
        seeds: (0..a.runs).map(|k| a.params.seed.wrapping_add(k)).collect(),
        headroom: a.params.headroom,
        amplify_factor: a.params.amplify,
        num_ids: a.num_ids,
        increment: a.params.increment,
    };
    let report = evaluation::coverage_curve(&units, &config)?;
    let rows = report.rows.iter().map(|r| {
        (
            r.size,
            r.fraction,
            r.seed,
            r.train_units,
            r.num_ids,
            pct(r.coverage_eligible),
            pct(r.coverage_all),
        )
    });
    let header = [
        "size",
        "fraction",
        "seed",
        "train_units",
        "num_ids",
        "coverage_eligible",
        "coverage_all",
    ];
    write_output(&a.out, &csv_bytes(&header, rows))?;
    if let Some(path) = &a.means {
        let rows = report
            .cells
            .iter()
            .map(|c| (c.size, c.fraction, pct(c.mean_coverage_eligible), pct(c.mean_coverage_all)));
        write_output(
            path,
            &csv_bytes(
                &["size", "fraction", "mean_coverage_eligible", "mean_coverage_all"],
                rows,
            ),
        )?;
    }
    finish("curve", &a, inputs, &a.out, a.manifest.as_deref())
}

fn stats(a: StatsArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let units = inputs.units(&a.units)?;
    let d = evaluation::corpus_distributions(&units);

    #[derive(Serialize)]
    struct Summary {
        format_version: u32,
        total_units: usize,
        distinct_instructions: usize,
        distinct_pairs: usize,
        max_size: usize,
        size_histogram: Vec<evaluation::SizeBucket>,
    }
    let summary = Summary {
        format_version: REPORT_FORMAT_VERSION,
        total_units: d.total_units,
        distinct_instructions: d.instruction_frequency.len(),
        distinct_pairs: d.pair_frequency.len(),
        max_size: d.size_histogram.last().map_or(0, |b| b.size),
        size_histogram: d.size_histogram.clone(),
    };
    write_output(&a.out, &json_bytes(&summary))?;
    if let Some(path) = &a.histogram {
        let rows = d
            .size_histogram
            .iter()
            .map(|b| (b.size, b.units, pct(b.cumulative_percent)));
        write_output(path, &csv_bytes(&["size", "units", "cumulative_percent"], rows))?;
    }
    if let Some(path) = &a.instructions {
        let rows = d
            .instruction_frequency
            .iter()
            .enumerate()
            .map(|(i, f)| (i + 1, f.instruction.as_str(), f.units));
        write_output(path, &csv_bytes(&["rank", "instruction", "units"], rows))?;
    }
    if let Some(path) = &a.pairs {
        let rows = d
            .pair_frequency
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1, p.first.as_str(), p.second.as_str(), p.units));
        write_output(path, &csv_bytes(&["rank", "first", "second", "units"], rows))?;
    }
    finish("stats", &a, inputs, &a.out, a.manifest.as_deref())
}

fn log10_cell(v: &num_bigint::BigUint) -> String {
    let r = estimator::Ratio {
        numerator: v.clone(),
        denominator: 1u32.into(),
    };
    format!("{:.6}", r.log10())
}

fn estimate(mut a: EstimateArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let full = if a.catalog.is_some() || a.builtin_catalog {
        let catalog = inputs.catalog(a.catalog.as_deref())?;
        let p = ArityProfile::from_catalog(&catalog, a.inputs);
        a.unary = p.unary_count;
        a.binary = p.binary_count;
        p
    } else {
        ArityProfile::new(a.inputs, a.unary, a.binary)
    };
    if full.instruction_count() == 0 {
        return Err(Error::InvalidArgument("profile has no instructions".into()));
    }
    let space: SpaceEstimate = if a.enumerate {
        estimator::enumerate_space(&full, a.depth, a.budget)?
    } else {
        estimator::space_size(&full, a.depth)
    };
    let subset = match (a.subset_unary, a.subset_binary) {
        (None, None) => None,
        (u, b) => Some(ArityProfile::new(a.inputs, u.unwrap_or(0), b.unwrap_or(0))),
    };
    let reductions = match &subset {
        Some(s) => Some(
            (1..=a.depth)
                .map(|k| estimator::reduction_factor(&full, s, a.num_subsets, k).map(|r| format!("{:.6}", r.log10())))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let redundancy = match a.overlap {
        Some(ov) => {
            let s = subset.as_ref().ok_or_else(|| {
                Error::InvalidArgument("--overlap needs --subset-unary or --subset-binary".into())
            })?;
            Some(estimator::redundancy(ov, s, a.depth)?)
        }
        None => None,
    };

    let mut header = vec!["level", "new_values", "cumulative", "log10_cumulative"];
    if reductions.is_some() {
        header.push("log10_reduction");
    }
    if redundancy.is_some() {
        header.push("redundancy");
    }
    let mut running = num_bigint::BigUint::default();
    let mut rows = Vec::with_capacity(a.depth);
    for (k, level) in space.per_level.iter().enumerate() {
        running += level;
        let mut row = vec![
            (k + 1).to_string(),
            level.to_string(),
            running.to_string(),
            log10_cell(&running),
        ];
        if let Some(r) = &reductions {
            row.push(r[k].clone());
        }
        if let Some(r) = &redundancy {
            row.push(format!("{:.6e}", r[k]));
        }
        rows.push(row);
    }
    write_output(&a.out, &csv_bytes(&header, rows))?;
    finish("estimate", &a, inputs, &a.out, a.manifest.as_deref())
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let mut inputs = Inputs::default();
    let catalog = inputs.catalog(a.catalog.as_deref())?;
    let vocabulary: Vec<String> = catalog.names().map(str::to_owned).collect();
    let config = SynthConfig {
        units: a.count,
        units_per_file: a.units_per_file,
        zipf_exponent: a.zipf_exponent,
        size_p: a.size_p,
        max_size: a.max_size,
        seed: a.seed,
    };
    let units = synth::synth_units(&vocabulary, &config)?;
    write_output(&a.out, corpus::write_units_jsonl(&units).as_bytes())?;
    finish("synth", &a, inputs, &a.out, a.manifest.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["subsetminer", "frobnicate"]), 2);
        assert_eq!(run(["subsetminer", "estimate", "--depth", "2", "--bogus"]), 2);
        assert_eq!(run(["subsetminer", "cluster", "--size", "10"]), 2);
    }

    #[test]
    fn sweep_defaults() {
        assert_eq!(default_sizes(), vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        assert_eq!(default_fractions().len(), 10);
        assert_eq!(default_fractions()[9], 1.0);
    }
}
