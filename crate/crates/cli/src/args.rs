//! Flag definitions for every subcommand.
//!
//! Conventions shared across the surface: commands that draw random numbers
//! require an explicit `--seed`; machine-readable tables are written to the
//! path given by `--out` (or `--codes-out`) while stdout gets a one-line
//! summary; comma-separated list flags (`--methods`, `--c-grid`, …) take one
//! argument like `lh,eh` or `-1,0,1`.

use clap::{Args, Parser, Subcommand};
use eclipsehash::Method;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "eclipsehash",
    version,
    about = "Binary-code similarity search: generate data, hash it, and measure \
             recall, radii, hashing throughput, and code-region connectivity"
)]
pub struct Cli {
    /// Cap the worker-thread count (results are identical at any setting)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (standard-normal records and queries) as an fvecs pair
    Gen(GenArgs),
    /// Sample or load a hash family and encode vectors into binary codes
    Hash(HashArgs),
    /// Score saved codes: mean recall of Hamming top-k against exact Euclidean top-k
    Eval(EvalArgs),
    /// Grid-sweep the eh parameters (c, d) and report the optimum plus baselines
    Sweep(SweepArgs),
    /// Tabulate the fraction of records inside radius d and report the 99% radius d_star
    Ratio(RatioArgs),
    /// Time hashing throughput per method and code length (median of repeats, single-threaded)
    Bench(BenchArgs),
    /// Rasterize each code's region and count its connected components
    Connectivity(ConnectivityArgs),
}

#[derive(Args)]
pub struct GenArgs {
    /// Vector dimensionality
    #[arg(long, default_value_t = 512)]
    pub dim: usize,

    /// Number of record vectors
    #[arg(long, default_value_t = 10_000)]
    pub records: usize,

    /// Number of query vectors
    #[arg(long, default_value_t = 1_000)]
    pub queries: usize,

    /// RNG seed (the same seed reproduces the same files)
    #[arg(long)]
    pub seed: u64,

    /// Output prefix; writes <PREFIX>.records.fvecs and <PREFIX>.queries.fvecs
    #[arg(long, value_name = "PREFIX")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct HashArgs {
    /// Hash method: lh, ah, hs, or eh
    #[arg(long, value_parser = parse_method, required_unless_present = "family")]
    pub method: Option<Method>,

    /// Code length in bits
    #[arg(long, value_name = "B", required_unless_present = "family")]
    pub bits: Option<usize>,

    /// Intersection height in [-1, 1] (eh only)
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,

    /// Projection scale, d > 0 (eh only)
    #[arg(long)]
    pub d: Option<f64>,

    /// Vectors to encode (fvecs, csv, or idx)
    #[arg(long)]
    pub data: PathBuf,

    /// Load a previously saved family instead of sampling one
    #[arg(long, value_name = "FILE")]
    pub family: Option<PathBuf>,

    /// Save the sampled family for exact reuse
    #[arg(long, value_name = "FILE")]
    pub family_out: Option<PathBuf>,

    /// Codes destination: binary blob here, JSON sidecar at <FILE>.json
    #[arg(long, value_name = "FILE")]
    pub codes_out: PathBuf,

    /// RNG seed for family sampling
    #[arg(long, required_unless_present = "family")]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Code files written by `hash`: records first, then queries
    #[arg(long, num_args = 2, required = true, value_names = ["RECORD_CODES", "QUERY_CODES"])]
    pub codes: Vec<PathBuf>,

    /// Vector files: records first, then queries
    #[arg(long, num_args = 2, required = true, value_names = ["RECORDS", "QUERIES"])]
    pub data: Vec<PathBuf>,

    /// Number of true nearest neighbors per query
    #[arg(long, conflicts_with = "k_percent")]
    pub k: Option<usize>,

    /// k as a percentage of the record count (default 1)
    #[arg(long, value_name = "PCT")]
    pub k_percent: Option<f64>,

    /// Result destination; `.json` for JSON, anything else for CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Vector files: records first, then queries
    #[arg(long, num_args = 2, required = true, value_names = ["RECORDS", "QUERIES"])]
    pub data: Vec<PathBuf>,

    /// Methods to include; eh is the swept method and must be present
    #[arg(long, value_delimiter = ',', default_value = "eh,lh,ah,hs", value_parser = parse_method)]
    pub methods: Vec<Method>,

    /// Intersection heights to sweep (default: -1 to 1 in steps of 0.25)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "C,C,...")]
    pub c_grid: Option<Vec<f64>>,

    /// Projection scales to sweep (default: 25 log-spaced around the median record norm)
    #[arg(long, value_delimiter = ',', value_name = "D,D,...")]
    pub d_grid: Option<Vec<f64>>,

    /// Code length in bits
    #[arg(long, value_name = "B", default_value_t = 1024)]
    pub bits: usize,

    /// Number of true nearest neighbors per query
    #[arg(long, conflicts_with = "k_percent")]
    pub k: Option<usize>,

    /// k as a percentage of the record count (default 1)
    #[arg(long, value_name = "PCT")]
    pub k_percent: Option<f64>,

    /// RNG seed shared by every family in the sweep
    #[arg(long)]
    pub seed: u64,

    /// CSV destination
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RatioArgs {
    /// Record vectors (fvecs, csv, or idx)
    #[arg(long, value_name = "RECORDS")]
    pub data: PathBuf,

    /// Radii to tabulate (default: 25 log-spaced around the median record norm)
    #[arg(long, value_delimiter = ',', value_name = "D,D,...")]
    pub d_grid: Option<Vec<f64>>,

    /// CSV destination
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Methods to time
    #[arg(long, value_delimiter = ',', default_value = "eh,lh,ah,hs", value_parser = parse_method)]
    pub methods: Vec<Method>,

    /// Code lengths to time
    #[arg(long, value_delimiter = ',', default_value = "1024", value_name = "B,B,...")]
    pub bits_list: Vec<usize>,

    /// Timed passes per configuration; the median is reported (min 3)
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,

    /// Vectors to hash; omit to time a synthetic batch
    #[arg(long, conflicts_with_all = ["dim", "vectors"])]
    pub data: Option<PathBuf>,

    /// Synthetic batch dimensionality
    #[arg(long, default_value_t = 512)]
    pub dim: usize,

    /// Synthetic batch size
    #[arg(long, default_value_t = 10_000)]
    pub vectors: usize,

    /// Intersection height for eh
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub c: f64,

    /// Projection scale for eh
    #[arg(long, default_value_t = 32.0)]
    pub d: f64,

    /// RNG seed for family sampling and the synthetic batch
    #[arg(long)]
    pub seed: u64,

    /// CSV destination
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ConnectivityArgs {
    /// Hash method: lh, ah, hs, or eh
    #[arg(long, value_parser = parse_method)]
    pub method: Method,

    /// Method parameters as key=value pairs, e.g. "c=0,d=32" (eh only)
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,

    /// Ambient dimension of the hashed space: 1 or 2
    #[arg(long)]
    pub dim: usize,

    /// Shapes (bits) per family
    #[arg(long, value_name = "B", default_value_t = 1)]
    pub bits: usize,

    /// Grid bounds lo,hi applied to every axis (default: auto-fit around the family's shapes)
    #[arg(long = "box", allow_hyphen_values = true, value_name = "LO,HI", value_parser = parse_box)]
    pub box_: Option<(f64, f64)>,

    /// Grid cells per axis
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,

    /// Treat the far field as a single point, joining the outer ends of unbounded regions
    #[arg(long)]
    pub compactify: bool,

    /// RNG seed for family sampling
    #[arg(long)]
    pub seed: u64,

    /// JSON destination
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, eclipsehash::Error> {
    s.parse()
}

fn parse_box(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let parse = |part: &str| {
        part.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{part}` is not a number"))
    };
    Ok((parse(lo)?, parse(hi)?))
}
