//! The evaluation protocol: recall against exact neighbors, radius
//! diagnostics, parameter sweeps, and hashing throughput.
//!
//! Recall follows the standard retrieval definition. For each query `q`,
//! `Z(q, k)` is the exact Euclidean k-NN id set and `W(q, k)` the Hamming
//! k-NN id set over the hash codes; the score is the mean over queries of
//! `|Z ∩ W| / k`. Both sides use the `(distance, index)` tie rule from
//! [`crate::search`], and `k` defaults to 1% of the record count, rounded
//! up. Plain Hamming distance is used throughout — codes never leave
//! Hamming space during evaluation.
//!
//! The radius diagnostics describe where the data lands on the embedded
//! sphere: `ratio(d)` is the fraction of records strictly inside radius `d`
//! (equivalently, embedded below the equator), and `d_star` is the smallest
//! `d` putting more than 99% of them there. A good projection scale sits at
//! or somewhat above `d_star`, which is what [`sweep`] searches for.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitCode;
use crate::dataset::Dataset;
use crate::error::Error;
use crate::hashers::{HashFamily, Method};
use crate::linalg;
use crate::rng::{Seed, StreamPurpose};
use crate::search::{knn_hamming, knn_l2, NeighborList};
use crate::Result;

/// Default neighborhood size: 1% of the record count, rounded up.
pub fn default_k(n_records: usize) -> usize {
    n_records.div_ceil(100)
}

/// One evaluated configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallResult {
    pub method: Method,
    /// Intersection height, `eh` only.
    pub c: Option<f64>,
    /// Projection scale, `eh` only.
    pub d: Option<f64>,
    /// Code length in bits.
    pub bits: usize,
    pub k: usize,
    pub seed: u64,
    pub mean_recall: f64,
}

impl RecallResult {
    /// Labels a measured recall with the family's parameters.
    pub fn for_family(family: &HashFamily, k: usize, seed: Seed, mean_recall: f64) -> RecallResult {
        let (c, d) = match family.eh_params() {
            Some((c, d)) => (Some(c), Some(d)),
            None => (None, None),
        };
        RecallResult {
            method: family.method(),
            c,
            d,
            bits: family.code_len(),
            k,
            seed: seed.0,
            mean_recall,
        }
    }
}

/// Fraction of `truth` recovered by `approx`. Both lists must have the same
/// length; ranks are irrelevant, only membership counts.
pub fn recall_single(truth: &NeighborList, approx: &NeighborList) -> Result<f64> {
    if truth.k() != approx.k() {
        return Err(Error::InvalidParameter(format!(
            "neighbor lists disagree on k: {} vs {}",
            truth.k(),
            approx.k()
        )));
    }
    let mut a = truth.ids().to_vec();
    let mut b = approx.ids().to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(shared as f64 / truth.k() as f64)
}

/// Exact Euclidean k-NN ids for every query, in query order.
pub fn ground_truth(ds: &Dataset, k: usize) -> Result<Vec<NeighborList>> {
    if ds.queries().is_empty() {
        return Err(Error::InvalidParameter("recall needs at least one query".into()));
    }
    ds.queries()
        .par_iter()
        .map(|q| knn_l2(ds.records(), q, k))
        .collect()
}

/// Mean recall of Hamming retrieval over precomputed codes, against
/// precomputed ground truth. This is the inner loop shared by
/// [`mean_recall`] and [`sweep`]; exposing it lets callers reuse the
/// (expensive) exact neighbor lists across many families.
pub fn mean_recall_from_codes(
    truth: &[NeighborList],
    record_codes: &[BitCode],
    query_codes: &[BitCode],
) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("recall needs at least one query".into()));
    }
    if query_codes.len() != truth.len() {
        return Err(Error::InvalidParameter(format!(
            "{} query codes for {} ground-truth lists",
            query_codes.len(),
            truth.len()
        )));
    }
    let k = truth[0].k();
    let per_query: Vec<f64> = truth
        .par_iter()
        .zip(query_codes)
        .map(|(z, qc)| {
            let w = knn_hamming(record_codes, qc, k)?;
            recall_single(z, &w)
        })
        .collect::<Result<_>>()?;
    Ok(per_query.iter().sum::<f64>() / per_query.len() as f64)
}

/// Mean recall of `family` on `ds` at `k` (default: 1% of the records).
pub fn mean_recall(ds: &Dataset, family: &HashFamily, k: Option<usize>) -> Result<f64> {
    let k = k.unwrap_or_else(|| default_k(ds.records().len()));
    let truth = ground_truth(ds, k)?;
    let record_codes = family.batch_hash(ds.records())?;
    let query_codes = family.batch_hash(ds.queries())?;
    mean_recall_from_codes(&truth, &record_codes, &query_codes)
}

/// Fraction of records strictly inside radius `d` — equivalently, the
/// fraction whose embedding at scale `d` lands below the equator.
pub fn ratio(ds: &Dataset, d: f64) -> Result<f64> {
    if ds.records().is_empty() {
        return Err(Error::EmptyRecords("ratio needs records".into()));
    }
    if !d.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be finite, got {d}")));
    }
    let inside = ds
        .records()
        .iter()
        .filter(|x| linalg::norm(x) < d)
        .count();
    Ok(inside as f64 / ds.records().len() as f64)
}

/// The `d_star` diagnostic: where `ratio` first exceeds 0.99.
#[derive(Debug, Clone, Serialize)]
pub struct DStar {
    /// Exact answer: the smallest `d` with `ratio(d) > 0.99`, which is the
    /// 99th-percentile record norm.
    pub exact: f64,
    /// Smallest supplied grid value whose ratio exceeds 0.99; what a plotted
    /// curve would show.
    pub on_grid: f64,
}

/// Computes [`DStar`] over a grid of radii.
///
/// The exact value comes straight from the order statistics: with `n`
/// records, it is the `(floor(0.99 n) + 1)`-th smallest norm. The grid value
/// exists only if some grid point clears 0.99, otherwise this errors — a
/// truncated grid would silently misreport the knee.
pub fn d_star(ds: &Dataset, grid: &[f64]) -> Result<DStar> {
    if ds.records().is_empty() {
        return Err(Error::EmptyRecords("d_star needs records".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("d_star needs a nonempty grid".into()));
    }
    let mut norms: Vec<f64> = ds.records().iter().map(|x| linalg::norm(x)).collect();
    norms.sort_unstable_by(f64::total_cmp);
    let n = norms.len();
    // "ratio > 0.99" in exact arithmetic: more than 99n/100 records strictly
    // inside, i.e. at least floor(99n/100) + 1 of them, and the infimum over
    // d is that order statistic.
    let exact = norms[99 * n / 100];

    let mut sorted_grid = grid.to_vec();
    sorted_grid.sort_unstable_by(f64::total_cmp);
    let on_grid = sorted_grid
        .into_iter()
        .find(|&g| {
            let inside = norms.partition_point(|&v| v < g);
            100 * inside > 99 * n
        })
        .ok_or_else(|| {
            Error::InvalidParameter(
                "no grid radius puts more than 99% of the records inside; extend the grid".into(),
            )
        })?;
    Ok(DStar { exact, on_grid })
}

/// The `(c, d)` grid a sweep walks.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub c_values: Vec<f64>,
    pub d_values: Vec<f64>,
}

impl SweepGrid {
    pub fn new(c_values: Vec<f64>, d_values: Vec<f64>) -> Result<SweepGrid> {
        if c_values.is_empty() || d_values.is_empty() {
            return Err(Error::InvalidParameter("sweep grid must be nonempty".into()));
        }
        if let Some(c) = c_values.iter().find(|c| !(c.is_finite() && (-1.0..=1.0).contains(*c))) {
            return Err(Error::InvalidParameter(format!("grid c={c} outside [-1, 1]")));
        }
        if let Some(d) = d_values.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidParameter(format!("grid d={d} must be positive")));
        }
        Ok(SweepGrid { c_values, d_values })
    }

    /// Default grid: `c` from -1 to 1 in steps of 0.25, and 25
    /// logarithmically spaced `d` values covering two decades either side of
    /// the median record norm.
    pub fn default_for(ds: &Dataset) -> Result<SweepGrid> {
        let median = median_record_norm(ds)?;
        let c_values = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let d_values = (0..25)
            .map(|i| median * 10f64.powf(-2.0 + 4.0 * i as f64 / 24.0))
            .collect();
        SweepGrid::new(c_values, d_values)
    }
}

/// Median record norm; the anchor for default `d` grids.
pub fn median_record_norm(ds: &Dataset) -> Result<f64> {
    if ds.records().is_empty() {
        return Err(Error::EmptyRecords("median norm needs records".into()));
    }
    let mut norms: Vec<f64> = ds.records().iter().map(|x| linalg::norm(x)).collect();
    norms.sort_unstable_by(f64::total_cmp);
    let n = norms.len();
    Ok(if n % 2 == 1 {
        norms[n / 2]
    } else {
        0.5 * (norms[n / 2 - 1] + norms[n / 2])
    })
}

/// Everything a sweep produces.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    /// One row per `eh` grid cell, then one per requested baseline.
    pub rows: Vec<RecallResult>,
    pub c_opt: f64,
    pub d_opt: f64,
    pub best_recall: f64,
}

/// Evaluates `eh` over the whole `(c, d)` grid plus the requested baseline
/// methods, all at `bits` bits and a shared seed.
///
/// Ground truth is computed once. The `eh` plane matrix is sampled once and
/// reused for every cell, so the grid varies only the geometry parameters,
/// not the random draws; baselines are sampled from clones of the same
/// stream, which gives them the identical Gaussian matrix where shapes
/// match. The optimum `(c_opt, d_opt)` is the first grid cell (in row-major
/// `c`-then-`d` order) attaining the best mean recall.
pub fn sweep(
    ds: &Dataset,
    grid: &SweepGrid,
    bits: usize,
    k: Option<usize>,
    baselines: &[Method],
    seed: Seed,
) -> Result<SweepOutcome> {
    if baselines.contains(&Method::Eh) {
        return Err(Error::InvalidParameter(
            "eh is what the sweep varies; baselines must be lh, ah, or hs".into(),
        ));
    }
    let n = ds.dim();
    let k = k.unwrap_or_else(|| default_k(ds.records().len()));
    let truth = ground_truth(ds, k)?;

    let planes = crate::rng::sample_standard_normal_matrix(
        bits,
        n + 1,
        &mut seed.stream(StreamPurpose::Family),
    );

    let mut rows = Vec::with_capacity(grid.c_values.len() * grid.d_values.len() + baselines.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for &c in &grid.c_values {
        for &d in &grid.d_values {
            let mut point = vec![0.0; n + 1];
            point[n] = c;
            let family = HashFamily::Eh(crate::hashers::EclipseFamily::new(
                planes.clone(),
                point,
                d,
            )?);
            let record_codes = family.batch_hash(ds.records())?;
            let query_codes = family.batch_hash(ds.queries())?;
            let recall = mean_recall_from_codes(&truth, &record_codes, &query_codes)?;
            rows.push(RecallResult::for_family(&family, k, seed, recall));
            let better = match best {
                None => true,
                Some((best_recall, _, _)) => recall > best_recall,
            };
            if better {
                best = Some((recall, c, d));
            }
        }
    }

    for &method in baselines {
        let family = HashFamily::sample(
            method,
            n,
            bits,
            None,
            None,
            &mut seed.stream(StreamPurpose::Family),
        )?;
        let record_codes = family.batch_hash(ds.records())?;
        let query_codes = family.batch_hash(ds.queries())?;
        let recall = mean_recall_from_codes(&truth, &record_codes, &query_codes)?;
        rows.push(RecallResult::for_family(&family, k, seed, recall));
    }

    let (best_recall, c_opt, d_opt) = best.expect("grid is nonempty by construction");
    Ok(SweepOutcome {
        rows,
        c_opt,
        d_opt,
        best_recall,
    })
}

/// Wall-clock hashing cost of one family on one batch.
#[derive(Debug, Clone, Serialize)]
pub struct TimingResult {
    pub method: Method,
    pub bits: usize,
    pub dim: usize,
    pub vectors: usize,
    /// Median elapsed seconds for one full pass.
    pub seconds: f64,
    pub per_vector_seconds: f64,
}

/// Times `family.batch_hash_serial` over `data`: one untimed warm-up pass,
/// then the median of `repeats >= 3` timed passes. Strictly single-threaded
/// so methods are compared on arithmetic, not scheduling.
pub fn bench_hash(family: &HashFamily, data: &[Vec<f64>], repeats: usize) -> Result<TimingResult> {
    if repeats < 3 {
        return Err(Error::InvalidParameter(format!(
            "timing needs at least 3 repeats, got {repeats}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyRecords("timing needs data to hash".into()));
    }
    std::hint::black_box(family.batch_hash_serial(data)?);
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = std::time::Instant::now();
        std::hint::black_box(family.batch_hash_serial(data)?);
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_unstable_by(f64::total_cmp);
    let seconds = if repeats % 2 == 1 {
        times[repeats / 2]
    } else {
        0.5 * (times[repeats / 2 - 1] + times[repeats / 2])
    };
    Ok(TimingResult {
        method: family.method(),
        bits: family.code_len(),
        dim: family.dim(),
        vectors: data.len(),
        seconds,
        per_vector_seconds: seconds / data.len() as f64,
    })
}
