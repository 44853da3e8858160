//! Exact k-nearest-neighbor search in Euclidean and Hamming space.
//!
//! Both searches share one total order: candidates are ranked by
//! `(distance, index)` ascending, so equal distances break toward the
//! smaller record index. Making the tie rule explicit keeps ground truth
//! and hash-space rankings comparable — recall is computed between two
//! lists produced under the *same* order, not two arbitrary shuffles of
//! equally-near records.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bits::{hamming_distance, BitCode};
use crate::error::Error;
use crate::linalg::squared_distance;
use crate::Result;

/// Ranked ids of the `k` nearest records, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborList {
    ids: Vec<usize>,
}

impl NeighborList {
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn k(&self) -> usize {
        self.ids.len()
    }
}

fn check_k(k: usize, records: usize) -> Result<()> {
    if records == 0 {
        return Err(Error::EmptyRecords("k-NN needs at least one record".into()));
    }
    if k == 0 || k > records {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k <= {records}, got {k}"
        )));
    }
    Ok(())
}

/// Max-heap entry ordered by `(distance, index)`; the heap keeps the current
/// worst of the best `k` on top.
struct Candidate {
    dist: f64,
    idx: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.idx.cmp(&other.idx))
    }
}

/// The `k` records nearest to `query` in squared Euclidean distance.
///
/// Distances are finite by the dataset contract, and squaring preserves the
/// ranking, so the square root is never taken.
pub fn knn_l2(records: &[Vec<f64>], query: &[f64], k: usize) -> Result<NeighborList> {
    check_k(k, records.len())?;
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for (idx, rec) in records.iter().enumerate() {
        if rec.len() != query.len() {
            return Err(Error::DimensionMismatch {
                expected: query.len(),
                got: rec.len(),
            });
        }
        let dist = squared_distance(rec, query);
        if heap.len() < k {
            heap.push(Candidate { dist, idx });
        } else {
            let worst = heap.peek().expect("heap holds k > 0 entries");
            if (dist, idx) < (worst.dist, worst.idx) {
                heap.pop();
                heap.push(Candidate { dist, idx });
            }
        }
    }
    let ids = heap.into_sorted_vec().into_iter().map(|c| c.idx).collect();
    Ok(NeighborList { ids })
}

/// The `k` codes nearest to `query` in Hamming distance.
///
/// Distances are bounded by the code length, so selection is done by
/// counting: bucket the distance histogram, find the cutoff distance that
/// admits `k` entries, and keep every id below it plus the lowest-index ids
/// exactly at it. One linear pass over the codes, no comparison sort over
/// the full set.
pub fn knn_hamming(codes: &[BitCode], query: &BitCode, k: usize) -> Result<NeighborList> {
    check_k(k, codes.len())?;
    let mut dists = Vec::with_capacity(codes.len());
    for code in codes {
        dists.push(hamming_distance(code, query)?);
    }

    let bits = query.len();
    let mut histogram = vec![0usize; bits + 1];
    for &d in &dists {
        histogram[d as usize] += 1;
    }
    let mut cutoff = 0;
    let mut below = 0;
    while below + histogram[cutoff] < k {
        below += histogram[cutoff];
        cutoff += 1;
    }
    let mut at_cutoff = k - below;

    let mut ids = Vec::with_capacity(k);
    for (idx, &d) in dists.iter().enumerate() {
        let d = d as usize;
        if d < cutoff {
            ids.push(idx);
        } else if d == cutoff && at_cutoff > 0 {
            ids.push(idx);
            at_cutoff -= 1;
        }
    }
    ids.sort_by_key(|&i| (dists[i], i));
    Ok(NeighborList { ids })
}
