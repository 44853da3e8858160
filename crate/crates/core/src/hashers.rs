//! The four binary hash families.
//!
//! * `lh` — linear hyperplanes through the origin: bit `k` is
//!   `w_k . x > 0`.
//! * `ah` — affine hyperplanes: bit `k` is `w_k . x + b_k > 0` with offsets
//!   drawn uniformly from `[0, 1)`.
//! * `hs` — hyperspheres evaluated naively: bit `k` is
//!   `||x - c_k||^2 < r_k^2`.
//! * `eh` — hyperspheres priced as hyperplanes: embed `x` on the unit
//!   sphere of `R^(N+1)` (see [`crate::projection`]), shift by the common
//!   intersection point `C`, and take bit `k` as `w~_k . (x~ - C) > 0`.
//!   Every `w~_k` passes through `C`, which is what keeps equal-code
//!   regions connected.
//!
//! All comparisons are strict, so a point exactly on a boundary gets bit 0;
//! boundaries have measure zero for sampled families, and the convention
//! makes codes reproducible to the bit.
//!
//! Sampling consumes its RNG in a documented order (matrix first, row-major,
//! then any per-row extras), so families of the same shape drawn from the
//! same stream share their matrix: `lh`, `ah`, and `hs` sampled from clones
//! of one stream reuse identical Gaussian draws, which removes a source of
//! variance when comparing methods.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitCode;
use crate::error::Error;
use crate::linalg::{dot, dot_tile, squared_distance, squared_norm, Matrix, TILE};
use crate::projection::{embed_into, TildeHyperplane};

/// Vectors hashed per cache-resident block: 64 vectors of 512 doubles sit
/// in 256 KiB, small enough for L2 on anything current, so each family row
/// is fetched once per block rather than once per vector.
const POINT_BLOCK: usize = 64;

/// Family rows per cache-resident panel of the product path: 128 rows of
/// 512 doubles sit in 512 KiB, so a panel and a point block fit in L2
/// together. Walking panel-major means the family matrix streams from
/// shared cache once per *block* instead of once per point tile — at
/// B = 1024 and 512 dimensions that is a 16x cut in far-cache traffic,
/// which is where most of the product path's time went.
const ROW_PANEL: usize = 128;

/// Sign pattern of a plane-by-point product over one block:
/// `bits[j * B + k] = threshold(dot(m.row(k), points[j]), k)`.
///
/// `lh`, `ah`, and `eh` hashing is exactly this — the sign of a matrix
/// product — so the block path walks it with the register-tiled product
/// kernel, `TILE` rows by `TILE` points per step; leftover rows and points
/// fall back to single dot products with identical per-pair arithmetic.
/// `hs` takes no part in this: its bit is a per-sphere distance predicate
/// with no product form (short of expanding the square, which would change
/// both the arithmetic and its rounding), so its block path below streams
/// each center row through the plain distance kernel instead.
fn product_sign_block(
    m: &Matrix,
    points: &[&[f64]],
    threshold: impl Fn(f64, usize) -> bool,
    bits: &mut [bool],
) {
    let b = m.rows();
    let row_tiles = b - b % TILE;
    let point_tiles = points.len() - points.len() % TILE;
    // Panel-major: keep a panel of rows hot in L2 across every point tile.
    // Each (row tile, point quad) pair is computed exactly once with the
    // same operands as a point-major walk, so the codes are identical.
    let mut k0 = 0;
    while k0 < row_tiles {
        let k1 = row_tiles.min(k0 + ROW_PANEL);
        let mut j = 0;
        while j < point_tiles {
            let quad: [&[f64]; TILE] = [points[j], points[j + 1], points[j + 2], points[j + 3]];
            let mut k = k0;
            while k < k1 {
                let vals = dot_tile(m, k, quad);
                for p in 0..TILE {
                    for r in 0..TILE {
                        bits[(j + p) * b + k + r] = threshold(vals[p][r], k + r);
                    }
                }
                k += TILE;
            }
            j += TILE;
        }
        k0 = k1;
    }
    let mut j = 0;
    while j < point_tiles {
        for k in row_tiles..b {
            let row = m.row(k);
            for p in 0..TILE {
                bits[(j + p) * b + k] = threshold(dot(row, points[j + p]), k);
            }
        }
        j += TILE;
    }
    for (jj, x) in points.iter().enumerate().skip(point_tiles) {
        for k in 0..b {
            bits[jj * b + k] = threshold(dot(m.row(k), x), k);
        }
    }
}

/// Packs a block's `[point][row]` bit buffer into one code per point.
fn collect_codes(bits: &[bool], b: usize) -> Vec<BitCode> {
    bits.chunks_exact(b)
        .map(|row| BitCode::from_fn(b, |k| row[k]))
        .collect()
}
use crate::rng::sample_standard_normal_matrix;
use crate::Result;

/// Which hash family a code came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lh,
    Ah,
    Hs,
    Eh,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lh, Method::Ah, Method::Hs, Method::Eh];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lh => "lh",
            Method::Ah => "ah",
            Method::Hs => "hs",
            Method::Eh => "eh",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "lh" => Ok(Method::Lh),
            "ah" => Ok(Method::Ah),
            "hs" => Ok(Method::Hs),
            "eh" => Ok(Method::Eh),
            other => Err(Error::InvalidParameter(format!(
                "unknown method '{other}' (expected lh, ah, hs, or eh)"
            ))),
        }
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Hyperplanes through the origin.
#[derive(Debug, Clone)]
pub struct LinearHyperplaneFamily {
    w: Matrix,
}

impl LinearHyperplaneFamily {
    pub fn new(w: Matrix) -> Result<Self> {
        if w.rows() == 0 || w.cols() == 0 {
            return Err(Error::InvalidParameter("family needs B >= 1 and N >= 1".into()));
        }
        Ok(LinearHyperplaneFamily { w })
    }

    /// `b` hyperplane normals with i.i.d. standard-normal entries.
    pub fn sample<R: Rng>(n: usize, b: usize, rng: &mut R) -> Result<Self> {
        Self::new(sample_standard_normal_matrix(b, n, rng))
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    fn hash_unchecked(&self, x: &[f64]) -> BitCode {
        BitCode::from_fn(self.w.rows(), |k| dot(self.w.row(k), x) > 0.0)
    }

    fn hash_block_unchecked(&self, xs: &[Vec<f64>]) -> Vec<BitCode> {
        let b = self.w.rows();
        let mut bits = vec![false; xs.len() * b];
        let points: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        product_sign_block(&self.w, &points, |v, _| v > 0.0, &mut bits);
        collect_codes(&bits, b)
    }
}

/// Hyperplanes with uniform offsets.
#[derive(Debug, Clone)]
pub struct AffineHyperplaneFamily {
    w: Matrix,
    offsets: Vec<f64>,
}

impl AffineHyperplaneFamily {
    pub fn new(w: Matrix, offsets: Vec<f64>) -> Result<Self> {
        if w.rows() == 0 || w.cols() == 0 {
            return Err(Error::InvalidParameter("family needs B >= 1 and N >= 1".into()));
        }
        if offsets.len() != w.rows() {
            return Err(Error::DimensionMismatch {
                expected: w.rows(),
                got: offsets.len(),
            });
        }
        if let Some(i) = offsets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: offsets[i] });
        }
        Ok(AffineHyperplaneFamily { w, offsets })
    }

    /// Normals first (same draws as [`LinearHyperplaneFamily::sample`]),
    /// then one uniform `[0, 1)` offset per row.
    pub fn sample<R: Rng>(n: usize, b: usize, rng: &mut R) -> Result<Self> {
        let w = sample_standard_normal_matrix(b, n, rng);
        let offsets = (0..b).map(|_| rng.random::<f64>()).collect();
        Self::new(w, offsets)
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    fn hash_unchecked(&self, x: &[f64]) -> BitCode {
        BitCode::from_fn(self.w.rows(), |k| dot(self.w.row(k), x) + self.offsets[k] > 0.0)
    }

    fn hash_block_unchecked(&self, xs: &[Vec<f64>]) -> Vec<BitCode> {
        let b = self.w.rows();
        let mut bits = vec![false; xs.len() * b];
        let points: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        product_sign_block(&self.w, &points, |v, k| v + self.offsets[k] > 0.0, &mut bits);
        collect_codes(&bits, b)
    }
}

/// Hyperspheres evaluated the obvious way, one squared distance per bit.
#[derive(Debug, Clone)]
pub struct HypersphereFamily {
    centers: Matrix,
    radii: Vec<f64>,
}

impl HypersphereFamily {
    pub fn new(centers: Matrix, radii: Vec<f64>) -> Result<Self> {
        if centers.rows() == 0 || centers.cols() == 0 {
            return Err(Error::InvalidParameter("family needs B >= 1 and N >= 1".into()));
        }
        if radii.len() != centers.rows() {
            return Err(Error::DimensionMismatch {
                expected: centers.rows(),
                got: radii.len(),
            });
        }
        if let Some(i) = radii.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius {} must be positive and finite, got {}",
                i, radii[i]
            )));
        }
        Ok(HypersphereFamily { centers, radii })
    }

    /// Centers with i.i.d. standard-normal entries (same draws as the
    /// hyperplane matrices), then radii `sqrt(N) * |z|` with `z` standard
    /// normal; an exactly-zero draw is rejected and redrawn. The `sqrt(N)`
    /// factor keeps radii on the scale of typical inter-point distances.
    pub fn sample<R: Rng>(n: usize, b: usize, rng: &mut R) -> Result<Self> {
        let centers = sample_standard_normal_matrix(b, n, rng);
        let scale = (n as f64).sqrt();
        let radii = (0..b)
            .map(|_| loop {
                let z: f64 = rng.sample(StandardNormal);
                if z != 0.0 {
                    break scale * z.abs();
                }
            })
            .collect();
        Self::new(centers, radii)
    }

    pub fn centers(&self) -> &Matrix {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    fn hash_unchecked(&self, x: &[f64]) -> BitCode {
        BitCode::from_fn(self.centers.rows(), |k| {
            squared_distance(self.centers.row(k), x) < self.radii[k] * self.radii[k]
        })
    }

    /// One squared distance per (sphere, point) pair, each center row fetched
    /// once per block and held hot across the block's points. This is the
    /// family's defining evaluation — no product form exists for it, so it
    /// cannot ride the register-tiled product kernel the other families use.
    fn hash_block_unchecked(&self, xs: &[Vec<f64>]) -> Vec<BitCode> {
        let b = self.centers.rows();
        let mut bits = vec![false; xs.len() * b];
        for k in 0..b {
            let center = self.centers.row(k);
            let r2 = self.radii[k] * self.radii[k];
            for (j, x) in xs.iter().enumerate() {
                bits[j * b + k] = squared_distance(center, x) < r2;
            }
        }
        collect_codes(&bits, b)
    }
}

/// Hypersphere hashing at hyperplane cost.
///
/// Holds `B` hyperplane normals in `R^(N+1)` and the common intersection
/// point `C` they are all shifted through. Hashing embeds the input once
/// and then spends one dot product per bit, exactly like `lh` but in one
/// more dimension.
#[derive(Debug, Clone)]
pub struct EclipseFamily {
    planes: Matrix,
    intersection: Vec<f64>,
    d: f64,
}

impl EclipseFamily {
    /// `planes` is `B x (N+1)`; `intersection` is the common point `C` in
    /// `R^(N+1)` and must satisfy `||C|| <= 1` (inside or on the embedded
    /// sphere — the connectivity guarantee depends on it); `d > 0` is the
    /// projection scale.
    pub fn new(planes: Matrix, intersection: Vec<f64>, d: f64) -> Result<Self> {
        if planes.rows() == 0 || planes.cols() < 2 {
            return Err(Error::InvalidParameter(
                "family needs B >= 1 and an embedded dimension of at least 2".into(),
            ));
        }
        if intersection.len() != planes.cols() {
            return Err(Error::DimensionMismatch {
                expected: planes.cols(),
                got: intersection.len(),
            });
        }
        if let Some(i) = intersection.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i, value: intersection[i] });
        }
        let c_norm = squared_norm(&intersection).sqrt();
        if c_norm > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "intersection point must lie inside or on the unit sphere, got norm {c_norm}"
            )));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "projection scale d must be positive and finite, got {d}"
            )));
        }
        Ok(EclipseFamily { planes, intersection, d })
    }

    /// `b` normals in `R^(N+1)` with i.i.d. standard-normal entries, all
    /// passing through `C = (0, …, 0, c)`. Requires `c` in `[-1, 1]`.
    pub fn sample<R: Rng>(n: usize, b: usize, c: f64, d: f64, rng: &mut R) -> Result<Self> {
        if !(c.is_finite() && (-1.0..=1.0).contains(&c)) {
            return Err(Error::InvalidParameter(format!(
                "intersection height c must lie in [-1, 1], got {c}"
            )));
        }
        let planes = sample_standard_normal_matrix(b, n + 1, rng);
        let mut intersection = vec![0.0; n + 1];
        intersection[n] = c;
        Self::new(planes, intersection, d)
    }

    pub fn planes(&self) -> &Matrix {
        &self.planes
    }

    pub fn intersection(&self) -> &[f64] {
        &self.intersection
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Row `k` as a hyperplane of the embedded space: normal `w~_k`, offset
    /// `-w~_k . C` (so the plane passes through `C`).
    pub fn row_hyperplane(&self, k: usize) -> TildeHyperplane {
        let normal = self.planes.row(k).to_vec();
        let offset = -dot(&normal, &self.intersection);
        TildeHyperplane::new(normal, offset).expect("family rows are valid hyperplanes")
    }

    /// Orientation of row `k` relative to its induced hypersphere: `true`
    /// when the north pole — the image of far-away points — lies on the
    /// positive side, i.e. when points *outside* the induced sphere hash to
    /// bit 1. Bit `k` of this family equals `flip XOR inside(k)`.
    pub fn row_flip(&self, k: usize) -> bool {
        let row = self.planes.row(k);
        let n = row.len() - 1;
        let mut acc = row[n] * (1.0 - self.intersection[n]);
        for (r, p) in row[..n].iter().zip(&self.intersection[..n]) {
            acc -= r * p;
        }
        acc > 0.0
    }

    fn hash_into(&self, x: &[f64], embedded: &mut [f64]) -> BitCode {
        embed_into(x, self.d, embedded);
        for (e, c) in embedded.iter_mut().zip(&self.intersection) {
            *e -= c;
        }
        BitCode::from_fn(self.planes.rows(), |k| dot(self.planes.row(k), embedded) > 0.0)
    }

    fn hash_unchecked(&self, x: &[f64]) -> BitCode {
        let mut embedded = vec![0.0; x.len() + 1];
        self.hash_into(x, &mut embedded)
    }

    fn hash_block_unchecked(&self, xs: &[Vec<f64>]) -> Vec<BitCode> {
        let b = self.planes.rows();
        let width = self.planes.cols();
        // Embed the whole block once, then reuse every plane row across it.
        let mut embedded = vec![0.0; xs.len() * width];
        for (j, x) in xs.iter().enumerate() {
            let e = &mut embedded[j * width..(j + 1) * width];
            embed_into(x, self.d, e);
            for (v, c) in e.iter_mut().zip(&self.intersection) {
                *v -= c;
            }
        }
        let mut bits = vec![false; xs.len() * b];
        let points: Vec<&[f64]> = embedded.chunks_exact(width).collect();
        product_sign_block(&self.planes, &points, |v, _| v > 0.0, &mut bits);
        collect_codes(&bits, b)
    }
}

/// A sampled hash family of any method, ready to encode vectors.
#[derive(Debug, Clone)]
pub enum HashFamily {
    Lh(LinearHyperplaneFamily),
    Ah(AffineHyperplaneFamily),
    Hs(HypersphereFamily),
    Eh(EclipseFamily),
}

impl HashFamily {
    /// Samples a family of `method` for `n`-dimensional data with `b` bits.
    /// `c` and `d` configure `eh` and must be absent for every other method.
    pub fn sample<R: Rng>(
        method: Method,
        n: usize,
        b: usize,
        c: Option<f64>,
        d: Option<f64>,
        rng: &mut R,
    ) -> Result<HashFamily> {
        if method != Method::Eh && (c.is_some() || d.is_some()) {
            return Err(Error::InvalidParameter(format!(
                "parameters c and d only apply to eh, not {method}"
            )));
        }
        match method {
            Method::Lh => Ok(HashFamily::Lh(LinearHyperplaneFamily::sample(n, b, rng)?)),
            Method::Ah => Ok(HashFamily::Ah(AffineHyperplaneFamily::sample(n, b, rng)?)),
            Method::Hs => Ok(HashFamily::Hs(HypersphereFamily::sample(n, b, rng)?)),
            Method::Eh => {
                let c = c.ok_or_else(|| Error::InvalidParameter("eh requires c".into()))?;
                let d = d.ok_or_else(|| Error::InvalidParameter("eh requires d".into()))?;
                Ok(HashFamily::Eh(EclipseFamily::sample(n, b, c, d, rng)?))
            }
        }
    }

    pub fn method(&self) -> Method {
        match self {
            HashFamily::Lh(_) => Method::Lh,
            HashFamily::Ah(_) => Method::Ah,
            HashFamily::Hs(_) => Method::Hs,
            HashFamily::Eh(_) => Method::Eh,
        }
    }

    /// Dimension of the vectors this family hashes.
    pub fn dim(&self) -> usize {
        match self {
            HashFamily::Lh(f) => f.w.cols(),
            HashFamily::Ah(f) => f.w.cols(),
            HashFamily::Hs(f) => f.centers.cols(),
            HashFamily::Eh(f) => f.planes.cols() - 1,
        }
    }

    /// Bits per code.
    pub fn code_len(&self) -> usize {
        match self {
            HashFamily::Lh(f) => f.w.rows(),
            HashFamily::Ah(f) => f.w.rows(),
            HashFamily::Hs(f) => f.centers.rows(),
            HashFamily::Eh(f) => f.planes.rows(),
        }
    }

    /// The `(c, d)` parameters when this is an `eh` family with an
    /// axis-aligned intersection point.
    pub fn eh_params(&self) -> Option<(f64, f64)> {
        match self {
            HashFamily::Eh(f) => Some((*f.intersection.last().unwrap(), f.d)),
            _ => None,
        }
    }

    /// Encodes one vector.
    pub fn hash(&self, x: &[f64]) -> Result<BitCode> {
        check_dim(self.dim(), x)?;
        Ok(match self {
            HashFamily::Lh(f) => f.hash_unchecked(x),
            HashFamily::Ah(f) => f.hash_unchecked(x),
            HashFamily::Hs(f) => f.hash_unchecked(x),
            HashFamily::Eh(f) => f.hash_unchecked(x),
        })
    }

    /// Encodes a batch, preserving input order. Work is spread over the
    /// rayon pool; results are identical to per-vector [`HashFamily::hash`]
    /// calls at any thread count. Vectors are processed in blocks (for `eh`
    /// each block is embedded once up front) so that every family row,
    /// streamed once per block, is reused against a cache-resident group of
    /// vectors instead of being refetched per vector — hashing is a
    /// matrix-matrix product and is treated like one.
    pub fn batch_hash(&self, xs: &[Vec<f64>]) -> Result<Vec<BitCode>> {
        let dim = self.dim();
        for x in xs {
            check_dim(dim, x)?;
        }
        let blocks: Vec<Vec<BitCode>> = xs
            .par_chunks(POINT_BLOCK)
            .map(|chunk| self.hash_block_unchecked(chunk))
            .collect();
        Ok(blocks.into_iter().flatten().collect())
    }

    /// Single-threaded batch encoding; what the timing harness measures.
    pub fn batch_hash_serial(&self, xs: &[Vec<f64>]) -> Result<Vec<BitCode>> {
        let dim = self.dim();
        for x in xs {
            check_dim(dim, x)?;
        }
        Ok(xs
            .chunks(POINT_BLOCK)
            .flat_map(|chunk| self.hash_block_unchecked(chunk))
            .collect())
    }

    fn hash_block_unchecked(&self, chunk: &[Vec<f64>]) -> Vec<BitCode> {
        match self {
            HashFamily::Lh(f) => f.hash_block_unchecked(chunk),
            HashFamily::Ah(f) => f.hash_block_unchecked(chunk),
            HashFamily::Hs(f) => f.hash_block_unchecked(chunk),
            HashFamily::Eh(f) => f.hash_block_unchecked(chunk),
        }
    }

    /// The code assigned to points arbitrarily far from the origin, when
    /// that is well defined: all-zeros for `hs` (far points are outside
    /// every sphere), the north-pole code for `eh`. Hyperplane families
    /// split the far field by direction, so they have none; an `eh` family
    /// with a plane exactly through the pole (within strict sign evaluation)
    /// has none either.
    pub fn code_at_infinity(&self) -> Option<BitCode> {
        match self {
            HashFamily::Lh(_) | HashFamily::Ah(_) => None,
            HashFamily::Hs(f) => Some(BitCode::zeros(f.centers.rows())),
            HashFamily::Eh(f) => {
                let n = f.planes.cols() - 1;
                let mut signs = Vec::with_capacity(f.planes.rows());
                for k in 0..f.planes.rows() {
                    let row = f.planes.row(k);
                    let mut acc = row[n] * (1.0 - f.intersection[n]);
                    for (r, p) in row[..n].iter().zip(&f.intersection[..n]) {
                        acc -= r * p;
                    }
                    if acc == 0.0 {
                        return None;
                    }
                    signs.push(acc > 0.0);
                }
                Some(BitCode::from_fn(signs.len(), |k| signs[k]))
            }
        }
    }
}
