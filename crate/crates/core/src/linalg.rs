//! Dense row-major matrices and the handful of vector kernels everything
//! else is built on.
//!
//! The kernels are written with fixed-width chunking and independent
//! accumulators so the compiler can vectorize them; the summation order is
//! part of the reproducibility contract (same build, same inputs, same
//! result — bit for bit — on any thread count).

use crate::error::Error;
use crate::Result;

/// A dense row-major `rows x cols` matrix of `f64`.
///
/// This is deliberately minimal: hash families only ever need contiguous row
/// access and a flat view for serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Wraps a row-major buffer. `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index,
                value: data[index],
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Contiguous view of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        let start = r * self.cols;
        &self.data[start..start + self.cols]
    }

    /// The whole buffer, row-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

const LANES: usize = 8;

/// One accumulation step, fused when the target has hardware fused
/// multiply-add. The compiler never contracts `acc + a * b` on its own, and
/// unconditional `mul_add` would fall back to a software fma routine — far
/// slower than separate operations — on targets without the instruction.
/// The two forms differ in the last rounding bit; every kernel in a given
/// build uses the same form, so hashing stays self-consistent.
#[inline(always)]
fn fused_step(a: f64, b: f64, acc: f64) -> f64 {
    if cfg!(target_feature = "fma") {
        a.mul_add(b, acc)
    } else {
        acc + a * b
    }
}

/// Dot product with eight running partial sums.
///
/// The lane structure fixes the floating-point reduction order while leaving
/// the adds independent enough to pipeline; a naive fold would serialize on
/// the accumulator and cost several cycles per element.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            acc[l] = fused_step(xa[l], xb[l], acc[l]);
        }
    }
    let mut tail = 0.0;
    for (xa, xb) in ca.remainder().iter().zip(cb.remainder()) {
        tail = fused_step(*xa, *xb, tail);
    }
    acc.iter().sum::<f64>() + tail
}

/// Squared Euclidean distance, chunked like [`dot`].
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            let diff = xa[l] - xb[l];
            acc[l] = fused_step(diff, diff, acc[l]);
        }
    }
    let mut tail = 0.0;
    for (xa, xb) in ca.remainder().iter().zip(cb.remainder()) {
        let diff = xa - xb;
        tail = fused_step(diff, diff, tail);
    }
    acc.iter().sum::<f64>() + tail
}

/// Register-tile width of the blocked product kernel: [`dot_tile`] folds
/// `TILE` consecutive matrix rows against `TILE` points per call.
pub const TILE: usize = 4;

/// Explicit 512-bit product microkernel for targets where a whole eight-lane
/// chunk is one vector register. Autovectorizing a register-tiled kernel
/// turned out to be fragile — whether a given monomorphization keeps its
/// accumulators in registers or spills them is effectively a coin flip across
/// call sites — and a timing comparison between hash families is only
/// meaningful when the kernel compiles to the code it was designed around.
/// Each lane performs the same fused multiply-add, in the same order, as the
/// scalar [`dot`] kernel, so results are bit-identical across the two paths.
#[cfg(all(target_arch = "x86_64", target_feature = "avx512f", target_feature = "fma"))]
mod simd {
    use super::{Matrix, LANES, TILE};
    use std::arch::x86_64::{__m512d, _mm512_fmadd_pd, _mm512_setzero_pd, _mm512_storeu_pd};

    /// Unaligned 64-byte vector load as a single instruction.
    ///
    /// The portable `_mm512_loadu_pd` wrapper reads through an intermediate
    /// stack copy. When the crate is built with debug assertions, the pointer
    /// checks inlined around that copy keep the optimizer from folding it
    /// away, and every load in the hot loop turns into two half-width loads,
    /// two stack stores, and a stalled full-width reload — a 4-5x throughput
    /// loss for the whole kernel. A single asm instruction leaves nothing to
    /// fold, in every build profile.
    ///
    /// # Safety
    /// `p` must be valid for reading 64 bytes; no alignment is required.
    #[inline(always)]
    unsafe fn loadu(p: *const f64) -> __m512d {
        let v: __m512d;
        // `pure` + `readonly`: a plain load with no other effects, so the
        // optimizer may hoist, reorder, or deduplicate it like one.
        std::arch::asm!(
            "vmovupd {v}, zmmword ptr [{p}]",
            v = out(zmm_reg) v,
            p = in(reg) p,
            options(pure, readonly, nostack, preserves_flags),
        );
        v
    }

    /// `TILE x TILE` dot products with one vector register per accumulator.
    /// Every loaded chunk — four of the points, then one per row — feeds four
    /// fused multiply-adds, so the kernel is bound by arithmetic rather than
    /// by loads or memory streaming. Each product finishes exactly like the
    /// scalar kernel: lanes summed in order, scalar tail appended last.
    ///
    /// Accumulators, rows, and points are individually named locals: nothing
    /// takes an accumulator's address or indexes an array of them, so keeping
    /// the sixteen sums in registers never depends on the optimizer replacing
    /// an aggregate with scalars. (An earlier array-of-accumulators version
    /// compiled to a register kernel or to a stack-spilling one depending on
    /// unrelated code in the crate — a 4-5x throughput swing for the same
    /// source.)
    #[inline(always)]
    pub(super) fn product_tile(m: &Matrix, k0: usize, xs: [&[f64]; TILE]) -> [[f64; TILE]; TILE] {
        let [x0, x1, x2, x3] = xs;
        let (r0, r1, r2, r3) = (m.row(k0), m.row(k0 + 1), m.row(k0 + 2), m.row(k0 + 3));
        let len = x0.len();
        debug_assert!(r0.len() == len && r1.len() == len && r2.len() == len && r3.len() == len);
        debug_assert!(x1.len() == len && x2.len() == len && x3.len() == len);
        let main = len - len % LANES;

        // SAFETY: this module only compiles when avx512f is statically enabled.
        let zero = unsafe { _mm512_setzero_pd() };
        let (mut a00, mut a01, mut a02, mut a03) = (zero, zero, zero, zero);
        let (mut a10, mut a11, mut a12, mut a13) = (zero, zero, zero, zero);
        let (mut a20, mut a21, mut a22, mut a23) = (zero, zero, zero, zero);
        let (mut a30, mut a31, mut a32, mut a33) = (zero, zero, zero, zero);
        let mut e = 0;
        while e < main {
            // SAFETY: `e + LANES <= main <= len` for every row and point.
            unsafe {
                let xv0 = loadu(x0.as_ptr().add(e));
                let xv1 = loadu(x1.as_ptr().add(e));
                let xv2 = loadu(x2.as_ptr().add(e));
                let xv3 = loadu(x3.as_ptr().add(e));
                // `a{p}{r}` accumulates point p against row r.
                macro_rules! row_step {
                    ($row:ident, $a0:ident, $a1:ident, $a2:ident, $a3:ident) => {
                        let rv = loadu($row.as_ptr().add(e));
                        $a0 = _mm512_fmadd_pd(rv, xv0, $a0);
                        $a1 = _mm512_fmadd_pd(rv, xv1, $a1);
                        $a2 = _mm512_fmadd_pd(rv, xv2, $a2);
                        $a3 = _mm512_fmadd_pd(rv, xv3, $a3);
                    };
                }
                row_step!(r0, a00, a10, a20, a30);
                row_step!(r1, a01, a11, a21, a31);
                row_step!(r2, a02, a12, a22, a32);
                row_step!(r3, a03, a13, a23, a33);
            }
            e += LANES;
        }

        // Per product: lanes summed in index order, then the scalar tail.
        let finish = |acc: __m512d, row: &[f64], x: &[f64]| -> f64 {
            let mut lanes = [0.0f64; LANES];
            // SAFETY: `lanes` is exactly one vector wide.
            unsafe { _mm512_storeu_pd(lanes.as_mut_ptr(), acc) };
            let mut tail = 0.0;
            for (ra, xa) in row[main..].iter().zip(&x[main..]) {
                tail = super::fused_step(*ra, *xa, tail);
            }
            lanes.iter().sum::<f64>() + tail
        };
        [
            [
                finish(a00, r0, x0),
                finish(a01, r1, x0),
                finish(a02, r2, x0),
                finish(a03, r3, x0),
            ],
            [
                finish(a10, r0, x1),
                finish(a11, r1, x1),
                finish(a12, r2, x1),
                finish(a13, r3, x1),
            ],
            [
                finish(a20, r0, x2),
                finish(a21, r1, x2),
                finish(a22, r2, x2),
                finish(a23, r3, x2),
            ],
            [
                finish(a30, r0, x3),
                finish(a31, r1, x3),
                finish(a32, r2, x3),
                finish(a33, r3, x3),
            ],
        ]
    }
}

/// Dot products of `TILE` consecutive rows of `m` against `TILE` points:
/// `result[p][r] = dot(row(k0 + r), xs[p])`, bit-identical to the sixteen
/// [`dot`] calls — per pair the lane assignment, the tail, and the reduction
/// order are exactly the same, and tiling changes no pair's own arithmetic.
/// What it does change is arithmetic intensity: each loaded chunk feeds four
/// fused multiply-adds instead of one, so a blocked product over many rows
/// and points is bound by arithmetic rather than by loads. On targets without
/// 512-bit vectors this falls back to the plain single-pair kernel.
#[inline]
pub fn dot_tile(m: &Matrix, k0: usize, xs: [&[f64]; TILE]) -> [[f64; TILE]; TILE] {
    #[cfg(all(target_arch = "x86_64", target_feature = "avx512f", target_feature = "fma"))]
    return simd::product_tile(m, k0, xs);
    #[cfg(not(all(target_arch = "x86_64", target_feature = "avx512f", target_feature = "fma")))]
    return std::array::from_fn(|p| std::array::from_fn(|r| dot(m.row(k0 + r), xs[p])));
}

/// Sum of squares with Neumaier compensation.
///
/// The embedding divides by `d^2 + ||x||^2`, so the squared norm is the one
/// accumulation where rounding drift would leak into every produced bit;
/// compensated summation keeps it accurate at any dimension for the cost of
/// a few extra adds per element.
#[inline]
pub fn squared_norm(x: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in x {
        let term = v * v;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Euclidean norm.
#[inline]
pub fn norm(x: &[f64]) -> f64 {
    squared_norm(x).sqrt()
}
