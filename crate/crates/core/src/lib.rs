//! Binary hashing for similarity search on the unit hypersphere.
//!
//! The central construction maps feature vectors from `R^N` onto the unit
//! sphere in `R^(N+1)` with an inverse stereographic projection, then hashes
//! with hyperplanes through a common interior point of that sphere. Seen back
//! in the original space, every hyperplane becomes a hypersphere (or, in a
//! degenerate direction, an affine plane), so the scheme prices hypersphere
//! hashing at hyperplane cost — one dot product per bit — while the common
//! intersection point rules out disconnected equal-code regions.
//!
//! The crate is organized as:
//!
//! * [`bits`] — packed binary codes and Hamming-style distances,
//! * [`linalg`] — small dense-matrix plumbing and the dot/distance kernels,
//! * [`rng`] — seed handling and reproducible Gaussian sampling,
//! * [`dataset`] — validated record/query collections,
//! * [`projection`] — the sphere embedding and its inverse, plus the induced
//!   shape of an embedded hyperplane,
//! * [`hashers`] — the four hash families (`lh`, `ah`, `hs`, `eh`),
//! * [`search`] — exact k-NN in Euclidean and Hamming space,
//! * [`eval`] — recall protocol, radius diagnostics, parameter sweeps and
//!   timing,
//! * [`connectivity`] — a grid oracle that counts connected components of
//!   equal-code regions in low dimension,
//! * [`io`] — dataset loaders, synthetic generation, and family/code files.
//!
//! Everything randomized is driven by an explicit [`Seed`]; identical seeds
//! give identical results regardless of thread count.

pub mod bits;
pub mod connectivity;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hashers;
pub mod io;
pub mod linalg;
pub mod projection;
pub mod rng;
pub mod search;

pub use bits::{hamming_distance, pack_bits, spherical_hamming_distance, BitCode};
pub use dataset::Dataset;
pub use error::Error;
pub use hashers::{
    AffineHyperplaneFamily, EclipseFamily, HashFamily, HypersphereFamily,
    LinearHyperplaneFamily, Method,
};
pub use linalg::Matrix;
pub use projection::{induced_shape, inverse_stereographic, stereographic, InducedShape, TildeHyperplane, TildePoint};
pub use rng::{Seed, StreamPurpose};
pub use search::{knn_hamming, knn_l2, NeighborList};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
