//! The sphere embedding and its inverse.
//!
//! A vector `x` in `R^N` is lifted onto the unit sphere `S` in `R^(N+1)` by
//! inverse stereographic projection with scale parameter `d`:
//!
//! ```text
//! x~_i = 2 d x_i / (d^2 + ||x||^2)          for i = 1..N
//! x~_{N+1} = (||x||^2 - d^2) / (d^2 + ||x||^2)
//! ```
//!
//! `d` controls which part of the sphere the data occupies: points with
//! `||x|| < d` land on the southern hemisphere (last coordinate negative),
//! points with `||x|| > d` on the northern one, and the north pole itself is
//! the image of infinity. The forward map [`stereographic`] undoes the
//! embedding from everywhere except that pole.
//!
//! A hyperplane in the embedded space, intersected with `S` and pulled back
//! through the projection, turns into either a hypersphere or (when the
//! plane passes through the pole) an affine plane in the original space —
//! see [`induced_shape`]. That correspondence is what lets sphere-shaped
//! hash cells be priced as plane-side tests.

use crate::error::Error;
use crate::linalg::{self, dot};
use crate::Result;

/// Hard floor on `1 - p_last` below which a point counts as the pole.
const POLE_EPS: f64 = 1e-12;

/// Relative tolerance deciding when an embedded hyperplane passes through
/// the pole (and therefore induces a plane rather than a sphere).
const BRANCH_EPS: f64 = 1e-12;

/// A point of the embedded space `R^(N+1)`, produced by or fed to the
/// projection maps. The embedding always returns points on the unit sphere;
/// construction itself only checks shape and finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct TildePoint {
    coords: Vec<f64>,
}

impl TildePoint {
    pub fn new(coords: Vec<f64>) -> Result<TildePoint> {
        if coords.len() < 2 {
            return Err(Error::InvalidParameter(
                "embedded points live in at least 2 dimensions".into(),
            ));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                value: coords[i],
            });
        }
        Ok(TildePoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The coordinate along the pole axis.
    pub fn last(&self) -> f64 {
        *self.coords.last().unwrap()
    }
}

/// A hyperplane `normal . x~ + offset = 0` in the embedded space.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeHyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl TildeHyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<TildeHyperplane> {
        if normal.len() < 2 {
            return Err(Error::InvalidParameter(
                "embedded hyperplanes need a normal in at least 2 dimensions".into(),
            ));
        }
        if let Some(i) = normal.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                value: normal[i],
            });
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite {
                index: normal.len(),
                value: offset,
            });
        }
        if normal.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter("hyperplane normal is zero".into()));
        }
        Ok(TildeHyperplane { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed evaluation `normal . p + offset`.
    pub fn eval(&self, p: &TildePoint) -> f64 {
        dot(&self.normal, p.coords()) + self.offset
    }
}

/// What an embedded hyperplane looks like after being pulled back to the
/// original space.
#[derive(Debug, Clone, PartialEq)]
pub enum InducedShape {
    /// `normal . x + offset = 0` with `normal` in `R^N`.
    AffinePlane { normal: Vec<f64>, offset: f64 },
    /// All `x` with `||x - center|| = radius`.
    Hypersphere { center: Vec<f64>, radius: f64 },
}

fn check_scale(d: f64) -> Result<()> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "projection scale d must be positive and finite, got {d}"
        )));
    }
    Ok(())
}

/// Core of the embedding, shared with the hot hashing path: writes the
/// `N+1` embedded coordinates of `x` into `out` without any validation.
#[inline]
pub(crate) fn embed_into(x: &[f64], d: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), x.len() + 1);
    let r2 = linalg::squared_norm(x);
    let denom = d * d + r2;
    let scale = 2.0 * d / denom;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = scale * v;
    }
    out[x.len()] = (r2 - d * d) / denom;
}

/// Lifts `x` onto the unit sphere of `R^(N+1)` with scale `d`.
///
/// The result has unit norm up to a relative 1e-9, and its last coordinate
/// is negative exactly when `||x|| < d`.
pub fn inverse_stereographic(x: &[f64], d: f64) -> Result<TildePoint> {
    check_scale(d)?;
    if x.is_empty() {
        return Err(Error::InvalidParameter("cannot embed a 0-dimensional point".into()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i, value: x[i] });
    }
    if !(d * d + linalg::squared_norm(x)).is_finite() {
        return Err(Error::InvalidParameter(
            "squared norm overflows; rescale the data before embedding".into(),
        ));
    }
    let mut out = vec![0.0; x.len() + 1];
    embed_into(x, d, &mut out);
    Ok(TildePoint { coords: out })
}

/// Maps a sphere point (anywhere but the north pole) back to `R^N`:
/// `x_i = d p_i / (1 - p_last)`.
pub fn stereographic(p: &TildePoint, d: f64) -> Result<Vec<f64>> {
    check_scale(d)?;
    let norm = linalg::norm(p.coords());
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "point is not on the unit sphere (norm {norm})"
        )));
    }
    let gap = 1.0 - p.last();
    if gap < POLE_EPS {
        return Err(Error::ProjectionPole { gap });
    }
    let n = p.coords().len() - 1;
    Ok(p.coords()[..n].iter().map(|&v| d * v / gap).collect())
}

/// Pulls an embedded hyperplane back through the projection.
///
/// Writing the plane as `n~ . x~ + b~ = 0`, the preimage on the original
/// space is:
///
/// * an affine plane `sum_i n~_i x_i + d b~ = 0` when the plane passes
///   through the north pole, i.e. `n~_{N+1} = -b~` (decided with a relative
///   1e-12 tolerance against `||(n~, b~)||`);
/// * otherwise a hypersphere with
///   `center_i = -d n~_i / (n~_{N+1} + b~)` and
///   `radius^2 = d^2 / (n~_{N+1} + b~)^2 * (||n~||^2 - b~^2)`.
///
/// A negative `radius^2` means the plane misses the sphere entirely, which
/// is reported as [`Error::NoIntersection`].
pub fn induced_shape(h: &TildeHyperplane, d: f64) -> Result<InducedShape> {
    check_scale(d)?;
    let normal = h.normal();
    let n = normal.len() - 1;
    let scale = (linalg::squared_norm(normal) + h.offset() * h.offset()).sqrt();
    let denom = normal[n] + h.offset();
    if denom.abs() <= BRANCH_EPS * scale {
        let plane_normal = normal[..n].to_vec();
        if plane_normal.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidParameter(
                "hyperplane touches the sphere only at the projection pole; it induces no shape"
                    .into(),
            ));
        }
        return Ok(InducedShape::AffinePlane {
            normal: plane_normal,
            offset: d * h.offset(),
        });
    }
    let radius_sq =
        d * d / (denom * denom) * (linalg::squared_norm(normal) - h.offset() * h.offset());
    if radius_sq < 0.0 {
        return Err(Error::NoIntersection { radius_sq });
    }
    let center = normal[..n].iter().map(|&v| -d * v / denom).collect();
    Ok(InducedShape::Hypersphere {
        center,
        radius: radius_sq.sqrt(),
    })
}

impl InducedShape {
    /// Signed boundary residual at `x`: zero on the shape, negative strictly
    /// inside a sphere (or on the negative side of a plane).
    pub fn residual(&self, x: &[f64]) -> f64 {
        match self {
            InducedShape::AffinePlane { normal, offset } => dot(normal, x) + offset,
            InducedShape::Hypersphere { center, radius } => {
                linalg::squared_distance(x, center) - radius * radius
            }
        }
    }
}
