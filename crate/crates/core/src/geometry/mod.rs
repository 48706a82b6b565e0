// SPDX-License-Identifier: Apache-2.0

//! Euclidean primitives: point clouds, balls, affine planes and the
//! Grassmannian, plus Hausdorff content and Choquet integration.

mod content;
mod grid;
mod plane;

pub use content::{choquet_integral, hausdorff_content, ContentEstimate, ContentTree};
pub use grid::GridIndex;
pub use plane::{grassmannian_distance, project, sample_plane_ball, AffinePlane};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// A finite sample of a set in R^n with a declared resolution `h`: every point
/// of the idealised set lies within `h` of some sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct PointCloud<T> {
    dim: usize,
    coords: Vec<T>,
    resolution: T,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Vec<T>>, resolution: T) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or(Error::Empty("point cloud"))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, resolution)
    }

    pub fn from_flat(dim: usize, coords: Vec<T>, resolution: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("ambient dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidCloud(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if !(resolution > T::zero()) || !resolution.is_finite() {
            return Err(Error::InvalidCloud(format!("resolution must be > 0, got {resolution}")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCloud("non-finite coordinate".into()));
        }
        Ok(PointCloud { dim, coords, resolution, weights: None })
    }

    pub fn with_weights(mut self, weights: Vec<T>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::InvalidCloud(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidCloud("weights must be finite and nonnegative".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn without_weights(mut self) -> Self {
        self.weights = None;
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn resolution(&self) -> T {
        self.resolution
    }

    pub fn set_resolution(&mut self, resolution: T) -> Result<()> {
        if !(resolution > T::zero()) {
            return Err(Error::InvalidCloud(format!("resolution must be > 0, got {resolution}")));
        }
        self.resolution = resolution;
        Ok(())
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights.as_ref().map_or(T::one(), |w| w[i])
    }

    /// Sub-cloud on the given indices (weights follow the points). An empty
    /// index list yields an empty cloud with the same dimension.
    pub fn subset(&self, indices: &[usize]) -> PointCloud<T> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointCloud {
            dim: self.dim,
            coords,
            resolution: self.resolution,
            weights: self.weights.as_ref().map(|w| indices.iter().map(|&i| w[i]).collect()),
        }
    }

    /// Indices of points in the open ball.
    pub fn indices_in_ball(&self, ball: &Ball<T>) -> Vec<usize> {
        let r2 = ball.radius * ball.radius;
        self.points()
            .enumerate()
            .filter(|(_, p)| linalg::dist2(p, &ball.center) < r2)
            .map(|(i, _)| i)
            .collect()
    }

    /// Cloud scaled by `s` about the origin; resolution scales too. Weights are
    /// left untouched.
    pub fn dilate(&self, s: T) -> PointCloud<T> {
        PointCloud {
            dim: self.dim,
            coords: self.coords.iter().map(|&c| c * s).collect(),
            resolution: self.resolution * s.abs(),
            weights: self.weights.clone(),
        }
    }

    pub fn translate(&self, v: &[T]) -> PointCloud<T> {
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(|(&a, &b)| a + b))
            .collect();
        PointCloud { coords, ..self.clone() }
    }

    /// Applies an arbitrary map to each point; the output dimension is taken
    /// from the first image.
    pub fn map_points(&self, f: impl Fn(&[T]) -> Vec<T>) -> Result<PointCloud<T>> {
        let pts: Vec<Vec<T>> = self.points().map(f).collect();
        let mut out = PointCloud::new(pts, self.resolution)?;
        out.weights = self.weights.clone();
        Ok(out)
    }

    /// Exact diameter (quadratic in the number of points).
    pub fn diameter(&self) -> T {
        let n = self.len();
        let mut best = T::zero();
        for i in 0..n {
            let p = self.point(i);
            for j in (i + 1)..n {
                let d2 = linalg::dist2(p, self.point(j));
                if d2 > best {
                    best = d2;
                }
            }
        }
        best.sqrt()
    }

    pub fn total_weight(&self) -> T {
        match &self.weights {
            Some(w) => w.iter().copied().sum(),
            None => T::from_usize(self.len()).unwrap_or_else(T::zero),
        }
    }
}

/// Open ball `{ y : |y - center| < radius }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Ball<T> {
    pub center: Vec<T>,
    pub radius: T,
}

impl<T: Scalar> Ball<T> {
    pub fn new(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::param("radius", format!("must be > 0, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    #[inline]
    pub fn contains(&self, x: &[T]) -> bool {
        linalg::dist2(x, &self.center) < self.radius * self.radius
    }

    /// `lambda * B`: same center, radius multiplied.
    pub fn inflate(&self, lambda: T) -> Ball<T> {
        Ball { center: self.center.clone(), radius: self.radius * lambda }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_points() {
        let err = PointCloud::new(vec![vec![0.0f64, 1.0], vec![1.0]], 0.1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn rejects_bad_resolution_and_weights() {
        assert!(PointCloud::new(vec![vec![0.0f64]], 0.0).is_err());
        let c = PointCloud::new(vec![vec![0.0f64], vec![1.0]], 0.1).unwrap();
        assert!(c.clone().with_weights(vec![1.0]).is_err());
        assert!(c.with_weights(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn ball_is_open() {
        let c = PointCloud::new(vec![vec![0.0f64, 0.0], vec![1.0, 0.0], vec![0.5, 0.0]], 0.1).unwrap();
        let b = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(c.indices_in_ball(&b), vec![0, 2]);
    }

    #[test]
    fn diameter_of_square() {
        let c = PointCloud::new(
            vec![vec![0.0f64, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            0.1,
        )
        .unwrap();
        assert!((c.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }
}
