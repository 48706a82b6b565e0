// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// An affine d-plane: base point plus an orthonormal d-frame. A linear plane
/// (an element of the Grassmannian) is one whose base is the origin, though
/// the Grassmannian operations ignore the base anyway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct AffinePlane<T> {
    base: Vec<T>,
    frame: Vec<Vec<T>>,
}

impl<T: Scalar> AffinePlane<T> {
    /// Validates an already orthonormal frame.
    pub fn new(base: Vec<T>, frame: Vec<Vec<T>>) -> Result<Self> {
        let n = base.len();
        let d = frame.len();
        if d == 0 || d >= n {
            return Err(Error::param("frame", format!("need 1 <= d <= n-1, got d={d}, n={n}")));
        }
        let tol = T::frame_tolerance();
        for (i, v) in frame.iter().enumerate() {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            for (j, w) in frame.iter().enumerate().skip(i) {
                let target = if i == j { T::one() } else { T::zero() };
                if (linalg::dot(v, w) - target).abs() > tol {
                    return Err(Error::param("frame", "frame vectors must be orthonormal"));
                }
            }
        }
        Ok(AffinePlane { base, frame })
    }

    /// Plane through `base` spanned by arbitrary independent vectors.
    pub fn spanned(base: Vec<T>, mut spanning: Vec<Vec<T>>) -> Result<Self> {
        if spanning.iter().any(|v| v.len() != base.len()) {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                got: spanning.iter().map(|v| v.len()).find(|&l| l != base.len()).unwrap_or(0),
            });
        }
        if !linalg::gram_schmidt(&mut spanning) {
            return Err(Error::param("frame", "spanning vectors are dependent"));
        }
        Self::new(base, spanning)
    }

    /// Line in the plane through `base` with direction angle `theta`.
    pub fn planar_line(base: [T; 2], theta: T) -> Self {
        AffinePlane { base: base.to_vec(), frame: vec![vec![theta.cos(), theta.sin()]] }
    }

    /// Coordinate d-plane through the origin spanned by `e_0 .. e_{d-1}`.
    pub fn coordinate(n: usize, d: usize) -> Result<Self> {
        let frame = (0..d)
            .map(|i| (0..n).map(|k| if k == i { T::one() } else { T::zero() }).collect())
            .collect();
        Self::new(vec![T::zero(); n], frame)
    }

    pub fn base(&self) -> &[T] {
        &self.base
    }

    pub fn frame(&self) -> &[Vec<T>] {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn with_base(&self, base: Vec<T>) -> Self {
        AffinePlane { base, frame: self.frame.clone() }
    }

    /// Coordinates of `x - base` in the frame.
    pub fn coordinates(&self, x: &[T]) -> Vec<T> {
        self.frame
            .iter()
            .map(|f| {
                x.iter()
                    .zip(&self.base)
                    .zip(f)
                    .fold(T::zero(), |acc, ((&xi, &bi), &fi)| acc + (xi - bi) * fi)
            })
            .collect()
    }

    /// Closest point of the plane to `x`.
    pub fn foot(&self, x: &[T]) -> Vec<T> {
        let c = self.coordinates(x);
        let mut out = self.base.clone();
        for (ci, f) in c.iter().zip(&self.frame) {
            for (o, &fi) in out.iter_mut().zip(f) {
                *o += *ci * fi;
            }
        }
        out
    }

    /// Euclidean distance from `x` to the plane (norm of the residual, which
    /// stays accurate for points close to the plane).
    pub fn distance(&self, x: &[T]) -> T {
        let mut res: Vec<T> = x.iter().zip(&self.base).map(|(&xi, &bi)| xi - bi).collect();
        for f in &self.frame {
            let c = linalg::dot(&res, f);
            for (r, &fi) in res.iter_mut().zip(f) {
                *r -= c * fi;
            }
        }
        linalg::norm(&res)
    }

    /// Row-major `n x n` matrix of the orthogonal projection onto the linear part.
    pub fn projection_matrix(&self) -> Vec<T> {
        let n = self.ambient_dim();
        let mut m = vec![T::zero(); n * n];
        for f in &self.frame {
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += f[i] * f[j];
                }
            }
        }
        m
    }
}

/// Orthogonal projection of the cloud onto `plane`, expressed in the plane's
/// frame coordinates. Resolution is preserved since the map is 1-Lipschitz.
pub fn project<T: Scalar>(cloud: &PointCloud<T>, plane: &AffinePlane<T>) -> Result<PointCloud<T>> {
    if cloud.dim() != plane.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: plane.ambient_dim(), got: cloud.dim() });
    }
    let d = plane.dim();
    let mut coords = Vec::with_capacity(cloud.len() * d);
    for p in cloud.points() {
        coords.extend(plane.coordinates(p));
    }
    let mut out = PointCloud::from_flat(d, coords, cloud.resolution())?;
    if let Some(w) = cloud.weights() {
        out = out.with_weights(w.to_vec())?;
    }
    Ok(out)
}

/// `|| pi_V - pi_W ||_op` for the linear parts of two planes.
pub fn grassmannian_distance<T: Scalar>(v: &AffinePlane<T>, w: &AffinePlane<T>) -> Result<T> {
    if v.ambient_dim() != w.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: w.ambient_dim() });
    }
    if v.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), got: w.dim() });
    }
    let n = v.ambient_dim();
    let pv = v.projection_matrix();
    let pw = w.projection_matrix();
    let diff: Vec<T> = pv.iter().zip(&pw).map(|(&a, &b)| a - b).collect();
    let (vals, _) = linalg::symmetric_eigen(&diff, n);
    let op = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    Ok(op.min(T::one()))
}

/// `count` planes within Grassmannian distance `eps` of `v0` (same base),
/// the first being `v0` itself. Deterministic in `seed`.
pub fn sample_plane_ball<T: Scalar>(
    v0: &AffinePlane<T>,
    eps: T,
    count: usize,
    seed: u64,
) -> Result<Vec<AffinePlane<T>>> {
    if !(eps > T::zero() && eps <= T::one()) {
        return Err(Error::param("eps", format!("need 0 < eps <= 1, got {eps}")));
    }
    let n = v0.ambient_dim();
    let d = v0.dim();
    let normals = linalg::orthogonal_complement(v0.frame(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(v0.clone());
    let cap = T::lit(1.0 - 1e-9);
    while out.len() < count {
        // Tilt each frame vector along a random combination of the normals.
        let g: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..normals.len()).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let fro: f64 = g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        if fro == 0.0 {
            continue;
        }
        let u: f64 = 1.0 - rng.gen::<f64>();
        let mut target = (eps * T::lit(u)).min(cap);
        loop {
            let slope = target.asin().tan();
            let mut frame: Vec<Vec<T>> = v0.frame().to_vec();
            for (fi, gi) in frame.iter_mut().zip(&g) {
                for (nj, &gij) in normals.iter().zip(gi) {
                    let c = slope * T::lit(gij / fro);
                    for (x, &y) in fi.iter_mut().zip(nj) {
                        *x += c * y;
                    }
                }
            }
            if !linalg::gram_schmidt(&mut frame) {
                target *= T::lit(0.5);
                continue;
            }
            let w = AffinePlane { base: v0.base().to_vec(), frame };
            if grassmannian_distance(v0, &w)? <= eps {
                out.push(w);
                break;
            }
            target *= T::lit(0.9);
        }
    }
    Ok(out)
}
