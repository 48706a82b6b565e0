// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::scalar::{self, Scalar};

/// Half-open dyadic cube `prod [a_i s, (a_i + 1) s)` with side `s = 2^-level`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub anchor: Vec<i64>,
}

impl DyadicCube {
    pub fn side<T: Scalar>(&self) -> T {
        scalar::pow2(-self.level)
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// The cube of side `2^-level` containing `x`.
    pub fn containing<T: Scalar>(x: &[T], level: i32) -> DyadicCube {
        let inv: T = scalar::pow2(level);
        DyadicCube { level, anchor: x.iter().map(|&c| (c * inv).floor().to_i64().unwrap_or(0)).collect() }
    }

    pub fn contains<T: Scalar>(&self, x: &[T]) -> bool {
        DyadicCube::containing(x, self.level).anchor == self.anchor
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube { level: self.level - 1, anchor: self.anchor.iter().map(|a| a.div_euclid(2)).collect() }
    }

    /// Ancestor at a coarser `level` (`level <= self.level`).
    pub fn ancestor(&self, level: i32) -> DyadicCube {
        let shift = (self.level - level).max(0) as u32;
        DyadicCube { level, anchor: self.anchor.iter().map(|a| a >> shift).collect() }
    }

    pub fn lower_corner<T: Scalar>(&self) -> Vec<T> {
        let s: T = self.side();
        self.anchor.iter().map(|&a| T::from_i64(a).unwrap_or_else(T::zero) * s).collect()
    }

    pub fn center<T: Scalar>(&self) -> Vec<T> {
        let s: T = self.side();
        let half = s * T::lit(0.5);
        self.lower_corner::<T>().into_iter().map(|c| c + half).collect()
    }

    /// Euclidean distance from `x` to the closed cube.
    pub fn distance<T: Scalar>(&self, x: &[T]) -> T {
        let s: T = self.side();
        let lo = self.lower_corner::<T>();
        let mut acc = T::zero();
        for (i, &c) in x.iter().enumerate() {
            let e = if c < lo[i] {
                lo[i] - c
            } else if c > lo[i] + s {
                c - lo[i] - s
            } else {
                T::zero()
            };
            acc += e * e;
        }
        acc.sqrt()
    }

    /// Distance from `x` to the farthest point of the closed cube.
    pub fn far_distance<T: Scalar>(&self, x: &[T]) -> T {
        let s: T = self.side();
        let lo = self.lower_corner::<T>();
        x.iter()
            .enumerate()
            .map(|(i, &c)| {
                let e = (c - lo[i]).abs().max((lo[i] + s - c).abs());
                e * e
            })
            .sum::<T>()
            .sqrt()
    }
}

/// Exponent `level` with `2^-level = c 2^-k`, validating `c = 2^-s0`.
pub fn dyadic_level<T: Scalar>(k: i32, c: T) -> Result<i32> {
    if !(c > T::zero()) || c > T::one() {
        return Err(Error::param("c", format!("must be 2^-s0 with s0 >= 0, got {c}")));
    }
    let s0 = -scalar::floor_log2(c);
    if scalar::pow2::<T>(-s0) != c {
        return Err(Error::param("c", format!("must be a power of two, got {c}")));
    }
    Ok(k + s0)
}

/// Dyadic cubes of side `c 2^-k` holding at least one sample, sorted.
pub fn dyadic_cubes_meeting<T: Scalar>(cloud: &PointCloud<T>, k: i32, c: T) -> Result<Vec<DyadicCube>> {
    let level = dyadic_level(k, c)?;
    let set: BTreeSet<DyadicCube> = cloud.points().map(|p| DyadicCube::containing(p, level)).collect();
    Ok(set.into_iter().collect())
}

/// A `d`-face of a dyadic cube: free axes span the face, fixed axes sit at
/// `corner[i] * side`. `corner` is in units of the side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub level: i32,
    pub free_axes: u32,
    pub corner: Vec<i64>,
}

impl Face {
    pub fn side<T: Scalar>(&self) -> T {
        scalar::pow2(-self.level)
    }

    /// Exact Euclidean distance from `x` to the closed face.
    pub fn distance<T: Scalar>(&self, x: &[T]) -> T {
        let s: T = self.side();
        let mut acc = T::zero();
        for (i, &c) in x.iter().enumerate() {
            let lo = T::from_i64(self.corner[i]).unwrap_or_else(T::zero) * s;
            let e = if self.free_axes & (1 << i) != 0 {
                if c < lo {
                    lo - c
                } else if c > lo + s {
                    c - lo - s
                } else {
                    T::zero()
                }
            } else {
                c - lo
            };
            acc += e * e;
        }
        acc.sqrt()
    }
}

/// All `d`-faces of `cube`: `C(n, d) 2^(n - d)` of them.
pub fn cube_faces(cube: &DyadicCube, d: usize) -> Vec<Face> {
    let n = cube.dim();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != d {
            continue;
        }
        let fixed: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        for bits in 0u32..(1 << fixed.len()) {
            let mut corner = cube.anchor.clone();
            for (j, &axis) in fixed.iter().enumerate() {
                if bits & (1 << j) != 0 {
                    corner[axis] += 1;
                }
            }
            out.push(Face { level: cube.level, free_axes: mask, corner });
        }
    }
    out
}

/// Union of `d`-skeletons of dyadic cubes, with a sampled cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct SkeletonSet<T> {
    pub ambient_dim: usize,
    pub d: usize,
    pub faces: Vec<Face>,
    pub cloud: PointCloud<T>,
}

impl<T: Scalar> SkeletonSet<T> {
    /// Builds the deduplicated face list of the given cubes (any levels) and
    /// samples each face on a lattice of step `<= resolution`.
    pub fn from_cubes(cubes: &[DyadicCube], d: usize, resolution: T) -> Result<Self> {
        let n = cubes.first().map(|c| c.dim()).ok_or(Error::Empty("cube list"))?;
        if d < 1 || d >= n {
            return Err(Error::param("d", format!("must satisfy 1 <= d <= n - 1 = {}, got {d}", n - 1)));
        }
        if !(resolution > T::zero()) {
            return Err(Error::param("resolution", format!("must be > 0, got {resolution}")));
        }
        if let Some(c) = cubes.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: c.dim() });
        }
        let mut seen = HashSet::new();
        let mut faces = Vec::new();
        for cube in cubes {
            for f in cube_faces(cube, d) {
                if seen.insert(f.clone()) {
                    faces.push(f);
                }
            }
        }
        let cloud = sample_faces(&faces, n, resolution)?;
        Ok(SkeletonSet { ambient_dim: n, d, faces, cloud })
    }

    /// Exact `d`-measure: sum of `side^d` over distinct faces.
    pub fn measure(&self) -> T {
        self.faces.iter().map(|f| f.side::<T>().powi(self.d as i32)).sum()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Exact distance from `x` to the skeleton.
    pub fn distance(&self, x: &[T]) -> T {
        self.faces.iter().map(|f| f.distance(x)).fold(T::infinity(), T::min)
    }
}

fn sample_faces<T: Scalar>(faces: &[Face], n: usize, resolution: T) -> Result<PointCloud<T>> {
    let mut seen: HashSet<(i32, Vec<i64>)> = HashSet::new();
    let mut coords = Vec::new();
    let mut step_max = T::zero();
    for f in faces {
        let side: T = f.side();
        // samples per side edge: a power of two keeps the lattice exact
        let m_exp = scalar::ceil_log2(side / resolution).max(0);
        let m: i64 = 1 << m_exp;
        let step = side / T::from_i64(m).unwrap_or_else(T::one);
        step_max = step_max.max(step);
        let free: Vec<usize> = (0..n).filter(|i| f.free_axes & (1 << i) != 0).collect();
        let mut offs = vec![0i64; free.len()];
        loop {
            let mut key: Vec<i64> = f.corner.iter().map(|c| c * m).collect();
            for (j, &axis) in free.iter().enumerate() {
                key[axis] += offs[j];
            }
            let level = f.level + m_exp;
            if seen.insert((level, key.clone())) {
                coords.extend(key.iter().map(|&q| T::from_i64(q).unwrap_or_else(T::zero) * step));
            }
            let mut j = 0;
            loop {
                if j == free.len() {
                    break;
                }
                offs[j] += 1;
                if offs[j] <= m {
                    break;
                }
                offs[j] = 0;
                j += 1;
            }
            if j == free.len() {
                break;
            }
        }
    }
    // every face point is within step * sqrt(d) / 2 of a lattice sample
    PointCloud::from_flat(n, coords, step_max.max(T::min_positive_value()))
}

/// `d`-skeleton union of same-generation cubes.
pub fn skeleton_union<T: Scalar>(cubes: &[DyadicCube], d: usize, resolution: T) -> Result<SkeletonSet<T>> {
    if let Some(first) = cubes.first() {
        if cubes.iter().any(|c| c.level != first.level) {
            return Err(Error::param("cubes", "all cubes must belong to one generation".to_string()));
        }
    }
    SkeletonSet::from_cubes(cubes, d, resolution)
}
