// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::beta_content_p;
use crate::cubes::{cube_faces, dyadic_cubes_meeting, CubeForest};
use crate::error::{Error, Result};
use crate::geometry::{Ball, PointCloud};
use crate::scalar::{self, Scalar};

/// Both sides of the skeleton packing bound for one top cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct BjRecord<T> {
    pub top: usize,
    pub k: i32,
    pub c: T,
    /// `sum beta^{d,2}(3 B_Q) l(Q)^d` over descendants with `l(Q) > c 2^-k`.
    pub beta_terms: T,
    pub top_term: T,
    /// `beta_terms + l(R)^d`.
    pub lhs: T,
    /// Exact d-measure of the skeleton of side-`c 2^-k` cubes meeting `R`.
    pub skeleton_measure: T,
    pub skeleton_faces: usize,
    pub cubes_used: usize,
    /// `lhs / skeleton_measure`.
    pub ratio: T,
}

/// Compares `sum_Q beta^{d,2}(3 B_Q) l(Q)^d + l(R)^d` with the measure of the
/// skeleton set `E_{R,k}`.
pub fn bj_sum_check<T: Scalar>(
    cloud: &PointCloud<T>,
    forest: &CubeForest<T>,
    r: usize,
    k: i32,
    c: T,
    d: usize,
    min_scale: T,
) -> Result<BjRecord<T>> {
    if r >= forest.cubes.len() {
        return Err(Error::param("r", format!("cube {r} not in forest")));
    }
    let top = forest.cube(r);
    let threshold: T = c * scalar::pow2(-k);
    let scale = min_scale.max(cloud.resolution());
    let ids: Vec<usize> = forest.descendants(r).into_iter().filter(|&id| forest.cube(id).side > threshold).collect();
    let three = T::lit(3.0);
    let terms: Vec<T> = ids
        .par_iter()
        .map(|&id| {
            let q = forest.cube(id);
            let ball = Ball::new(cloud.point(q.center).to_vec(), three * q.side)?;
            Ok(beta_content_p(cloud, &ball, d, T::lit(2.0), scale)?.value * q.side.powi(d as i32))
        })
        .collect::<Result<_>>()?;
    let beta_terms: T = terms.into_iter().sum();
    let members = cloud.subset(&top.members);
    let cubes = dyadic_cubes_meeting(&members, k, c)?;
    let faces: HashSet<_> = cubes.iter().flat_map(|q| cube_faces(q, d)).collect();
    let skeleton_measure = T::from_usize(faces.len()).unwrap_or_else(T::zero) * threshold.powi(d as i32);
    let top_term = top.side.powi(d as i32);
    let lhs = beta_terms + top_term;
    Ok(BjRecord {
        top: r,
        k,
        c,
        beta_terms,
        top_term,
        lhs,
        skeleton_measure,
        skeleton_faces: faces.len(),
        cubes_used: ids.len(),
        ratio: lhs / skeleton_measure,
    })
}

/// `C gamma^(1/2) content^(3/2) / measure^(1/2)`.
pub fn capacity_lower_bound<T: Scalar>(content_e: T, measure_sigma: T, gamma: T, c: T, d: usize) -> Result<T> {
    for (name, v) in [("content_e", content_e), ("measure_sigma", measure_sigma), ("gamma", gamma), ("c", c)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
        }
    }
    if d == 0 {
        return Err(Error::param("d", "must be >= 1".to_string()));
    }
    Ok(c * gamma.sqrt() * content_e.powf(T::lit(1.5)) / measure_sigma.sqrt())
}
