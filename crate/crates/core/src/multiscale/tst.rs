// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::{beta_content_p, beta_measure_p};
use crate::cubes::{CubeForest, SkeletonSet, StoppingRegion};
use crate::error::{Error, Result};
use crate::geometry::{hausdorff_content, Ball, PointCloud};
use crate::linalg;
use crate::scalar::Scalar;

/// Which quantity stands in for the d-measure of the top cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureProxy {
    /// Exact face measure of a skeleton set restricted to the top cube.
    SkeletonMeasure,
    /// Dyadic-cover content, bracketed by `[value / c_n, value]`.
    ContentBracket,
}

/// One cube's contribution `beta(C0 B_Q)^2 l(Q)^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct LedgerEntry<T> {
    pub cube: usize,
    pub generation: i32,
    pub side: T,
    pub beta: T,
    pub contribution: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct GenerationSummary<T> {
    pub generation: i32,
    pub side: T,
    pub cubes: usize,
    pub beta_max: T,
    pub beta_mean: T,
    pub contribution: T,
}

/// Both sides of the travelling-salesman comparison for one top cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct TSTReport<T> {
    pub top: usize,
    pub d: usize,
    pub p: T,
    pub c0: T,
    pub cutoff: T,
    pub beta_sum: T,
    /// `diam(Q0)^d` over the member samples.
    pub diam_term: T,
    pub measure_proxy: T,
    pub proxy_kind: MeasureProxy,
    /// Lower end of the proxy bracket (equals `measure_proxy` for skeletons).
    pub measure_lower: T,
    /// `(diam_term + beta_sum) / measure_proxy`.
    pub ratio_lower: T,
    /// `(diam_term + beta_sum) / measure_lower`.
    pub ratio_upper: T,
    pub generations: Vec<GenerationSummary<T>>,
    pub ledger: Vec<LedgerEntry<T>>,
}

impl<T: Scalar> TSTReport<T> {
    /// Recomputes `beta_sum` from the ledger.
    pub fn ledger_total(&self) -> T {
        self.ledger.iter().map(|e| e.contribution).sum()
    }

    /// Ledger total restricted to a set of cube ids.
    pub fn restricted_sum(&self, cubes: impl Fn(usize) -> bool) -> T {
        self.ledger.iter().filter(|e| cubes(e.cube)).map(|e| e.contribution).sum()
    }
}

fn cube_ball<T: Scalar>(cloud: &PointCloud<T>, forest: &CubeForest<T>, id: usize, lambda: T) -> Result<Ball<T>> {
    let q = forest.cube(id);
    Ball::new(cloud.point(q.center).to_vec(), lambda * q.side)
}

fn check_forest<T: Scalar>(cloud: &PointCloud<T>, forest: &CubeForest<T>, id: usize) -> Result<()> {
    if id >= forest.cubes.len() {
        return Err(Error::param("q0", format!("cube {id} not in forest of {} cubes", forest.cubes.len())));
    }
    if forest.cubes.iter().any(|q| q.center >= cloud.len()) {
        return Err(Error::param("forest", "built on a different cloud".to_string()));
    }
    Ok(())
}

/// Per-cube `beta(lambda B_Q)^2 l(Q)^d` for the given ids, in order.
fn ledger<T: Scalar>(
    cloud: &PointCloud<T>,
    forest: &CubeForest<T>,
    ids: &[usize],
    lambda: T,
    d: usize,
    p: T,
    min_scale: T,
) -> Result<Vec<LedgerEntry<T>>> {
    ids.par_iter()
        .map(|&id| {
            let q = forest.cube(id);
            let ball = cube_ball(cloud, forest, id, lambda)?;
            let beta = beta_content_p(cloud, &ball, d, p, min_scale)?.value;
            Ok(LedgerEntry {
                cube: id,
                generation: q.generation,
                side: q.side,
                beta,
                contribution: beta * beta * q.side.powi(d as i32),
            })
        })
        .collect()
}

fn summarise<T: Scalar>(ledger: &[LedgerEntry<T>]) -> Vec<GenerationSummary<T>> {
    let mut out: Vec<GenerationSummary<T>> = Vec::new();
    let mut sorted: Vec<&LedgerEntry<T>> = ledger.iter().collect();
    sorted.sort_by_key(|e| (e.generation, e.cube));
    for e in sorted {
        match out.last_mut() {
            Some(g) if g.generation == e.generation => {
                g.cubes += 1;
                g.beta_max = g.beta_max.max(e.beta);
                g.beta_mean += e.beta;
                g.contribution += e.contribution;
            }
            _ => out.push(GenerationSummary {
                generation: e.generation,
                side: e.side,
                cubes: 1,
                beta_max: e.beta,
                beta_mean: e.beta,
                contribution: e.contribution,
            }),
        }
    }
    for g in &mut out {
        g.beta_mean /= T::from_usize(g.cubes).unwrap_or_else(T::one);
    }
    out
}

fn tst_core<T: Scalar>(
    cloud: &PointCloud<T>,
    forest: &CubeForest<T>,
    q0: usize,
    d: usize,
    p: T,
    c0: T,
    min_scale: T,
) -> Result<(T, Vec<LedgerEntry<T>>)> {
    check_forest(cloud, forest, q0)?;
    if !(c0 >= T::one()) {
        return Err(Error::param("c0", format!("need C0 >= 1, got {c0}")));
    }
    let cutoff = min_scale.max(cloud.resolution());
    let top = forest.cube(q0);
    if cutoff > top.side {
        return Err(Error::param(
            "min_scale",
            format!("cutoff {cutoff} lies above l(Q0) = {}", top.side),
        ));
    }
    let ids: Vec<usize> = forest.descendants(q0).into_iter().filter(|&id| forest.cube(id).side >= cutoff).collect();
    let entries = ledger(cloud, forest, &ids, c0, d, p, cutoff)?;
    Ok((cutoff, entries))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    cloud: &PointCloud<T>,
    forest: &CubeForest<T>,
    q0: usize,
    d: usize,
    p: T,
    c0: T,
    cutoff: T,
    entries: Vec<LedgerEntry<T>>,
    proxy: (T, T, MeasureProxy),
) -> TSTReport<T> {
    let beta_sum: T = entries.iter().map(|e| e.contribution).sum();
    let diam_term = cloud.subset(&forest.cube(q0).members).diameter().powi(d as i32);
    let lhs = diam_term + beta_sum;
    let ratio = |m: T| if m > T::zero() { lhs / m } else { T::infinity() };
    TSTReport {
        top: q0,
        d,
        p,
        c0,
        cutoff,
        beta_sum,
        diam_term,
        measure_proxy: proxy.0,
        proxy_kind: proxy.2,
        measure_lower: proxy.1,
        ratio_lower: ratio(proxy.0),
        ratio_upper: ratio(proxy.1),
        generations: summarise(&entries),
        ledger: entries,
    }
}

/// Sum of `beta_content_p(C0 B_Q)^2 l(Q)^d` over descendants of `q0` with
/// `l(Q) >= max(min_scale, resolution)`, with the content of the top cube as
/// measure proxy.
pub fn tst_sum<T: Scalar>(
    cloud: &PointCloud<T>,
    forest: &CubeForest<T>,
    q0: usize,
    d: usize,
    p: T,
    c0: T,
    min_scale: T,
) -> Result<TSTReport<T>> {
    let (cutoff, entries) = tst_core(cloud, forest, q0, d, p, c0, min_scale)?;
    let members = cloud.subset(&forest.cube(q0).members);
    let content = hausdorff_content(&members, d, cutoff)?;
    let proxy = (content.value, content.lower_bound, MeasureProxy::ContentBracket);
    Ok(finish(cloud, forest, q0, d, p, c0, cutoff, entries, proxy))
}

/// As [`tst_sum`] with the skeleton's sample cloud as the set and its exact
/// face measure inside `B(x_Q0, l(Q0))` as proxy. A face counts when its
/// center lies in that ball. `forest` must be built on `skeleton.cloud`.
pub fn tst_sum_skeleton<T: Scalar>(
    skeleton: &SkeletonSet<T>,
    forest: &CubeForest<T>,
    q0: usize,
    p: T,
    c0: T,
    min_scale: T,
) -> Result<TSTReport<T>> {
    let cloud = &skeleton.cloud;
    let d = skeleton.d;
    let (cutoff, entries) = tst_core(cloud, forest, q0, d, p, c0, min_scale)?;
    let top = forest.cube(q0);
    let ball = Ball::new(cloud.point(top.center).to_vec(), top.side)?;
    let half = T::lit(0.5);
    let measure: T = skeleton
        .faces
        .iter()
        .filter(|f| {
            let s: T = f.side();
            let c: Vec<T> = (0..skeleton.ambient_dim)
                .map(|i| {
                    let lo = T::from_i64(f.corner[i]).unwrap_or_else(T::zero) * s;
                    if f.free_axes & (1 << i) != 0 {
                        lo + half * s
                    } else {
                        lo
                    }
                })
                .collect();
            ball.contains(&c)
        })
        .map(|f| f.side::<T>().powi(d as i32))
        .sum();
    Ok(finish(cloud, forest, q0, d, p, c0, cutoff, entries, (measure, measure, MeasureProxy::SkeletonMeasure)))
}

/// Sum of `beta_content_p(3 B_Q)^2 l(Q)^d` over the cubes of a stopping
/// region, evaluated at the cloud resolution.
pub fn tree_beta_sum<T: Scalar>(
    cloud: &PointCloud<T>,
    forest: &CubeForest<T>,
    region: &StoppingRegion,
    d: usize,
    p: T,
) -> Result<T> {
    check_forest(cloud, forest, region.top)?;
    let ids: Vec<usize> = region.cubes.iter().copied().collect();
    let entries = ledger(cloud, forest, &ids, T::lit(3.0), d, p, cloud.resolution())?;
    Ok(entries.iter().map(|e| e.contribution).sum())
}

/// Discretised square function of a weighted cloud:
/// `sum_{B_Q ⊂ 3 B0} beta_mu(B_Q)^2 Theta_mu(B_Q) mu(Q)` with
/// `Theta_mu(B) = mu(B) / r(B)^d`.
pub fn beta_square_function<T: Scalar>(cloud: &PointCloud<T>, forest: &CubeForest<T>, b0: &Ball<T>, d: usize) -> Result<T> {
    if cloud.weights().is_none() {
        return Err(Error::param("cloud", "weights are required".to_string()));
    }
    if b0.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: b0.dim() });
    }
    let mass_b0: T = cloud.indices_in_ball(b0).iter().map(|&i| cloud.weight(i)).sum();
    if !(mass_b0 > T::zero()) {
        return Err(Error::Numerical("zero mass in B0".to_string()));
    }
    let three_r = T::lit(3.0) * b0.radius;
    let ids: Vec<usize> = (0..forest.cubes.len())
        .filter(|&id| {
            let q = forest.cube(id);
            q.center < cloud.len() && linalg::dist(cloud.point(q.center), &b0.center) + q.side <= three_r
        })
        .collect();
    let terms: Vec<T> = ids
        .par_iter()
        .map(|&id| {
            let q = forest.cube(id);
            let ball = cube_ball(cloud, forest, id, T::one())?;
            let in_ball: T = cloud.indices_in_ball(&ball).iter().map(|&i| cloud.weight(i)).sum();
            if !(in_ball > T::zero()) {
                return Ok(T::zero());
            }
            let beta = beta_measure_p(cloud, &ball, d, T::lit(2.0))?.value;
            let theta = in_ball / ball.radius.powi(d as i32);
            let mu_q: T = q.members.iter().map(|&i| cloud.weight(i)).sum();
            Ok(beta * beta * theta * mu_q)
        })
        .collect::<Result<_>>()?;
    Ok(terms.into_iter().sum())
}
