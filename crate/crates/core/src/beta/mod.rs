// SPDX-License-Identifier: Apache-2.0

//! Jones-type beta numbers of a cloud in a ball: the sup version, the
//! Hausdorff-content (Choquet) version, and the measure version.

mod search;

pub use search::{principal_plane, HALF_SAMPLE_STARTS, SEARCH_SEED};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffinePlane, Ball, ContentTree, GridIndex, PointCloud};
use crate::scalar::Scalar;
use search::FramedPlane;

/// Largest planar instance solved by enumerating lines through point pairs.
pub const PAIR_ENUMERATION_LIMIT: usize = 12;

/// How the optimal plane was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// No points in the ball.
    Empty,
    /// Exact minimum-width slab from the convex hull.
    HullSlab,
    /// Minimum over lines through pairs of points.
    PairLines,
    /// Weighted principal plane (exact for the squared measure version).
    Principal,
    /// Multi-start pattern search.
    MultiStart,
}

/// A beta number with its minimizing plane and search diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct BetaResult<T> {
    pub value: T,
    pub optimal_plane: AffinePlane<T>,
    /// Exponent; `None` stands for the sup version.
    pub p: Option<T>,
    pub ball: Ball<T>,
    pub points_in_ball: usize,
    /// The ball held no points; `value` is 0 by convention.
    pub empty: bool,
    pub method: SearchMethod,
    pub evaluations: usize,
    /// Spread of refined objective values over the search starts.
    pub start_spread: T,
}

fn check_dims<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, d: usize) -> Result<()> {
    if ball.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: ball.dim() });
    }
    if d < 1 || d >= cloud.dim() {
        return Err(Error::param("d", format!("need 1 <= d <= n - 1, got d = {d}, n = {}", cloud.dim())));
    }
    Ok(())
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(Error::param("p", format!("need finite p >= 1, got {p}")));
    }
    Ok(())
}

fn empty_result<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, d: usize, p: Option<T>) -> Result<BetaResult<T>> {
    let plane = AffinePlane::coordinate(cloud.dim(), d)?.with_base(ball.center.clone());
    Ok(BetaResult {
        value: T::zero(),
        optimal_plane: plane,
        p,
        ball: ball.clone(),
        points_in_ball: 0,
        empty: true,
        method: SearchMethod::Empty,
        evaluations: 0,
        start_spread: T::zero(),
    })
}

/// Shared driver: pair lines for small planar instances, multi-start search
/// otherwise. `objective` maps a plane to the quantity being minimised.
fn minimise<T: Scalar>(
    pts: &[&[T]],
    weights: Option<&[T]>,
    d: usize,
    r: T,
    objective: &mut dyn FnMut(&FramedPlane<T>) -> T,
) -> (AffinePlane<T>, T, SearchMethod, usize, T) {
    let n = pts[0].len();
    if n == 2 && d == 1 && pts.len() <= PAIR_ENUMERATION_LIMIT {
        let mut best: Option<(AffinePlane<T>, T)> = None;
        let mut evals = 0;
        for l in search::pair_lines(pts) {
            let v = objective(&FramedPlane::from_plane(&l));
            evals += 1;
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((l, v));
            }
        }
        let (l, v) = best.expect("at least one candidate line");
        return (l, v, SearchMethod::PairLines, evals, T::zero());
    }
    let out = search::multistart(pts, weights, d, r, objective);
    (out.plane, out.value, SearchMethod::MultiStart, out.evaluations, out.spread)
}

/// `beta_inf = inf_L sup_{y in E ∩ B} dist(y, L) / r`.
pub fn beta_inf<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, d: usize) -> Result<BetaResult<T>> {
    check_dims(cloud, ball, d)?;
    let idx = cloud.indices_in_ball(ball);
    if idx.is_empty() {
        return empty_result(cloud, ball, d, None);
    }
    let pts: Vec<&[T]> = idx.iter().map(|&i| cloud.point(i)).collect();
    let r = ball.radius;
    let (plane, width, method, evaluations, spread) = if cloud.dim() == 2 && d == 1 {
        let (l, hw) = search::planar_min_slab(&pts);
        (l, hw, SearchMethod::HullSlab, 1, T::zero())
    } else {
        let mut obj = |pl: &FramedPlane<T>| pts.iter().map(|p| pl.distance(p)).fold(T::zero(), T::max);
        let out = search::multistart(&pts, None, d, r, &mut obj);
        (out.plane, out.value, SearchMethod::MultiStart, out.evaluations, out.spread)
    };
    Ok(BetaResult {
        value: width / r,
        optimal_plane: plane,
        p: None,
        ball: ball.clone(),
        points_in_ball: idx.len(),
        empty: false,
        method,
        evaluations,
        start_spread: spread / r,
    })
}

/// Content beta: `( r^-d int_{E ∩ B} (dist(y, L)/r)^p dH^d_inf )^(1/p)`
/// minimised over planes, with the Choquet integral of the geometry module.
pub fn beta_content_p<T: Scalar>(
    cloud: &PointCloud<T>,
    ball: &Ball<T>,
    d: usize,
    p: T,
    min_scale: T,
) -> Result<BetaResult<T>> {
    check_dims(cloud, ball, d)?;
    check_p(p)?;
    if !(min_scale >= cloud.resolution()) {
        return Err(Error::param(
            "min_scale",
            format!("must be >= cloud resolution {}, got {min_scale}", cloud.resolution()),
        ));
    }
    let idx = cloud.indices_in_ball(ball);
    if idx.is_empty() {
        return empty_result(cloud, ball, d, Some(p));
    }
    let pts: Vec<&[T]> = idx.iter().map(|&i| cloud.point(i)).collect();
    let r = ball.radius;
    let mut tree = ContentTree::new(pts.iter().copied(), cloud.dim(), d, min_scale)?;
    let mut f = vec![T::zero(); pts.len()];
    let mut obj = |pl: &FramedPlane<T>| {
        for (fi, x) in f.iter_mut().zip(&pts) {
            *fi = pl.distance(x) / r;
        }
        tree.choquet(&f, p)
    };
    let (plane, raw, method, evaluations, spread) = minimise(&pts, None, d, r, &mut obj);
    let scale = r.powi(d as i32);
    let norm = |v: T| (v.max(T::zero()) / scale).powf(p.recip());
    Ok(BetaResult {
        value: norm(raw),
        optimal_plane: plane,
        p: Some(p),
        ball: ball.clone(),
        points_in_ball: idx.len(),
        empty: false,
        method,
        evaluations,
        start_spread: norm(raw + spread) - norm(raw),
    })
}

/// Measure beta: `( r^-d sum_i w_i (dist(x_i, L)/r)^p )^(1/p)` minimised over
/// planes. A cloud without weights is treated as unit point masses. For
/// `p = 2` the weighted principal plane is the exact minimiser.
pub fn beta_measure_p<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, d: usize, p: T) -> Result<BetaResult<T>> {
    check_dims(cloud, ball, d)?;
    check_p(p)?;
    let idx = cloud.indices_in_ball(ball);
    let w: Vec<T> = idx.iter().map(|&i| cloud.weight(i)).collect();
    let total: T = w.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::Numerical(format!("zero total weight in ball of radius {}", ball.radius)));
    }
    let pts: Vec<&[T]> = idx.iter().map(|&i| cloud.point(i)).collect();
    let r = ball.radius;
    let mut obj = |pl: &FramedPlane<T>| {
        pts.iter().zip(&w).map(|(x, &wi)| wi * (pl.distance(x) / r).powf(p)).sum::<T>()
    };
    let (plane, raw, method, evaluations, spread) = if p == T::lit(2.0) {
        let plane = search::principal_plane(&pts, Some(&w), d);
        let v = obj(&FramedPlane::from_plane(&plane));
        (plane, v, SearchMethod::Principal, 1, T::zero())
    } else {
        minimise(&pts, Some(&w), d, r, &mut obj)
    };
    let scale = r.powi(d as i32);
    let norm = |v: T| (v.max(T::zero()) / scale).powf(p.recip());
    Ok(BetaResult {
        value: norm(raw),
        optimal_plane: plane,
        p: Some(p),
        ball: ball.clone(),
        points_in_ball: idx.len(),
        empty: false,
        method,
        evaluations,
        start_spread: norm(raw + spread) - norm(raw),
    })
}

/// `( r^-d int_{E1 ∩ 2B} (dist(y, E2)/r)^p dH^d_inf )^(1/p)`, distances to
/// the nearest `E2` sample.
pub fn transfer_term<T: Scalar>(
    e1: &PointCloud<T>,
    e2: &PointCloud<T>,
    ball: &Ball<T>,
    d: usize,
    p: T,
    min_scale: T,
) -> Result<T> {
    check_dims(e1, ball, d)?;
    check_p(p)?;
    if e2.dim() != e1.dim() {
        return Err(Error::DimensionMismatch { expected: e1.dim(), got: e2.dim() });
    }
    if e2.is_empty() {
        return Err(Error::Empty("second cloud"));
    }
    let r = ball.radius;
    let idx = e1.indices_in_ball(&ball.inflate(T::lit(2.0)));
    if idx.is_empty() {
        return Ok(T::zero());
    }
    let grid = GridIndex::from_points(e2.dim(), r * T::lit(0.25), e2.points().enumerate());
    let pts: Vec<&[T]> = idx.iter().map(|&i| e1.point(i)).collect();
    let f: Vec<T> = pts.iter().map(|x| grid.nearest(x).map_or(T::zero(), |(_, dist)| dist) / r).collect();
    let mut tree = ContentTree::new(pts.iter().copied(), e1.dim(), d, min_scale)?;
    let v = tree.choquet(&f, p);
    Ok((v / r.powi(d as i32)).powf(p.recip()))
}
