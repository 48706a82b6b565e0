// SPDX-License-Identifier: Apache-2.0

//! Empirical big-projection profiles: for each ball, the best plane `V_B`
//! and `delta(eps)`, the least projection content over planes within `eps`
//! of `V_B`, maximised over `V_B`.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hausdorff_content, sample_plane_ball, AffinePlane, Ball, PointCloud};
use crate::scalar::Scalar;

/// Angular grid size for lines in the plane.
pub const PLANAR_DIRECTIONS: usize = 720;

/// Default Grassmannian samples per `eps`.
pub const DEFAULT_SAMPLES: usize = 64;

/// Random coarse candidates besides the principal and coordinate planes.
const COARSE_CANDIDATES: usize = 32;

/// Occupied cells of side `grid` after projecting `cloud ∩ B` onto `V`
/// (coordinates taken relative to the center of `B`), times `grid^d`.
pub fn projection_content<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, v: &AffinePlane<T>, grid: T) -> Result<T> {
    if v.ambient_dim() != cloud.dim() || ball.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: v.ambient_dim() });
    }
    if !(grid >= cloud.resolution()) {
        return Err(Error::param("grid", format!("must be >= cloud resolution {}, got {grid}", cloud.resolution())));
    }
    Ok(projection_content_unchecked(cloud, ball, v.frame(), grid))
}

fn projection_content_unchecked<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, frame: &[Vec<T>], grid: T) -> T {
    let r2 = ball.radius * ball.radius;
    let mut cells: HashSet<Vec<i64>> = HashSet::new();
    let mut rel = vec![T::zero(); cloud.dim()];
    for p in cloud.points() {
        let mut d2 = T::zero();
        for (o, (&x, &c)) in rel.iter_mut().zip(p.iter().zip(&ball.center)) {
            *o = x - c;
            d2 += *o * *o;
        }
        if d2 >= r2 {
            continue;
        }
        let key: Vec<i64> = frame
            .iter()
            .map(|f| {
                let c: T = rel.iter().zip(f).map(|(&a, &b)| a * b).sum();
                (c / grid).floor().to_i64().unwrap_or(0)
            })
            .collect();
        cells.insert(key);
    }
    T::from_usize(cells.len()).unwrap_or_else(T::zero) * grid.powi(frame.len() as i32)
}

/// Profile of one ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct BallProfile<T> {
    pub ball: Ball<T>,
    /// Maximin plane at the smallest `eps`.
    pub best_plane: AffinePlane<T>,
    /// `delta(eps)` per entry of the profile's `eps` grid.
    pub delta: Vec<T>,
    /// Maximin plane per `eps`.
    pub planes: Vec<AffinePlane<T>>,
}

/// Big-projection profile over a family of balls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct PBPProfile<T> {
    pub d: usize,
    /// Ascending `eps` grid.
    pub eps: Vec<T>,
    pub grid: T,
    pub samples_per_eps: usize,
    pub seed: u64,
    pub balls: Vec<BallProfile<T>>,
    /// `min over balls of delta(eps)`.
    pub delta_min: Vec<T>,
}

/// Maximin projection profile. In the plane with `d = 1` the line
/// directions are an exhaustive grid of [`PLANAR_DIRECTIONS`] angles and
/// the `eps`-ball of a line is the set of grid lines at angle `asin(eps)` or
/// less. Otherwise candidate planes (principal, coordinate and seeded random
/// ones, then a local refinement around the best) are each tested against
/// nested pools of [`sample_plane_ball`] samples, so `delta` is
/// nonincreasing in `eps` and an upper estimate of the continuum value.
pub fn pbp_profile<T: Scalar>(
    cloud: &PointCloud<T>,
    balls: &[Ball<T>],
    d: usize,
    eps_grid: &[T],
    samples_per_eps: usize,
    seed: u64,
    grid: T,
) -> Result<PBPProfile<T>> {
    let n = cloud.dim();
    if d < 1 || d >= n {
        return Err(Error::param("d", format!("need 1 <= d <= n - 1, got d = {d}, n = {n}")));
    }
    if eps_grid.is_empty() {
        return Err(Error::param("eps_grid", "must not be empty".to_string()));
    }
    let mut eps: Vec<T> = eps_grid.to_vec();
    if eps.iter().any(|e| !(*e > T::zero() && *e <= T::one())) {
        return Err(Error::param("eps_grid", "entries must lie in (0, 1]".to_string()));
    }
    eps.sort_by(|a, b| a.partial_cmp(b).expect("finite eps"));
    eps.dedup();
    if !(grid >= cloud.resolution()) {
        return Err(Error::param("grid", format!("must be >= cloud resolution {}, got {grid}", cloud.resolution())));
    }
    let mut profiles = Vec::with_capacity(balls.len());
    for (bi, ball) in balls.iter().enumerate() {
        if ball.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: ball.dim() });
        }
        let inside = cloud.indices_in_ball(ball);
        if inside.is_empty() {
            return Err(Error::Empty("ball"));
        }
        let local = cloud.subset(&inside);
        let prof = if n == 2 && d == 1 {
            planar_profile(&local, ball, &eps, grid)
        } else {
            sampled_profile(&local, ball, d, &eps, samples_per_eps, seed.wrapping_add(bi as u64), grid)?
        };
        profiles.push(prof);
    }
    let delta_min =
        (0..eps.len()).map(|e| profiles.iter().map(|p| p.delta[e]).fold(T::infinity(), T::min)).collect();
    Ok(PBPProfile { d, eps, grid, samples_per_eps, seed, balls: profiles, delta_min })
}

/// Unit direction at angle `j pi / m`, reduced to the first quadrant so that
/// quarter turns are exact.
fn grid_direction<T: Scalar>(j: usize, m: usize) -> [T; 2] {
    let quarter = m / 2;
    let (q, rem) = (j / quarter, j % quarter);
    let th = T::lit(std::f64::consts::PI) * T::from_usize(rem).expect("small") / T::from_usize(m).expect("small");
    let (s, c) = if rem == 0 { (T::zero(), T::one()) } else { th.sin_cos() };
    match q % 4 {
        0 => [c, s],
        1 => [-s, c],
        2 => [-c, -s],
        _ => [s, -c],
    }
}

fn planar_profile<T: Scalar>(local: &PointCloud<T>, ball: &Ball<T>, eps: &[T], grid: T) -> BallProfile<T> {
    let m = PLANAR_DIRECTIONS;
    let pi = T::lit(std::f64::consts::PI);
    let step = pi / T::from_usize(m).expect("small");
    let rd = ball.radius;
    let contents: Vec<T> = (0..m)
        .map(|j| projection_content_unchecked(local, ball, &[grid_direction::<T>(j, m).to_vec()], grid) / rd)
        .collect();
    let line = |j: usize| {
        AffinePlane::new(ball.center.clone(), vec![grid_direction::<T>(j, m).to_vec()]).expect("unit direction")
    };
    let mut delta = Vec::with_capacity(eps.len());
    let mut planes = Vec::with_capacity(eps.len());
    for &e in eps {
        // largest offset whose angle stays within the eps-ball
        let mut w = 0usize;
        while w < m / 2 && (step * T::from_usize(w + 1).expect("small")).sin() <= e {
            w += 1;
        }
        let (mut best, mut arg) = (T::neg_infinity(), 0usize);
        for j in 0..m {
            let mut lo = contents[j];
            for o in 1..=w {
                lo = lo.min(contents[(j + o) % m]).min(contents[(j + m - o) % m]);
            }
            if lo > best {
                best = lo;
                arg = j;
            }
        }
        delta.push(best);
        planes.push(line(arg));
    }
    BallProfile { ball: ball.clone(), best_plane: planes[0].clone(), delta, planes }
}

fn random_plane<T: Scalar>(n: usize, d: usize, base: &[T], rng: &mut ChaCha8Rng) -> Option<AffinePlane<T>> {
    let vecs: Vec<Vec<T>> = (0..d)
        .map(|_| (0..n).map(|_| T::lit(StandardNormal.sample(rng))).collect())
        .collect();
    AffinePlane::spanned(base.to_vec(), vecs).ok()
}

fn sampled_profile<T: Scalar>(
    local: &PointCloud<T>,
    ball: &Ball<T>,
    d: usize,
    eps: &[T],
    samples: usize,
    seed: u64,
    grid: T,
) -> Result<BallProfile<T>> {
    let n = local.dim();
    let rd = ball.radius.powi(d as i32);
    let base = ball.center.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<AffinePlane<T>> = Vec::new();
    let pts: Vec<&[T]> = local.points().collect();
    candidates.push(crate::beta::principal_plane(&pts, None, d).with_base(base.clone()));
    for start in 0..n {
        let frame: Vec<Vec<T>> = (0..d)
            .map(|i| (0..n).map(|k| if k == (start + i) % n { T::one() } else { T::zero() }).collect())
            .collect();
        candidates.push(AffinePlane::new(base.clone(), frame)?);
    }
    for _ in 0..COARSE_CANDIDATES {
        if let Some(p) = random_plane(n, d, &base, &mut rng) {
            candidates.push(p);
        }
    }
    let content = |v: &AffinePlane<T>| projection_content_unchecked(local, ball, v.frame(), grid) / rd;
    let evaluate = |v: &AffinePlane<T>, salt: u64| -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(eps.len());
        let mut running = content(v);
        for (k, &e) in eps.iter().enumerate() {
            for w in sample_plane_ball(v, e, samples.max(1), salt ^ ((k as u64) << 32))?.iter().skip(1) {
                running = running.min(content(w));
            }
            out.push(running);
        }
        Ok(out)
    };
    let mut scored: Vec<(Vec<T>, AffinePlane<T>)> = Vec::new();
    for (ci, v) in candidates.iter().enumerate() {
        scored.push((evaluate(v, seed.wrapping_mul(31).wrapping_add(ci as u64))?, v.clone()));
    }
    // local refinement around the best candidate at the smallest eps
    let best0 = scored
        .iter()
        .max_by(|a, b| a.0[0].partial_cmp(&b.0[0]).unwrap_or(std::cmp::Ordering::Equal))
        .map(|s| s.1.clone())
        .expect("nonempty candidates");
    let around = sample_plane_ball(&best0, T::lit(0.1).min(eps[0] * T::lit(2.0)).min(T::one()), 16, seed ^ 0xa5a5)?;
    for (ci, v) in around.into_iter().enumerate().skip(1) {
        scored.push((evaluate(&v, seed.wrapping_mul(37).wrapping_add(ci as u64))?, v));
    }
    let mut delta = Vec::with_capacity(eps.len());
    let mut planes = Vec::with_capacity(eps.len());
    for e in 0..eps.len() {
        let (v, p) = scored
            .iter()
            .map(|s| (s.0[e], &s.1))
            .fold((T::neg_infinity(), &scored[0].1), |acc, x| if x.0 > acc.0 { x } else { acc });
        delta.push(v);
        planes.push(p.clone());
    }
    Ok(BallProfile { ball: ball.clone(), best_plane: planes[0].clone(), delta, planes })
}

/// `min over balls of H^d_inf(cloud ∩ B) / r^d`.
pub fn lower_regularity<T: Scalar>(cloud: &PointCloud<T>, balls: &[Ball<T>], d: usize, min_scale: T) -> Result<T> {
    let mut best = T::infinity();
    for b in balls {
        let sub = cloud.subset(&cloud.indices_in_ball(b));
        let c = hausdorff_content(&sub, d, min_scale)?.value;
        best = best.min(c / b.radius.powi(d as i32));
    }
    Ok(best)
}

/// Planar big-piece statistic: over `directions` rotations, the largest
/// fraction of `cloud ∩ B` kept by a greedy monotone subsample that stays on
/// an `lip`-Lipschitz graph over the rotated axis. A reported diagnostic,
/// not a bound.
pub fn bplg_statistic<T: Scalar>(cloud: &PointCloud<T>, ball: &Ball<T>, lip: T, directions: usize) -> Result<T> {
    if cloud.dim() != 2 {
        return Err(Error::param("cloud", "the big-piece statistic is planar".to_string()));
    }
    let inside = cloud.indices_in_ball(ball);
    if inside.is_empty() {
        return Err(Error::Empty("ball"));
    }
    let pi = T::lit(std::f64::consts::PI);
    let mut best = T::zero();
    for j in 0..directions.max(1) {
        let th = pi * T::from_usize(j).expect("small") / T::from_usize(directions.max(1)).expect("small");
        let (s, c) = th.sin_cos();
        let mut uv: Vec<(T, T)> = inside
            .iter()
            .map(|&i| {
                let p = cloud.point(i);
                (c * p[0] + s * p[1], -s * p[0] + c * p[1])
            })
            .collect();
        uv.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let mut kept = 1usize;
        let mut last = uv[0];
        for &q in &uv[1..] {
            if q.0 > last.0 && (q.1 - last.1).abs() <= lip * (q.0 - last.0) {
                kept += 1;
                last = q;
            }
        }
        let frac = T::from_usize(kept).expect("small") / T::from_usize(uv.len()).expect("small");
        best = best.max(frac);
    }
    Ok(best)
}
