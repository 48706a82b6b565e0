// SPDX-License-Identifier: Apache-2.0

//! Plane search over the affine Grassmannian: principal-plane starts and a
//! pattern search on translations and frame rotations.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::AffinePlane;
use crate::linalg;
use crate::scalar::Scalar;

/// Default number of random half-sample starts.
pub const HALF_SAMPLE_STARTS: usize = 8;

/// Seed of the half-sample starts. Fixed so every call is reproducible.
pub const SEARCH_SEED: u64 = 0x5eed_be7a;

/// A plane with an explicit orthonormal normal frame.
#[derive(Debug, Clone)]
pub(crate) struct FramedPlane<T> {
    pub base: Vec<T>,
    pub frame: Vec<Vec<T>>,
    pub normals: Vec<Vec<T>>,
}

impl<T: Scalar> FramedPlane<T> {
    pub fn from_plane(plane: &AffinePlane<T>) -> Self {
        let n = plane.ambient_dim();
        FramedPlane {
            base: plane.base().to_vec(),
            frame: plane.frame().to_vec(),
            normals: linalg::orthogonal_complement(plane.frame(), n),
        }
    }

    pub fn to_plane(&self) -> AffinePlane<T> {
        AffinePlane::new(self.base.clone(), self.frame.clone())
            .or_else(|_| AffinePlane::spanned(self.base.clone(), self.frame.clone()))
            .expect("frame stays orthonormal")
    }

    #[inline]
    pub fn distance(&self, x: &[T]) -> T {
        if self.normals.len() == 1 {
            let nv = &self.normals[0];
            let mut c = T::zero();
            for i in 0..x.len() {
                c += (x[i] - self.base[i]) * nv[i];
            }
            return c.abs();
        }
        let mut acc = T::zero();
        for nv in &self.normals {
            let mut c = T::zero();
            for i in 0..x.len() {
                c += (x[i] - self.base[i]) * nv[i];
            }
            acc += c * c;
        }
        acc.sqrt()
    }

    fn translated(&self, j: usize, t: T) -> Self {
        let mut out = self.clone();
        for (b, &v) in out.base.iter_mut().zip(&self.normals[j]) {
            *b += t * v;
        }
        out
    }

    fn rotated(&self, i: usize, j: usize, a: T) -> Self {
        let (s, c) = a.sin_cos();
        let mut out = self.clone();
        let f = &self.frame[i];
        let nv = &self.normals[j];
        out.frame[i] = f.iter().zip(nv).map(|(&x, &y)| c * x + s * y).collect();
        out.normals[j] = f.iter().zip(nv).map(|(&x, &y)| c * y - s * x).collect();
        linalg::gram_schmidt(&mut out.frame);
        out
    }
}

/// Weighted principal `d`-plane through the weighted centroid.
pub fn principal_plane<T: Scalar>(points: &[&[T]], weights: Option<&[T]>, d: usize) -> AffinePlane<T> {
    let n = points[0].len();
    let w = |k: usize| weights.map_or(T::one(), |w| w[k]);
    let total: T = (0..points.len()).map(w).sum();
    let mut centroid = vec![T::zero(); n];
    if total > T::zero() {
        for (k, p) in points.iter().enumerate() {
            for a in 0..n {
                centroid[a] += w(k) * p[a];
            }
        }
        for c in centroid.iter_mut() {
            *c /= total;
        }
    } else {
        centroid.copy_from_slice(points[0]);
    }
    let mut cov = vec![T::zero(); n * n];
    for (k, p) in points.iter().enumerate() {
        let wk = w(k);
        for a in 0..n {
            let da = p[a] - centroid[a];
            for b in a..n {
                cov[a * n + b] += wk * da * (p[b] - centroid[b]);
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            cov[a * n + b] = cov[b * n + a];
        }
    }
    let (_, vecs) = linalg::symmetric_eigen(&cov, n);
    // eigenvalues ascend: the top d vectors span the principal plane
    let frame: Vec<Vec<T>> = vecs[n - d..].iter().rev().cloned().collect();
    AffinePlane::spanned(centroid.clone(), frame)
        .unwrap_or_else(|_| AffinePlane::coordinate(n, d).expect("valid dimensions").with_base(centroid))
}

/// Lines through pairs of distinct points (planar candidate family).
pub(crate) fn pair_lines<T: Scalar>(points: &[&[T]]) -> Vec<AffinePlane<T>> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let v = linalg::sub(points[j], points[i]);
            if linalg::norm(&v) > T::zero() {
                if let Ok(l) = AffinePlane::spanned(points[i].to_vec(), vec![v]) {
                    out.push(l);
                }
            }
        }
    }
    if out.is_empty() {
        out.push(AffinePlane::planar_line([points[0][0], points[0][1]], T::zero()));
    }
    out
}

/// Outcome of a plane search.
#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome<T> {
    pub plane: AffinePlane<T>,
    pub value: T,
    pub evaluations: usize,
    /// Spread of the refined objective values across starts.
    pub spread: T,
}

/// Pattern search minimising `objective` from `start`. Steps: translations
/// along normals (initial `0.1 r`) and rotations of each frame vector toward
/// each normal (initial `0.1` rad), halved whenever a sweep gains less than
/// a relative `1e-6`. Successful sweeps are replayed with doubling length.
pub(crate) fn refine<T: Scalar>(
    start: &AffinePlane<T>,
    r: T,
    objective: &mut dyn FnMut(&FramedPlane<T>) -> T,
    evaluations: &mut usize,
) -> (FramedPlane<T>, T) {
    let mut cur = FramedPlane::from_plane(start);
    let mut best = objective(&cur);
    *evaluations += 1;
    let mut t_step = T::lit(0.1) * r;
    let mut a_step = T::lit(0.1);
    let t_min = T::lit(1e-9) * r;
    let a_min = T::lit(1e-9);
    let d = cur.frame.len();
    let m = cur.normals.len();
    let budget = 4000usize;
    let mut used = 0usize;
    let gain_tol = T::lit(1e-6);
    while (t_step > t_min || a_step > a_min) && used < budget {
        let sweep_start = best;
        let mut moves: Vec<(Option<usize>, usize, T)> = Vec::new();
        for j in 0..m {
            for sign in [T::one(), -T::one()] {
                let cand = cur.translated(j, sign * t_step);
                let v = objective(&cand);
                used += 1;
                if v < best {
                    best = v;
                    cur = cand;
                    moves.push((None, j, sign * t_step));
                }
            }
        }
        for i in 0..d {
            for j in 0..m {
                for sign in [T::one(), -T::one()] {
                    let cand = cur.rotated(i, j, sign * a_step);
                    let v = objective(&cand);
                    used += 1;
                    if v < best {
                        best = v;
                        cur = cand;
                        moves.push((Some(i), j, sign * a_step));
                    }
                }
            }
        }
        // pattern moves: replay the successful moves while they keep paying
        let mut scale = T::one();
        while !moves.is_empty() && used < budget {
            let mut cand = cur.clone();
            for &(axis, j, step) in &moves {
                cand = match axis {
                    None => cand.translated(j, scale * step),
                    Some(i) => cand.rotated(i, j, scale * step),
                };
            }
            let v = objective(&cand);
            used += 1;
            if v < best {
                best = v;
                cur = cand;
                scale *= T::lit(2.0);
            } else {
                break;
            }
        }
        // creeping by negligible gains counts as a failed sweep
        if moves.is_empty() || sweep_start - best <= gain_tol * sweep_start {
            t_step *= T::lit(0.5);
            a_step *= T::lit(0.5);
        }
    }
    *evaluations += used;
    (cur, best)
}

/// Multi-start search: principal plane of all points plus principal planes of
/// seeded random half-samples; the two best starts are refined.
pub(crate) fn multistart<T: Scalar>(
    points: &[&[T]],
    weights: Option<&[T]>,
    d: usize,
    r: T,
    objective: &mut dyn FnMut(&FramedPlane<T>) -> T,
) -> SearchOutcome<T> {
    let mut starts = vec![principal_plane(points, weights, d)];
    let m = points.len();
    if m >= 2 * (d + 1) {
        let mut rng = ChaCha8Rng::seed_from_u64(SEARCH_SEED);
        for _ in 0..HALF_SAMPLE_STARTS {
            let idx = index::sample(&mut rng, m, m / 2).into_vec();
            let sub: Vec<&[T]> = idx.iter().map(|&i| points[i]).collect();
            let sw: Option<Vec<T>> = weights.map(|w| idx.iter().map(|&i| w[i]).collect());
            starts.push(principal_plane(&sub, sw.as_deref(), d));
        }
    }
    let mut evaluations = 0usize;
    let mut scored: Vec<(T, usize)> = starts
        .iter()
        .enumerate()
        .map(|(k, s)| {
            evaluations += 1;
            (objective(&FramedPlane::from_plane(s)), k)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut refined: Vec<(FramedPlane<T>, T)> = scored
        .iter()
        .take(2)
        .map(|&(_, k)| refine(&starts[k], r, objective, &mut evaluations))
        .collect();
    let lo = refined.iter().map(|x| x.1).fold(T::infinity(), T::min);
    let hi = refined.iter().map(|x| x.1).fold(T::neg_infinity(), T::max);
    refined.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (best, value) = refined.swap_remove(0);
    SearchOutcome { plane: best.to_plane(), value, evaluations, spread: hi - lo }
}

/// Minimum-width slab of planar points via the convex hull. Returns the
/// center line and the half-width.
pub(crate) fn planar_min_slab<T: Scalar>(points: &[&[T]]) -> (AffinePlane<T>, T) {
    let mut pts: Vec<[T; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal).then(a[1].partial_cmp(&b[1]).unwrap_or(std::cmp::Ordering::Equal))
    });
    pts.dedup();
    if pts.len() == 1 {
        return (AffinePlane::planar_line(pts[0], T::zero()), T::zero());
    }
    let cross = |o: [T; 2], a: [T; 2], b: [T; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[T; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[T; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= T::zero() {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        hull = vec![pts[0], pts[pts.len() - 1]];
    }
    let h = hull.len();
    let mut best = (T::infinity(), T::zero(), [T::zero(); 2], T::zero());
    for e in 0..h {
        let a = hull[e];
        let b = hull[(e + 1) % h];
        let dir = [b[0] - a[0], b[1] - a[1]];
        let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        if len == T::zero() {
            continue;
        }
        let nrm = [-dir[1] / len, dir[0] / len];
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for q in &hull {
            let s = (q[0] - a[0]) * nrm[0] + (q[1] - a[1]) * nrm[1];
            lo = lo.min(s);
            hi = hi.max(s);
        }
        let width = hi - lo;
        if width < best.0 {
            best = (width, dir[1].atan2(dir[0]), a, (lo + hi) * T::lit(0.5));
            best.2 = [a[0] + nrm[0] * best.3, a[1] + nrm[1] * best.3];
        }
    }
    let (width, theta, base, _) = best;
    (AffinePlane::planar_line(base, theta), width * T::lit(0.5))
}
