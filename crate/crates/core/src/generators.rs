// SPDX-License-Identifier: Apache-2.0

//! Test sets with known dimension and flatness: four-corner Cantor sets,
//! Koch-type curves, random Lipschitz graphs, segments, arcs, disks and
//! products with an interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::scalar::Scalar;

/// Depth-`m` four-corner Cantor cloud: the `4^m` lower-left corners of the
/// generation-`m` cells under the maps `x -> lambda x + (1 - lambda) c`,
/// `c` a corner of the unit square.
pub fn cantor4<T: Scalar>(lambda: T, depth: u32) -> Result<PointCloud<T>> {
    if !(lambda > T::zero() && lambda < T::lit(0.5)) {
        return Err(Error::param("lambda", format!("must lie in (0, 1/2), got {lambda}")));
    }
    if depth < 1 {
        return Err(Error::param("depth", "must be >= 1".to_string()));
    }
    let shift = T::one() - lambda;
    let mut pts: Vec<[T; 2]> = vec![[T::zero(), T::zero()]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for c in [[0, 0], [1, 0], [0, 1], [1, 1]] {
            let off = [shift * T::lit(c[0] as f64), shift * T::lit(c[1] as f64)];
            next.extend(pts.iter().map(|p| [lambda * p[0] + off[0], lambda * p[1] + off[1]]));
        }
        pts = next;
    }
    let h = lambda.powi(depth as i32) * T::lit(2.0).sqrt();
    PointCloud::from_flat(2, pts.into_iter().flatten().collect(), h)
}

/// Koch-type curve from `(0, 0)` to `(1, 0)`: each segment is replaced by
/// four copies scaled by `ratio`, the middle two forming a tent with base
/// angle `acos((1 - 2 ratio) / (2 ratio))`. Returns the `4^m + 1` vertices.
pub fn koch<T: Scalar>(ratio: T, depth: u32) -> Result<PointCloud<T>> {
    if !(ratio >= T::lit(0.25) && ratio < T::lit(0.5)) {
        return Err(Error::param("ratio", format!("must lie in [1/4, 1/2), got {ratio}")));
    }
    if depth < 1 {
        return Err(Error::param("depth", "must be >= 1".to_string()));
    }
    let two = T::lit(2.0);
    let cos_a = ((T::one() - two * ratio) / (two * ratio)).min(T::one());
    let sin_a = (T::one() - cos_a * cos_a).max(T::zero()).sqrt();
    let mut pts: Vec<[T; 2]> = vec![[T::zero(), T::zero()], [T::one(), T::zero()]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let v = [b[0] - a[0], b[1] - a[1]];
            let p1 = [a[0] + ratio * v[0], a[1] + ratio * v[1]];
            let rot = [cos_a * v[0] - sin_a * v[1], sin_a * v[0] + cos_a * v[1]];
            let p2 = [p1[0] + ratio * rot[0], p1[1] + ratio * rot[1]];
            let p3 = [b[0] - ratio * v[0], b[1] - ratio * v[1]];
            next.extend_from_slice(&[a, p1, p2, p3]);
        }
        next.push(*pts.last().expect("nonempty"));
        pts = next;
    }
    let h = ratio.powi(depth as i32);
    PointCloud::from_flat(2, pts.into_iter().flatten().collect(), h)
}

/// `count` equally spaced samples over `[0, 1]` of a random function with
/// Lipschitz constant `<= lipschitz`, built by clamped midpoint displacement
/// on a dyadic grid and linear interpolation. The constant is re-checked
/// over all sample pairs before returning.
pub fn lipschitz_graph<T: Scalar>(lipschitz: T, count: usize, seed: u64) -> Result<PointCloud<T>> {
    if !(lipschitz >= T::zero()) || !lipschitz.is_finite() {
        return Err(Error::param("L", format!("must be finite and >= 0, got {lipschitz}")));
    }
    if count < 2 {
        return Err(Error::param("N", "need at least 2 samples".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = T::lit(0.5);
    let mut ys: Vec<T> = vec![T::zero(), lipschitz * half * T::lit(rng.gen_range(-1.0..=1.0))];
    let mut h = T::one();
    while ys.len() < 2 * count {
        let mut next = Vec::with_capacity(ys.len() * 2);
        for w in ys.windows(2) {
            let (a, b) = (w[0], w[1]);
            let reach = lipschitz * h * half;
            let lo = a.max(b) - reach;
            let hi = a.min(b) + reach;
            let mid = (a + b) * half + reach * T::lit(rng.gen_range(-1.0..=1.0));
            next.push(a);
            next.push(mid.max(lo).min(hi));
        }
        next.push(*ys.last().expect("nonempty"));
        ys = next;
        h *= half;
    }
    let fine = T::from_usize(ys.len() - 1).expect("small");
    let step = T::one() / T::from_usize(count - 1).expect("small");
    let mut xs: Vec<T> = Vec::with_capacity(count);
    let mut vals: Vec<T> = Vec::with_capacity(count);
    for i in 0..count {
        let x = T::from_usize(i).expect("small") * step;
        let t = x * fine;
        let j = t.floor().to_usize().unwrap_or(0).min(ys.len() - 2);
        let frac = t - T::from_usize(j).expect("small");
        xs.push(x);
        vals.push(ys[j] + (ys[j + 1] - ys[j]) * frac);
    }
    // exhaustive check; rounding can only push a slope past L by ulps
    let mut worst = T::zero();
    for i in 0..count {
        for j in (i + 1)..count {
            worst = worst.max((vals[j] - vals[i]).abs() / (xs[j] - xs[i]));
        }
    }
    if worst > lipschitz {
        let s = lipschitz / worst;
        for v in vals.iter_mut() {
            *v *= s;
        }
    }
    let res = step * (T::one() + lipschitz * lipschitz).sqrt();
    let coords = xs.into_iter().zip(vals).flat_map(|(x, y)| [x, y]).collect();
    PointCloud::from_flat(2, coords, res)
}

/// Largest `|dy| / |dx|` over all pairs of a planar graph cloud.
pub fn lipschitz_constant<T: Scalar>(cloud: &PointCloud<T>) -> T {
    let mut worst = T::zero();
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        for j in (i + 1)..cloud.len() {
            let q = cloud.point(j);
            let dx = (q[0] - p[0]).abs();
            if dx > T::zero() {
                worst = worst.max((q[1] - p[1]).abs() / dx);
            }
        }
    }
    worst
}

/// `cloud × [0, 1]` sampled at `samples` equally spaced heights.
pub fn product_with_segment<T: Scalar>(cloud: &PointCloud<T>, samples: usize) -> Result<PointCloud<T>> {
    if samples < 2 {
        return Err(Error::param("samples", "need at least 2".to_string()));
    }
    let n = cloud.dim();
    let step = T::one() / T::from_usize(samples - 1).expect("small");
    let mut coords = Vec::with_capacity(cloud.len() * samples * (n + 1));
    for p in cloud.points() {
        for j in 0..samples {
            coords.extend_from_slice(p);
            coords.push(T::from_usize(j).expect("small") * step);
        }
    }
    let half = step * T::lit(0.5);
    let h = (cloud.resolution() * cloud.resolution() + half * half).sqrt();
    PointCloud::from_flat(n + 1, coords, h)
}

/// `count` equally spaced samples of `[0, 1] × {0}^(n-1)`; resolution is the
/// spacing.
pub fn segment<T: Scalar>(ambient_dim: usize, count: usize) -> Result<PointCloud<T>> {
    if ambient_dim < 1 || count < 2 {
        return Err(Error::param("count", "need ambient_dim >= 1 and count >= 2".to_string()));
    }
    let step = T::one() / T::from_usize(count - 1).expect("small");
    let mut coords = vec![T::zero(); ambient_dim * count];
    for i in 0..count {
        coords[i * ambient_dim] = T::from_usize(i).expect("small") * step;
    }
    PointCloud::from_flat(ambient_dim, coords, step)
}

/// `count` samples of the arc of the circle of `radius` about the origin over
/// angles `[0, span]`.
pub fn arc<T: Scalar>(radius: T, span: T, count: usize) -> Result<PointCloud<T>> {
    if !(radius > T::zero()) || !(span > T::zero()) || count < 2 {
        return Err(Error::param("arc", "need radius > 0, span > 0, count >= 2".to_string()));
    }
    let step = span / T::from_usize(count - 1).expect("small");
    let coords = (0..count)
        .flat_map(|i| {
            let t = step * T::from_usize(i).expect("small");
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    PointCloud::from_flat(2, coords, radius * step)
}

/// Square-lattice samples of the closed disk of `radius` about the origin.
pub fn disk<T: Scalar>(radius: T, spacing: T) -> Result<PointCloud<T>> {
    if !(radius > T::zero()) || !(spacing > T::zero()) {
        return Err(Error::param("disk", "need radius > 0 and spacing > 0".to_string()));
    }
    let k = (radius / spacing).floor().to_i64().unwrap_or(0);
    let mut coords = Vec::new();
    for i in -k..=k {
        for j in -k..=k {
            let (x, y) = (T::from_i64(i).expect("small") * spacing, T::from_i64(j).expect("small") * spacing);
            if x * x + y * y <= radius * radius {
                coords.push(x);
                coords.push(y);
            }
        }
    }
    PointCloud::from_flat(2, coords, spacing)
}

/// Declarative generator description, as read by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Cantor4 { lambda: f64, depth: u32 },
    Koch { ratio: f64, depth: u32 },
    LipschitzGraph { lipschitz: f64, count: usize, seed: u64 },
    Segment { ambient_dim: usize, count: usize },
    Arc { radius: f64, span: f64, count: usize },
    Disk { radius: f64, spacing: f64 },
    Product { base: Box<GeneratorSpec>, samples: usize },
}

/// Known properties of a generated set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Similarity or box dimension of the idealised set.
    pub dimension: f64,
    /// Uniformly non-flat at all scales (`None` when it depends on parameters).
    pub non_flat: Option<bool>,
    /// Qualitative projection class.
    pub projections: String,
}

impl GeneratorSpec {
    pub fn generate<T: Scalar>(&self) -> Result<PointCloud<T>> {
        match self {
            GeneratorSpec::Cantor4 { lambda, depth } => cantor4(T::lit(*lambda), *depth),
            GeneratorSpec::Koch { ratio, depth } => koch(T::lit(*ratio), *depth),
            GeneratorSpec::LipschitzGraph { lipschitz, count, seed } => lipschitz_graph(T::lit(*lipschitz), *count, *seed),
            GeneratorSpec::Segment { ambient_dim, count } => segment(*ambient_dim, *count),
            GeneratorSpec::Arc { radius, span, count } => arc(T::lit(*radius), T::lit(*span), *count),
            GeneratorSpec::Disk { radius, spacing } => disk(T::lit(*radius), T::lit(*spacing)),
            GeneratorSpec::Product { base, samples } => product_with_segment(&base.generate()?, *samples),
        }
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let gt = |dimension: f64, non_flat: Option<bool>, projections: &str| GroundTruth {
            dimension,
            non_flat,
            projections: projections.to_string(),
        };
        match self {
            GeneratorSpec::Cantor4 { lambda, .. } => {
                let dim = 4f64.ln() / (1.0 / lambda).ln();
                let class = if dim > 1.0 { "big projections" } else { "purely unrectifiable at dimension 1" };
                gt(dim, Some(true), class)
            }
            GeneratorSpec::Koch { ratio, .. } => {
                gt(4f64.ln() / (1.0 / ratio).ln(), Some(*ratio > 0.25), "big projections")
            }
            GeneratorSpec::LipschitzGraph { .. } => gt(1.0, None, "big projections"),
            GeneratorSpec::Segment { .. } | GeneratorSpec::Arc { .. } => gt(1.0, Some(false), "big projections"),
            GeneratorSpec::Disk { .. } => gt(2.0, Some(false), "big projections"),
            GeneratorSpec::Product { base, .. } => {
                let b = base.ground_truth();
                gt(b.dimension + 1.0, b.non_flat, &b.projections)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_counts_and_self_similarity() {
        let c1 = cantor4(0.25f64, 1).unwrap();
        assert_eq!(c1.len(), 4);
        let pts: Vec<&[f64]> = c1.points().collect();
        assert!(pts.contains(&&[0.75, 0.75][..]) && pts.contains(&&[0.0, 0.0][..]));
        let c3 = cantor4(0.25f64, 3).unwrap();
        let c4 = cantor4(0.25f64, 4).unwrap();
        assert_eq!(c4.len(), 256);
        // images of the depth-3 set under the four maps give the depth-4 set
        let mut imgs: Vec<[u64; 2]> = Vec::new();
        for c in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
            for p in c3.points() {
                imgs.push([(0.25 * p[0] + 0.75 * c[0]).to_bits(), (0.25 * p[1] + 0.75 * c[1]).to_bits()]);
            }
        }
        let mut orig: Vec<[u64; 2]> = c4.points().map(|p| [p[0].to_bits(), p[1].to_bits()]).collect();
        imgs.sort();
        orig.sort();
        assert_eq!(imgs, orig);
        assert!(cantor4(0.5f64, 2).is_err());
    }

    #[test]
    fn koch_vertices() {
        let k = koch(1.0f64 / 3.0, 3).unwrap();
        assert_eq!(k.len(), 65);
        let apex = k.point(32);
        assert!((apex[0] - 0.5).abs() < 1e-12 && (apex[1] - 3f64.sqrt() / 6.0).abs() < 1e-12);
        let flat = koch(0.25f64, 2).unwrap();
        assert!(flat.points().all(|p| p[1].abs() < 1e-15));
        assert!(koch(0.2f64, 2).is_err());
        assert!((GeneratorSpec::Koch { ratio: 1.0 / 3.0, depth: 3 }.ground_truth().dimension - 1.2619).abs() < 1e-4);
    }

    #[test]
    fn lipschitz_bound_holds() {
        for l in [0.0, 0.5, 2.0] {
            let g = lipschitz_graph(l, 300, 7).unwrap();
            assert_eq!(g.len(), 300);
            assert!(lipschitz_constant(&g) <= l);
        }
        assert!(lipschitz_graph(0.0f64, 50, 1).unwrap().points().all(|p| p[1] == 0.0));
        assert_eq!(lipschitz_graph(0.5f64, 64, 9).unwrap(), lipschitz_graph(0.5f64, 64, 9).unwrap());
    }

    #[test]
    fn products_and_simple_sets() {
        let s = segment::<f64>(2, 11).unwrap();
        let sq = product_with_segment(&s, 5).unwrap();
        assert_eq!(sq.len(), 55);
        assert_eq!(sq.dim(), 3);
        let spec = GeneratorSpec::Product { base: Box::new(GeneratorSpec::Cantor4 { lambda: 0.3, depth: 2 }), samples: 3 };
        assert!((spec.ground_truth().dimension - 2.1514).abs() < 1e-4);
        let a = arc(1.0f64, 1.0, 20).unwrap();
        assert!(a.points().all(|p| (p[0].hypot(p[1]) - 1.0).abs() < 1e-12));
        let d = disk(1.0f64, 0.1).unwrap();
        assert!(d.len() > 300);
    }
}
