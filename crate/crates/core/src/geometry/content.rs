// SPDX-License-Identifier: Apache-2.0

//! Dyadic-cover Hausdorff content and the Choquet integral built on it.
//!
//! The content of a finite set is the minimum of `sum diam(I)^d` over covers
//! by half-open dyadic cubes `[a, a + s)^n` (grid anchored at the origin) with
//! side `s >= min_scale`. On the dyadic tree this is the exact recursion
//! `cost(I) = min(diam(I)^d, sum over children of cost)`.
//!
//! [`ContentTree`] stores the tree once and supports inserting points one by
//! one, updating costs along a single root path. The Choquet integral inserts
//! points in decreasing order of the integrand, so every superlevel-set
//! content costs `O(depth * 2^n)` instead of a fresh tree pass.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::{ceil_log2, pow2, Scalar};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node<T> {
    parent: u32,
    first_child: u32,
    next_sibling: u32,
    /// diam(I)^d
    weight: T,
    cost: T,
}

/// Dyadic cover tree over a fixed point set, with incremental occupancy.
#[derive(Debug, Clone)]
pub struct ContentTree<T> {
    nodes: Vec<Node<T>>,
    leaf_of: Vec<u32>,
    leaf_exponent: i32,
    full_value: T,
    /// Sum of top-node costs for the occupied set.
    current: T,
}

impl<T: Scalar> ContentTree<T> {
    /// Builds the tree for `points` (each of length `n`) with leaves of side
    /// the smallest power of two `>= min_scale`.
    pub fn new<'a, I>(points: I, n: usize, d: usize, min_scale: T) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        if !(min_scale > T::zero()) {
            return Err(Error::param("min_scale", format!("must be > 0, got {min_scale}")));
        }
        if d == 0 {
            return Err(Error::param("d", "content dimension must be >= 1"));
        }
        let leaf_exponent = ceil_log2(min_scale);
        let sqrt_n = T::from_usize(n).unwrap_or_else(T::one).sqrt();
        let weight_at = |exp: i32| (sqrt_n * pow2::<T>(exp)).powi(d as i32);

        let mut nodes: Vec<Node<T>> = Vec::new();
        let mut leaf_of = Vec::new();
        let mut keys: Vec<Vec<i64>> = Vec::new();
        let mut index: HashMap<Vec<i64>, u32> = HashMap::new();
        let side = pow2::<T>(leaf_exponent);
        let w0 = weight_at(leaf_exponent);
        for p in points {
            debug_assert_eq!(p.len(), n);
            let key: Vec<i64> = p
                .iter()
                .map(|&x| (x / side).floor().to_i64().unwrap_or(i64::MAX))
                .collect();
            let id = *index.entry(key.clone()).or_insert_with(|| {
                nodes.push(Node {
                    parent: NONE,
                    first_child: NONE,
                    next_sibling: NONE,
                    weight: w0,
                    cost: w0,
                });
                keys.push(key);
                (nodes.len() - 1) as u32
            });
            leaf_of.push(id);
        }
        if nodes.is_empty() {
            return Ok(ContentTree {
                nodes,
                leaf_of,
                leaf_exponent,
                full_value: T::zero(),
                current: T::zero(),
            });
        }

        let mut level: Vec<u32> = (0..nodes.len() as u32).collect();
        let mut exp = leaf_exponent;
        loop {
            let total: T = level.iter().map(|&i| nodes[i as usize].cost).sum();
            let parent_weight = weight_at(exp + 1);
            if level.len() == 1 || parent_weight >= total {
                return Ok(ContentTree { nodes, leaf_of, leaf_exponent, full_value: total, current: total });
            }
            let mut parent_index: HashMap<Vec<i64>, u32> = HashMap::new();
            let mut next_level = Vec::new();
            let mut next_keys = Vec::new();
            for (pos, &child) in level.iter().enumerate() {
                let key: Vec<i64> = keys[pos].iter().map(|k| k.div_euclid(2)).collect();
                let pid = match parent_index.get(&key) {
                    Some(&pid) => pid,
                    None => {
                        nodes.push(Node {
                            parent: NONE,
                            first_child: NONE,
                            next_sibling: NONE,
                            weight: parent_weight,
                            cost: T::zero(),
                        });
                        let pid = (nodes.len() - 1) as u32;
                        parent_index.insert(key.clone(), pid);
                        next_level.push(pid);
                        next_keys.push(key);
                        pid
                    }
                };
                nodes[child as usize].parent = pid;
                nodes[child as usize].next_sibling = nodes[pid as usize].first_child;
                nodes[pid as usize].first_child = child;
            }
            for &pid in &next_level {
                let sum = Self::child_sum(&nodes, pid);
                let node = &mut nodes[pid as usize];
                node.cost = node.weight.min(sum);
            }
            level = next_level;
            keys = next_keys;
            exp += 1;
        }
    }

    fn child_sum(nodes: &[Node<T>], id: u32) -> T {
        let mut s = T::zero();
        let mut c = nodes[id as usize].first_child;
        while c != NONE {
            s += nodes[c as usize].cost;
            c = nodes[c as usize].next_sibling;
        }
        s
    }

    /// Content of the full point set the tree was built on.
    pub fn full_value(&self) -> T {
        self.full_value
    }

    /// Side of the leaf cubes.
    pub fn leaf_side(&self) -> T {
        pow2(self.leaf_exponent)
    }

    pub fn len(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_of.is_empty()
    }

    /// Empties the occupied set.
    pub fn reset(&mut self) {
        for node in &mut self.nodes {
            node.cost = T::zero();
        }
        self.current = T::zero();
    }

    /// Marks point `i` (in build order) as present.
    pub fn insert(&mut self, i: usize) {
        let leaf = self.leaf_of[i] as usize;
        if self.nodes[leaf].cost > T::zero() {
            return;
        }
        self.nodes[leaf].cost = self.nodes[leaf].weight;
        let mut id = self.nodes[leaf].parent;
        if id == NONE {
            self.current += self.nodes[leaf].weight;
        }
        while id != NONE {
            let sum = Self::child_sum(&self.nodes, id);
            let node = &mut self.nodes[id as usize];
            let new_cost = node.weight.min(sum);
            if new_cost == node.cost {
                break;
            }
            if node.parent == NONE {
                self.current += new_cost - node.cost;
            }
            node.cost = new_cost;
            id = node.parent;
        }
    }

    /// Content of the currently occupied points.
    pub fn value(&self) -> T {
        self.current
    }

    /// `int_0^inf H({f > t}) t^(p-1) dt` over the tree's points, exact for the
    /// piecewise-constant layer cake. `f` is indexed like the build points.
    pub fn choquet(&mut self, f: &[T], p: T) -> T {
        debug_assert_eq!(f.len(), self.len());
        let mut order: Vec<u32> = (0..f.len() as u32).filter(|&i| f[i as usize] > T::zero()).collect();
        order.sort_unstable_by(|&a, &b| {
            f[b as usize]
                .partial_cmp(&f[a as usize])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        self.choquet_sorted(f, &order, p)
    }

    /// As [`choquet`](Self::choquet) with the positive entries of `f` already
    /// sorted in decreasing order.
    pub fn choquet_sorted(&mut self, f: &[T], order: &[u32], p: T) -> T {
        self.reset();
        let mut total = T::zero();
        let one = T::one();
        let two = one + one;
        let mut k = 0;
        while k < order.len() {
            let t_hi = f[order[k] as usize];
            while k < order.len() && f[order[k] as usize] == t_hi {
                self.insert(order[k] as usize);
                k += 1;
            }
            let t_lo = if k < order.len() { f[order[k] as usize] } else { T::zero() };
            let h = self.value();
            let layer = if p == one {
                t_hi - t_lo
            } else if p == two {
                (t_hi * t_hi - t_lo * t_lo) / two
            } else {
                (t_hi.powf(p) - t_lo.powf(p)) / p
            };
            total += h * layer;
        }
        total
    }
}

/// Dyadic-cover content of a cloud together with its dimensional bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentEstimate<T> {
    pub value: T,
    pub lower_bound: T,
    pub upper_bound: T,
    pub resolution_used: T,
    /// `c_n = n^(d/2)`; `lower_bound = value / c_n`.
    pub bracket_constant: T,
}

/// Bracket constant `n^(d/2)` relating dyadic covers to arbitrary covers.
pub fn bracket_constant<T: Scalar>(n: usize, d: usize) -> T {
    T::from_usize(n).unwrap_or_else(T::one).powf(T::lit(d as f64 / 2.0))
}

/// Minimum of `sum diam(I)^d` over dyadic covers by cubes of side `>= min_scale`.
pub fn hausdorff_content<T: Scalar>(cloud: &PointCloud<T>, d: usize, min_scale: T) -> Result<ContentEstimate<T>> {
    check_min_scale(cloud, min_scale)?;
    let c = bracket_constant::<T>(cloud.dim(), d);
    if cloud.is_empty() {
        return Ok(ContentEstimate {
            value: T::zero(),
            lower_bound: T::zero(),
            upper_bound: T::zero(),
            resolution_used: min_scale,
            bracket_constant: c,
        });
    }
    let tree = ContentTree::new(cloud.points(), cloud.dim(), d, min_scale)?;
    let value = tree.full_value();
    Ok(ContentEstimate {
        value,
        lower_bound: (value / c).min(value),
        upper_bound: value,
        resolution_used: min_scale,
        bracket_constant: c,
    })
}

fn check_min_scale<T: Scalar>(cloud: &PointCloud<T>, min_scale: T) -> Result<()> {
    if !(min_scale >= cloud.resolution()) {
        return Err(Error::param(
            "min_scale",
            format!("must be >= cloud resolution {}, got {min_scale}", cloud.resolution()),
        ));
    }
    Ok(())
}

/// Choquet integral `int f^p dH^d_inf` over the cloud, evaluated as the exact
/// layer cake over the distinct values of `f`.
pub fn choquet_integral<T: Scalar>(cloud: &PointCloud<T>, f: &[T], d: usize, p: T, min_scale: T) -> Result<T> {
    check_min_scale(cloud, min_scale)?;
    if f.len() != cloud.len() {
        return Err(Error::DimensionMismatch { expected: cloud.len(), got: f.len() });
    }
    if !(p >= T::one()) {
        return Err(Error::param("p", format!("need p >= 1, got {p}")));
    }
    if let Some(bad) = f.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
        return Err(Error::param("f", format!("values must be finite and >= 0, got {bad}")));
    }
    if cloud.is_empty() {
        return Ok(T::zero());
    }
    let mut tree = ContentTree::new(cloud.points(), cloud.dim(), d, min_scale)?;
    Ok(tree.choquet(f, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(n: usize) -> PointCloud<f64> {
        let pts = (0..=n).map(|i| vec![i as f64 / n as f64]).collect();
        PointCloud::new(pts, 1.0 / n as f64).unwrap()
    }

    /// Independent oracle: recursive DP from scratch over the occupied
    /// dyadic cubes, climbing until a single cube or diam^d exceeds the
    /// running total.
    fn brute_content(points: &[Vec<f64>], d: usize, min_scale: f64) -> f64 {
        let n = points[0].len();
        let e0 = min_scale.log2().ceil() as i32;
        fn go(points: &[&Vec<f64>], e: i32, n: usize, d: usize, e0: i32, anchor: &[i64]) -> f64 {
            let side = 2f64.powi(e);
            let w = ((n as f64).sqrt() * side).powi(d as i32);
            if e == e0 {
                return w;
            }
            let mut groups: std::collections::BTreeMap<Vec<i64>, Vec<&Vec<f64>>> = Default::default();
            let child = 2f64.powi(e - 1);
            for p in points {
                let key: Vec<i64> = p.iter().map(|x| (x / child).floor() as i64).collect();
                groups.entry(key).or_default().push(p);
            }
            let _ = anchor;
            let s: f64 = groups.iter().map(|(k, g)| go(g, e - 1, n, d, e0, k)).sum();
            w.min(s)
        }
        // Start high enough that the single top cube never wins below it.
        let refs: Vec<&Vec<f64>> = points.iter().collect();
        let top = e0 + 60;
        let side = 2f64.powi(top);
        let mut groups: std::collections::BTreeMap<Vec<i64>, Vec<&Vec<f64>>> = Default::default();
        for p in &refs {
            let key: Vec<i64> = p.iter().map(|x| (x / side).floor() as i64).collect();
            groups.entry(key).or_default().push(p);
        }
        groups.iter().map(|(k, g)| go(g, top, n, d, e0, k)).sum()
    }

    #[test]
    fn unit_segment_content_near_one() {
        let c = segment(256);
        let est = hausdorff_content(&c, 1, c.resolution()).unwrap();
        // the point x = 1 needs one extra tiny cube
        assert!((est.value - (1.0 + 1.0 / 256.0)).abs() < 1e-12);
        assert!(est.value <= 2.0 && est.value >= 0.5);
    }

    #[test]
    fn single_point_content_is_one_leaf() {
        let c = PointCloud::new(vec![vec![0.3f64, 0.7]], 1e-3).unwrap();
        let est = hausdorff_content(&c, 1, 1e-3).unwrap();
        // leaf side is the dyadic ceiling of min_scale, at most twice it
        assert!(est.value <= 2f64.sqrt() * 2.0 * 1e-3);
        let mut c2 = c.clone();
        c2.set_resolution(1e-6).unwrap();
        let small = hausdorff_content(&c2, 1, 1e-6).unwrap();
        assert!(small.value < 3e-6);
    }

    #[test]
    fn circle_bracket_contains_diameter() {
        let m = 2000;
        let pts = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) * std::f64::consts::TAU / m as f64;
                vec![0.5 + 0.5 * t.cos(), 0.5 + 0.5 * t.sin()]
            })
            .collect();
        let c = PointCloud::new(pts, 0.002).unwrap();
        let est = hausdorff_content(&c, 1, 0.002).unwrap();
        assert!(est.lower_bound <= 1.0 + 1e-12 && 1.0 <= est.upper_bound + 1e-12, "{est:?}");
    }

    #[test]
    fn tree_matches_brute_force() {
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.137;
                vec![(t * 3.1).sin() * 0.9, (t * 1.7).cos() * 0.4 - 0.2]
            })
            .collect();
        let c = PointCloud::new(pts.clone(), 0.01).unwrap();
        for &s in &[0.01, 0.05, 0.3] {
            let got = hausdorff_content(&c, 1, s).unwrap().value;
            let want = brute_content(&pts, 1, s);
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn incremental_matches_fresh_build() {
        let pts: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.71).fract(), (i as f64 * 0.29).fract()]).collect();
        let c = PointCloud::new(pts.clone(), 0.01).unwrap();
        let mut tree = ContentTree::new(c.points(), 2, 1, 0.01).unwrap();
        tree.reset();
        for k in 0..pts.len() {
            tree.insert(k);
            let sub = c.subset(&(0..=k).collect::<Vec<_>>());
            let fresh = hausdorff_content(&sub, 1, 0.01).unwrap().value;
            assert!((tree.value() - fresh).abs() <= 1e-12 * fresh, "k={k}");
        }
    }

    #[test]
    fn choquet_examples() {
        let c = segment(64);
        let h = 0.5 / 64.0;
        let mut c = c;
        c.set_resolution(h).unwrap();
        let zeros = vec![0.0; c.len()];
        assert_eq!(choquet_integral(&c, &zeros, 1, 2.0, h).unwrap(), 0.0);

        let content = hausdorff_content(&c, 1, h).unwrap().value;
        let consts = vec![0.7; c.len()];
        for &p in &[1.0, 1.5, 3.0] {
            let got = choquet_integral(&c, &consts, 1, p, h).unwrap();
            let want = content * 0.7f64.powf(p) / p;
            assert!((got - want).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn choquet_half_segment() {
        // f = 1 on [0, 1/2), 0 elsewhere; content of [0, 1/2) is exactly 1/2.
        let n = 64;
        let pts = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let c = PointCloud::new(pts, 1.0 / n as f64).unwrap();
        let f: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect();
        let got = choquet_integral(&c, &f, 1, 2.0, 1.0 / n as f64).unwrap();
        assert!((got - 0.25).abs() < 1e-12, "{got}");
    }

    #[test]
    fn choquet_errors() {
        let c = segment(8);
        let h = c.resolution();
        assert!(choquet_integral(&c, &[-1.0; 9], 1, 1.0, h).is_err());
        assert!(choquet_integral(&c, &[1.0; 9], 1, 0.5, h).is_err());
        assert!(choquet_integral(&c, &[1.0; 9], 1, 1.0, h / 2.0).is_err());
    }

    #[test]
    fn content_scales_exactly_under_dyadic_dilation() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let c = PointCloud::new(pts, 0.01).unwrap();
        let base = hausdorff_content(&c, 1, 0.01).unwrap().value;
        let big = hausdorff_content(&c.dilate(4.0), 1, 0.04).unwrap().value;
        assert_eq!(big, 4.0 * base);
    }
}
