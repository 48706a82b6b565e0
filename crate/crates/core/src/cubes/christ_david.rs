// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridIndex, PointCloud};
use crate::linalg;
use crate::scalar::Scalar;

/// Largest admissible `rho`. Above `1/3` no inner-ball constant survives
/// the nearest-ancestor construction.
pub const MAX_RHO: f64 = 1.0 / 3.0;

/// Default scale ratio of consecutive generations.
pub const DEFAULT_RHO: f64 = 0.25;

/// Inner-ball constant `c0` such that `B(x_Q, c0 * l(Q))` meets the cloud
/// only inside `Q`, for `l(Q) = 5 rho^k`.
pub fn inner_constant<T: Scalar>(rho: T) -> T {
    let half = T::lit(0.5);
    (half - rho / (T::one() - rho)) / T::lit(5.0)
}

/// Nested maximal separated nets `X_k`, `k = first_generation ..`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct NetHierarchy<T> {
    pub rho: T,
    pub first_generation: i32,
    pub nets: Vec<Vec<usize>>,
}

impl<T: Scalar> NetHierarchy<T> {
    pub fn last_generation(&self) -> i32 {
        self.first_generation + self.nets.len() as i32 - 1
    }

    pub fn net(&self, k: i32) -> Option<&[usize]> {
        let i = k - self.first_generation;
        (i >= 0).then(|| self.nets.get(i as usize).map(|v| v.as_slice())).flatten()
    }

    pub fn scale(&self, k: i32) -> T {
        self.rho.powi(k)
    }
}

fn validate_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho > T::zero()) || !(rho < T::lit(MAX_RHO)) {
        return Err(Error::param("rho", format!("must lie in (0, 1/3), got {rho}")));
    }
    Ok(())
}

/// Coarsest generation at which the whole cloud is a single net point: the
/// first `k` with `rho^k` above the bounding-box diagonal.
fn coarsest_generation<T: Scalar>(cloud: &PointCloud<T>, rho: T, k_max: i32) -> i32 {
    let n = cloud.dim();
    let mut lo = vec![T::infinity(); n];
    let mut hi = vec![T::neg_infinity(); n];
    for p in cloud.points() {
        for a in 0..n {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let diag = linalg::dist(&lo, &hi);
    if diag == T::zero() {
        return k_max.min(0);
    }
    let mut k = (diag.ln() / rho.ln()).floor().to_i32().unwrap_or(0);
    while rho.powi(k) <= diag {
        k -= 1;
    }
    while rho.powi(k + 1) > diag {
        k += 1;
    }
    k.min(k_max)
}

/// Greedy nested nets: `X_k` extends `X_{k-1}` by scanning the cloud in index
/// order and keeping every point at distance `>= rho^k` from the current net.
pub fn build_net_hierarchy<T: Scalar>(cloud: &PointCloud<T>, rho: T, k_max: i32) -> Result<NetHierarchy<T>> {
    if cloud.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    validate_rho(rho)?;
    if rho.powi(k_max) < cloud.resolution() {
        return Err(Error::param(
            "k_max",
            format!("rho^k_max = {} is below the cloud resolution {}", rho.powi(k_max), cloud.resolution()),
        ));
    }
    let k_min = coarsest_generation(cloud, rho, k_max);
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity((k_max - k_min + 1) as usize);
    let mut current: Vec<usize> = Vec::new();
    for k in k_min..=k_max {
        let s = rho.powi(k);
        let mut grid = GridIndex::from_points(cloud.dim(), s, current.iter().map(|&i| (i, cloud.point(i))));
        let mut in_net = vec![false; cloud.len()];
        for &i in &current {
            in_net[i] = true;
        }
        for (i, p) in cloud.points().enumerate() {
            if !in_net[i] && !grid.any_within(p, s) {
                grid.insert(i, p);
                current.push(i);
            }
        }
        nets.push(current.clone());
    }
    Ok(NetHierarchy { rho, first_generation: k_min, nets })
}

/// One Christ-David cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct Cube<T> {
    pub generation: i32,
    /// Cloud index of the center `x_Q`.
    pub center: usize,
    /// `l(Q) = 5 rho^k`.
    pub side: T,
    /// Sorted cloud indices.
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Christ-David hierarchy on a cloud. Generation `first_generation` holds a
/// single root cube; generations refine down to `last_generation`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct CubeForest<T> {
    pub rho: T,
    pub c0: T,
    pub first_generation: i32,
    pub cubes: Vec<Cube<T>>,
    /// Cube ids per generation, ordered by center index in the net.
    pub generations: Vec<Vec<usize>>,
}

impl<T: Scalar> CubeForest<T> {
    pub fn last_generation(&self) -> i32 {
        self.first_generation + self.generations.len() as i32 - 1
    }

    pub fn generation(&self, k: i32) -> &[usize] {
        let i = k - self.first_generation;
        if i < 0 {
            return &[];
        }
        self.generations.get(i as usize).map_or(&[], |v| v.as_slice())
    }

    pub fn cube(&self, id: usize) -> &Cube<T> {
        &self.cubes[id]
    }

    pub fn roots(&self) -> &[usize] {
        self.generation(self.first_generation)
    }

    /// All descendants of `id` including itself, parents before children.
    pub fn descendants(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.cubes[out[i]].children);
            i += 1;
        }
        out
    }

    /// Checks partition, nesting, and the two-ball containment against the
    /// cloud. Returns the first violation found.
    pub fn verify(&self, cloud: &PointCloud<T>) -> std::result::Result<(), String> {
        let n = cloud.len();
        for (gi, ids) in self.generations.iter().enumerate() {
            let k = self.first_generation + gi as i32;
            let mut owner = vec![usize::MAX; n];
            for &id in ids {
                for &m in &self.cubes[id].members {
                    if owner[m] != usize::MAX {
                        return Err(format!("generation {k}: point {m} in two cubes"));
                    }
                    owner[m] = id;
                }
            }
            if let Some(m) = owner.iter().position(|&o| o == usize::MAX) {
                return Err(format!("generation {k}: point {m} in no cube"));
            }
            let inner = self.c0 * T::lit(5.0) * self.rho.powi(k);
            let grid = GridIndex::from_points(cloud.dim(), inner, cloud.points().enumerate());
            for &id in ids {
                let q = &self.cubes[id];
                let x = cloud.point(q.center);
                if q.members.iter().any(|&m| linalg::dist(cloud.point(m), x) >= q.side) {
                    return Err(format!("cube {id}: member outside B(x_Q, l(Q))"));
                }
                if grid.within(x, inner).into_iter().any(|m| owner[m] != id) {
                    return Err(format!("cube {id}: inner ball meets another cube"));
                }
                let mut from_children: Vec<usize> =
                    q.children.iter().flat_map(|&c| self.cubes[c].members.iter().copied()).collect();
                if !q.children.is_empty() {
                    from_children.sort_unstable();
                    if from_children != q.members {
                        return Err(format!("cube {id}: children do not partition it"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the hierarchy from nested nets: every cloud point joins its nearest
/// finest-net point, and every net point of generation `k + 1` hangs under its
/// nearest generation-`k` net point. Ties go to the lowest index.
pub fn build_christ_david<T: Scalar>(cloud: &PointCloud<T>, rho: T, k_max: i32) -> Result<CubeForest<T>> {
    let nets = build_net_hierarchy(cloud, rho, k_max)?;
    let k_min = nets.first_generation;
    let five = T::lit(5.0);
    let gens = nets.nets.len();

    // owner[g][i] = index (within nets[g]) of the net point whose cube holds
    // cloud point i at generation g.
    let mut owner: Vec<Vec<u32>> = vec![Vec::new(); gens];
    let finest = &nets.nets[gens - 1];
    let grid = GridIndex::from_points(cloud.dim(), rho.powi(k_max), finest.iter().map(|&i| (i, cloud.point(i))));
    let mut pos = vec![u32::MAX; cloud.len()];
    for (slot, &i) in finest.iter().enumerate() {
        pos[i] = slot as u32;
    }
    owner[gens - 1] = cloud
        .points()
        .map(|p| pos[grid.nearest(p).expect("nonempty net").0])
        .collect();

    // parent_slot[g][s]: slot in nets[g - 1] of the parent of nets[g][s]
    let mut parent_slot: Vec<Vec<u32>> = vec![Vec::new(); gens];
    for g in (1..gens).rev() {
        let coarse = &nets.nets[g - 1];
        let scale = rho.powi(k_min + g as i32 - 1);
        let grid = GridIndex::from_points(cloud.dim(), scale, coarse.iter().map(|&i| (i, cloud.point(i))));
        for (slot, &i) in coarse.iter().enumerate() {
            pos[i] = slot as u32;
        }
        parent_slot[g] = nets.nets[g]
            .iter()
            .map(|&i| pos[grid.nearest(cloud.point(i)).expect("nonempty net").0])
            .collect();
        owner[g - 1] = owner[g].iter().map(|&s| parent_slot[g][s as usize]).collect();
    }

    let mut cubes = Vec::new();
    let mut generations = Vec::with_capacity(gens);
    for g in 0..gens {
        let k = k_min + g as i32;
        let base = cubes.len();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nets.nets[g].len()];
        for (i, &s) in owner[g].iter().enumerate() {
            members[s as usize].push(i);
        }
        let side = five * rho.powi(k);
        for (slot, m) in members.into_iter().enumerate() {
            let parent = (g > 0).then(|| {
                let prev: &Vec<usize> = &generations[g - 1];
                prev[parent_slot[g][slot] as usize]
            });
            cubes.push(Cube { generation: k, center: nets.nets[g][slot], side, members: m, parent, children: Vec::new() });
        }
        let ids: Vec<usize> = (base..cubes.len()).collect();
        for &id in &ids {
            if let Some(p) = cubes[id].parent {
                cubes[p].children.push(id);
            }
        }
        generations.push(ids);
    }
    Ok(CubeForest { rho, c0: inner_constant(rho), first_generation: k_min, cubes, generations })
}

/// Smallest generation `k` with `rho^k >= h`, i.e. the finest admissible one.
pub fn finest_generation<T: Scalar>(rho: T, h: T) -> i32 {
    let mut k = (h.ln() / rho.ln()).floor().to_i32().unwrap_or(0);
    while rho.powi(k) < h {
        k -= 1;
    }
    while rho.powi(k + 1) >= h {
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_cloud(n: usize, g: f64) -> PointCloud<f64> {
        PointCloud::new((0..n).map(|i| vec![i as f64 * g]).collect(), g).unwrap()
    }

    #[test]
    fn single_point_nets_and_chain() {
        let c = PointCloud::new(vec![vec![0.3f64, 0.7]], 0.01).unwrap();
        let nets = build_net_hierarchy(&c, 0.25, 3).unwrap();
        assert!(nets.nets.iter().all(|x| x == &vec![0]));
        let f = build_christ_david(&c, 0.25, 3).unwrap();
        assert!(f.generations.iter().all(|g| g.len() == 1));
        assert!(f.cubes.iter().all(|q| q.members == vec![0]));
        f.verify(&c).unwrap();
    }

    #[test]
    fn grid_net_spacing_and_maximality() {
        // rho^k = 2g with rho = 1/4, k = 2
        let g = 1.0 / 32.0;
        let c = grid_cloud(200, g);
        let rho = 0.25f64;
        let k = 2;
        let nets = build_net_hierarchy(&c, rho, k).unwrap();
        let s = rho.powi(k);
        let mut xs: Vec<f64> = nets.net(k).unwrap().iter().map(|&i| c.point(i)[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in xs.windows(2) {
            assert!(w[1] - w[0] >= s && w[1] - w[0] < 2.0 * s);
        }
        for p in c.points() {
            assert!(xs.iter().any(|x| (x - p[0]).abs() < s));
        }
        // nested
        for w in nets.nets.windows(2) {
            assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
    }

    #[test]
    fn forest_axioms_on_planar_grid() {
        let mut pts = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                pts.push(vec![i as f64 / 29.0, j as f64 / 29.0]);
            }
        }
        let c = PointCloud::new(pts, 1.0 / 29.0).unwrap();
        let k = finest_generation(0.25, c.resolution());
        let f = build_christ_david(&c, 0.25, k).unwrap();
        assert_eq!(f.roots().len(), 1);
        for ids in &f.generations {
            let total: usize = ids.iter().map(|&i| f.cubes[i].members.len()).sum();
            assert_eq!(total, c.len());
        }
        f.verify(&c).unwrap();
    }

    #[test]
    fn rejects_large_rho_and_fine_k() {
        let c = grid_cloud(10, 0.1);
        assert!(build_net_hierarchy(&c, 0.5, 1).is_err());
        assert!(build_net_hierarchy(&c, 0.25, 5).is_err());
    }
}
