// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::beta::beta_content_p;
use crate::cubes::{dyadic_level, skeleton_union, Cube, DyadicCube, FrostmanNode, FrostmanTree};
use crate::error::{Error, Result};
use crate::geometry::{Ball, GridIndex, PointCloud};
use crate::scalar::{self, Scalar};

/// Outcome of a non-flatness scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct NonflatnessScan<T> {
    /// Minimum of `beta^{d,1}` over the scanned balls.
    pub beta0: T,
    pub radii: Vec<T>,
    pub balls: usize,
    /// Ball attaining the minimum.
    pub worst: Ball<T>,
}

/// Greedy net of the cloud in index order: a point joins when no chosen
/// point lies strictly closer than `sep`.
fn greedy_net<T: Scalar>(cloud: &PointCloud<T>, sep: T) -> Vec<usize> {
    let mut grid = GridIndex::new(cloud.dim(), sep);
    let mut out = Vec::new();
    for (i, p) in cloud.points().enumerate() {
        if !grid.any_within(p, sep) {
            grid.insert(i, p);
            out.push(i);
        }
    }
    out
}

/// `min beta^{d,1}(B(x, r))` over radii `r_max, r_max / 2, ... >= r_min`
/// and centers on a greedy `r / ball_density` net of the cloud.
pub fn nonflatness_scan<T: Scalar>(
    cloud: &PointCloud<T>,
    d: usize,
    scale_range: [T; 2],
    ball_density: usize,
) -> Result<NonflatnessScan<T>> {
    let [r_min, r_max] = scale_range;
    if cloud.is_empty() {
        return Err(Error::Empty("cloud"));
    }
    if !(r_min > T::zero()) || !(r_max >= r_min) {
        return Err(Error::param("scale_range", format!("empty range [{r_min}, {r_max}]")));
    }
    let floor = T::lit(4.0) * cloud.resolution();
    if r_min < floor {
        return Err(Error::param("scale_range", format!("r_min = {r_min} is below 4 * resolution = {floor}")));
    }
    if ball_density == 0 {
        return Err(Error::param("ball_density", "must be >= 1".to_string()));
    }
    let density = T::from_usize(ball_density).unwrap_or_else(T::one);
    let mut radii = Vec::new();
    let mut r = r_max;
    while r >= r_min {
        radii.push(r);
        r *= T::lit(0.5);
    }
    let mut best: Option<(T, Ball<T>)> = None;
    let mut balls = 0;
    for &r in &radii {
        for i in greedy_net(cloud, r / density) {
            let ball = Ball::new(cloud.point(i).to_vec(), r)?;
            let b = beta_content_p(cloud, &ball, d, T::one(), cloud.resolution())?.value;
            balls += 1;
            if best.as_ref().is_none_or(|(v, _)| b < *v) {
                best = Some((b, ball));
            }
        }
    }
    let (beta0, worst) = best.ok_or(Error::Empty("ball family"))?;
    Ok(NonflatnessScan { beta0, radii, balls, worst })
}

/// `(side, occupied dyadic cells)` for every dyadic side in `scale_range`.
pub fn box_counts<T: Scalar>(cloud: &PointCloud<T>, scale_range: [T; 2]) -> Result<Vec<(T, usize)>> {
    let [s_min, s_max] = scale_range;
    if !(s_min > T::zero()) || !(s_max >= s_min) {
        return Err(Error::param("scale_range", format!("degenerate range [{s_min}, {s_max}]")));
    }
    if s_min < cloud.resolution() {
        return Err(Error::param(
            "scale_range",
            format!("s_min = {s_min} is below the resolution {}", cloud.resolution()),
        ));
    }
    let j_lo = -scalar::floor_log2(s_max);
    let j_hi = -scalar::ceil_log2(s_min);
    if j_hi - j_lo < 2 {
        return Err(Error::param("scale_range", format!("[{s_min}, {s_max}] spans fewer than 3 dyadic scales")));
    }
    Ok((j_lo..=j_hi)
        .map(|j| {
            let cells: BTreeSet<DyadicCube> = cloud.points().map(|p| DyadicCube::containing(p, j)).collect();
            (scalar::pow2(-j), cells.len())
        })
        .collect())
}

/// Least-squares slope of `log N(s)` against `log(1/s)` over dyadic sides.
pub fn box_dimension<T: Scalar>(cloud: &PointCloud<T>, scale_range: [T; 2]) -> Result<T> {
    let counts = box_counts(cloud, scale_range)?;
    Ok(loglog_slope(&counts))
}

fn loglog_slope<T: Scalar>(counts: &[(T, usize)]) -> T {
    let xs: Vec<T> = counts.iter().map(|(s, _)| -s.ln()).collect();
    let ys: Vec<T> = counts.iter().map(|(_, c)| T::from_usize(*c).unwrap_or_else(T::one).ln()).collect();
    let m = T::from_usize(xs.len()).unwrap_or_else(T::one);
    let mx = xs.iter().copied().sum::<T>() / m;
    let my = ys.iter().copied().sum::<T>() / m;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// The cubes of `parent_level` whose half-open region can meet a closed face
/// of `q`: its own ancestor and the ancestors of its upper neighbours.
fn touched_parents(q: &DyadicCube, parent_level: i32) -> Vec<DyadicCube> {
    let n = q.dim();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let anchor = q.anchor.iter().enumerate().map(|(i, a)| a + i64::from(mask >> i & 1)).collect();
        out.insert(DyadicCube { level: q.level, anchor }.ancestor(parent_level));
    }
    out.into_iter().collect()
}

/// Builds the nested net construction on a top cube `r`: at level `j` every
/// node `I` receives a maximal `2^-k`-separated net of `E_{R,k} ∩ I`, with
/// `k = N0 + j kappa`, `E_{R,k}` the `d`-skeleton of the side-`c 2^-k` cubes
/// meeting `R`, and `N0 = floor(-log2 diam R)`. Children are the side-`2^-k`
/// cubes that contain a net point and meet `R`; mass splits equally among
/// them.
///
/// Net points are chosen greedily, lower corners of the skeleton cubes first,
/// then the remaining face samples in sorted order.
pub fn bj_net_recursion<T: Scalar>(
    cloud: &PointCloud<T>,
    r: &Cube<T>,
    kappa: u32,
    levels: u32,
    c: T,
    d: usize,
) -> Result<FrostmanTree<T>> {
    if kappa == 0 {
        return Err(Error::param("kappa", "must be >= 1".to_string()));
    }
    if levels == 0 {
        return Err(Error::param("levels", "must be >= 1".to_string()));
    }
    let n = cloud.dim();
    if d < 1 || d >= n {
        return Err(Error::param("d", format!("need 1 <= d <= n - 1, got d = {d}, n = {n}")));
    }
    if r.members.iter().any(|&i| i >= cloud.len()) || r.members.is_empty() {
        return Err(Error::param("r", "cube members do not index the cloud".to_string()));
    }
    let members = cloud.subset(&r.members);
    let diam = members.diameter();
    if !(diam > T::zero()) {
        return Err(Error::param("r", "top cube has zero diameter".to_string()));
    }
    let n0 = -scalar::ceil_log2(diam);
    let k_last = n0 + (levels * kappa) as i32;
    let finest: T = c * scalar::pow2(-k_last);
    dyadic_level(0, c)?;
    if finest < cloud.resolution() {
        return Err(Error::param(
            "levels",
            format!("finest skeleton side {finest} is below the resolution {}", cloud.resolution()),
        ));
    }

    let mut tree = FrostmanTree { nodes: Vec::new(), levels: Vec::new() };
    tree.nodes.push(FrostmanNode {
        level: 0,
        cube: None,
        side: scalar::pow2(-n0),
        parent: None,
        children: Vec::new(),
        net_size: 0,
        mass: T::one(),
    });
    tree.levels.push(vec![0]);

    for j in 1..=levels {
        let k = n0 + (j * kappa) as i32;
        let parent_level = k - kappa as i32;
        let skel_level = dyadic_level(k, c)?;
        let sep: T = scalar::pow2(-k);
        let skel_cubes: BTreeSet<DyadicCube> = members.points().map(|p| DyadicCube::containing(p, skel_level)).collect();
        let meets_r: BTreeSet<DyadicCube> = members.points().map(|p| DyadicCube::containing(p, k)).collect();

        // skeleton cubes grouped by the parent cells their faces can reach
        let mut groups: BTreeMap<Option<DyadicCube>, Vec<DyadicCube>> = BTreeMap::new();
        for q in &skel_cubes {
            if j == 1 {
                groups.entry(None).or_default().push(q.clone());
            } else {
                for p in touched_parents(q, parent_level) {
                    groups.entry(Some(p)).or_default().push(q.clone());
                }
            }
        }

        let parents = tree.levels[j as usize - 1].clone();
        let mut next = Vec::new();
        for pid in parents {
            let region = tree.nodes[pid].cube.clone();
            let cubes = match groups.get(&region) {
                Some(v) => v,
                None => {
                    return Err(Error::Numerical(format!(
                        "level {j}: node {pid} meets no skeleton cube (Card(A) = 0)"
                    )))
                }
            };
            let inside = |x: &[T]| region.as_ref().is_none_or(|reg| reg.contains(x));
            let skeleton = skeleton_union(cubes, d, finest * T::lit(0.5))?;
            let corners: Vec<Vec<T>> = cubes
                .iter()
                .filter(|q| region.as_ref().is_none_or(|reg| q.ancestor(parent_level) == *reg))
                .map(|q| q.lower_corner::<T>())
                .collect();
            let mut cand: Vec<&[T]> = corners.iter().map(|v| v.as_slice()).collect();
            cand.extend(skeleton.cloud.points().filter(|x| inside(x)));
            let mut grid = GridIndex::new(n, sep);
            let mut net_size = 0usize;
            let mut child_cubes = BTreeSet::new();
            for (i, x) in cand.into_iter().enumerate() {
                if !grid.any_within(x, sep) {
                    grid.insert(i, x);
                    net_size += 1;
                    let q = DyadicCube::containing(x, k);
                    if meets_r.contains(&q) {
                        child_cubes.insert(q);
                    }
                }
            }
            if net_size == 0 || child_cubes.is_empty() {
                return Err(Error::Numerical(format!(
                    "level {j}: node {pid} has net size {net_size} and {} children meeting R",
                    child_cubes.len()
                )));
            }
            let share = tree.nodes[pid].mass / T::from_usize(child_cubes.len()).unwrap_or_else(T::one);
            tree.nodes[pid].net_size = net_size;
            for q in child_cubes {
                let id = tree.nodes.len();
                tree.nodes.push(FrostmanNode {
                    level: j as usize,
                    cube: Some(q),
                    side: sep,
                    parent: Some(pid),
                    children: Vec::new(),
                    net_size: 0,
                    mass: share,
                });
                tree.nodes[pid].children.push(id);
                next.push(id);
            }
        }
        tree.levels.push(next);
    }
    Ok(tree)
}

fn survivors<T: Scalar>(tree: &FrostmanTree<T>, b: usize) -> Vec<bool> {
    let mut alive = vec![false; tree.nodes.len()];
    let last = tree.levels.len() - 1;
    for (lvl, ids) in tree.levels.iter().enumerate().rev() {
        for &id in ids {
            alive[id] = lvl == last || tree.nodes[id].children.iter().filter(|&&c| alive[c]).count() >= b;
        }
    }
    alive
}

/// The subtree in which every internal node keeps at least `b` children
/// that themselves survive to the last level. Mass is re-split equally among
/// surviving children. `b = 1` returns the whole tree.
pub fn prune_to_branching<T: Scalar>(tree: &FrostmanTree<T>, b: usize) -> Result<FrostmanTree<T>> {
    if tree.depth() < 1 {
        return Err(Error::param("tree", "needs at least two levels".to_string()));
    }
    let alive = survivors(tree, b.max(1));
    if !alive[0] {
        return Err(Error::Empty("surviving subtree"));
    }
    let mut out = FrostmanTree { nodes: Vec::new(), levels: vec![vec![0]] };
    let mut root = tree.nodes[0].clone();
    root.children.clear();
    root.mass = T::one();
    out.nodes.push(root);
    let mut frontier = vec![(0usize, 0usize)];
    for _ in 1..tree.levels.len() {
        let mut next = Vec::new();
        let mut level_ids = Vec::new();
        for (old, new) in frontier {
            let kids: Vec<usize> = tree.nodes[old].children.iter().copied().filter(|&c| alive[c]).collect();
            let share = out.nodes[new].mass / T::from_usize(kids.len()).unwrap_or_else(T::one);
            for c in kids {
                let id = out.nodes.len();
                let mut nd = tree.nodes[c].clone();
                nd.parent = Some(new);
                nd.children.clear();
                nd.mass = share;
                out.nodes.push(nd);
                out.nodes[new].children.push(id);
                next.push((c, id));
                level_ids.push(id);
            }
        }
        out.levels.push(level_ids);
        frontier = next;
    }
    Ok(out)
}

/// Over all branching floors `b`, the pruned subtree with the largest
/// [`frostman_dimension`]; returns it with `b` and its exponent. The first
/// maximiser in increasing `b` wins.
pub fn frostman_subtree<T: Scalar>(tree: &FrostmanTree<T>) -> Result<(FrostmanTree<T>, usize, T)> {
    let widest = tree.nodes.iter().map(|nd| nd.children.len()).max().unwrap_or(0);
    let mut best: Option<(FrostmanTree<T>, usize, T)> = None;
    for b in 1..=widest {
        let Ok(sub) = prune_to_branching(tree, b) else { break };
        let s = frostman_dimension(&sub)?;
        if best.as_ref().is_none_or(|x| s > x.2) {
            best = Some((sub, b, s));
        }
    }
    best.ok_or(Error::Empty("surviving subtree"))
}

/// Mass-distribution exponent `min_I log mu(I) / log(l(I) / l(root))` over
/// non-root nodes.
pub fn frostman_dimension<T: Scalar>(tree: &FrostmanTree<T>) -> Result<T> {
    let root = tree.root().ok_or(Error::Empty("frostman tree"))?;
    if tree.depth() < 1 {
        return Err(Error::param("tree", "needs at least two levels".to_string()));
    }
    tree.nodes
        .iter()
        .skip(1)
        .map(|nd| nd.mass.ln() / (nd.side / root.side).ln())
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
        .ok_or(Error::Empty("non-root nodes"))
}

/// Parameters of a dimension certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct DimensionParams<T> {
    pub d: usize,
    pub kappa: u32,
    pub levels: u32,
    pub c: T,
    pub scan_range: [T; 2],
    pub ball_density: usize,
}

/// Non-flatness floor, branching counts, and dimension estimates of one run
/// of the net construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct DimensionCertificate<T> {
    pub beta0: T,
    pub kappa: u32,
    /// `Card(A)` of every node, per level of the parent.
    pub branching: Vec<Vec<usize>>,
    /// Children per node, per level of the parent.
    pub children: Vec<Vec<usize>>,
    /// Exponent of the best pruned subtree (see [`frostman_subtree`]).
    pub frostman_exponent: T,
    /// Exponent of the unpruned tree.
    pub raw_exponent: T,
    pub branching_floor: usize,
    pub box_dimension: T,
    pub box_counts: Vec<(T, usize)>,
    /// Dyadic sides covered by the tree, finest first.
    pub scale_range: [T; 2],
    pub mass_defect: T,
}

/// Runs the scan, the net construction on `r`, and the box-count oracle over
/// the tree's scales.
pub fn dimension_certificate<T: Scalar>(
    cloud: &PointCloud<T>,
    r: &Cube<T>,
    params: &DimensionParams<T>,
) -> Result<(DimensionCertificate<T>, FrostmanTree<T>)> {
    let scan = nonflatness_scan(cloud, params.d, params.scan_range, params.ball_density)?;
    let tree = bj_net_recursion(cloud, r, params.kappa, params.levels, params.c, params.d)?;
    let raw = frostman_dimension(&tree)?;
    let (sub, floor, s_hat) = frostman_subtree(&tree)?;
    let coarse = tree.nodes[tree.levels[1][0]].side;
    let fine = tree.nodes[*tree.levels.last().and_then(|l| l.first()).ok_or(Error::Empty("levels"))?].side;
    let range = [fine, coarse];
    let counts = box_counts(&cloud.subset(&r.members), range)?;
    let per_level = |f: &dyn Fn(&FrostmanNode<T>) -> usize| -> Vec<Vec<usize>> {
        tree.levels[..tree.levels.len() - 1]
            .iter()
            .map(|ids| ids.iter().map(|&i| f(&tree.nodes[i])).collect())
            .collect()
    };
    let cert = DimensionCertificate {
        beta0: scan.beta0,
        kappa: params.kappa,
        branching: per_level(&|nd| nd.net_size),
        children: per_level(&|nd| nd.children.len()),
        frostman_exponent: s_hat,
        raw_exponent: raw,
        branching_floor: floor,
        box_dimension: loglog_slope(&counts),
        box_counts: counts,
        scale_range: range,
        mass_defect: tree.mass_defect().max(sub.mass_defect()),
    };
    Ok((cert, tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubes::build_christ_david;
    use crate::generators;

    fn top_cube(c: &PointCloud<f64>) -> Cube<f64> {
        let f = build_christ_david(c, 0.25, 0).unwrap();
        f.cube(f.roots()[0]).clone()
    }

    fn uniform_tree(branch: usize, kappa: i32, levels: usize) -> FrostmanTree<f64> {
        let mut t = FrostmanTree::default();
        t.nodes.push(FrostmanNode { level: 0, cube: None, side: 1.0, parent: None, children: vec![], net_size: 0, mass: 1.0 });
        t.levels.push(vec![0]);
        for l in 1..=levels {
            let mut next = Vec::new();
            for &p in &t.levels[l - 1].clone() {
                for _ in 0..branch {
                    let id = t.nodes.len();
                    let mass = t.nodes[p].mass / branch as f64;
                    let side = 2f64.powi(-kappa * l as i32);
                    t.nodes.push(FrostmanNode { level: l, cube: None, side, parent: Some(p), children: vec![], net_size: branch, mass });
                    t.nodes[p].children.push(id);
                    next.push(id);
                }
            }
            t.levels.push(next);
        }
        t
    }

    #[test]
    fn uniform_trees_have_log_branching_exponent() {
        assert!((frostman_dimension(&uniform_tree(2, 1, 5)).unwrap() - 1.0).abs() < 1e-12);
        assert!((frostman_dimension(&uniform_tree(16, 2, 3)).unwrap() - 2.0).abs() < 1e-12);
        assert!(frostman_dimension(&uniform_tree(2, 1, 0)).is_err());
        let (_, b, s) = frostman_subtree(&uniform_tree(4, 1, 3)).unwrap();
        assert_eq!(b, 1);
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn box_dimension_oracles() {
        let seg = generators::segment::<f64>(2, 4097).unwrap();
        assert!((box_dimension(&seg, [seg.resolution(), 0.25]).unwrap() - 1.0).abs() < 0.05);
        let c = generators::cantor4::<f64>(0.25, 7).unwrap();
        assert!((box_dimension(&c, [c.resolution(), 0.25]).unwrap() - 1.0).abs() < 0.1);
        let c = generators::cantor4::<f64>(0.3, 7).unwrap();
        assert!((box_dimension(&c, [c.resolution(), 0.25]).unwrap() - 1.1514).abs() < 0.07);
        assert!(box_dimension(&c, [0.2, 0.25]).is_err());
        assert!(box_dimension(&c, [1e-9, 0.25]).is_err());
    }

    #[test]
    fn nonflatness_floor() {
        let seg = generators::segment::<f64>(2, 1025).unwrap();
        let s = nonflatness_scan(&seg, 1, [0.05, 0.5], 2).unwrap();
        assert!(s.beta0.abs() < 1e-9);
        let k = generators::koch::<f64>(1.0 / 3.0, 5).unwrap();
        let s = nonflatness_scan(&k, 1, [0.05, 0.5], 2).unwrap();
        assert!(s.beta0 > 0.02, "{}", s.beta0);
        let c = generators::cantor4::<f64>(0.3, 5).unwrap();
        let s = nonflatness_scan(&c, 1, [0.05, 0.5], 2).unwrap();
        assert!(s.beta0 > 0.0);
        assert!(nonflatness_scan(&k, 1, [0.5, 0.05], 2).is_err());
        assert!(nonflatness_scan(&k, 1, [1e-4, 0.5], 2).is_err());
    }

    #[test]
    fn square_branches_about_sixteen() {
        let pts: Vec<Vec<f64>> = (0..64).flat_map(|i| (0..64).map(move |j| vec![i as f64 / 64.0, j as f64 / 64.0])).collect();
        let c = PointCloud::new(pts, 1.0 / 64.0).unwrap();
        let tree = bj_net_recursion(&c, &top_cube(&c), 2, 2, 1.0, 1).unwrap();
        for &id in &tree.levels[1] {
            let a = tree.nodes[id].net_size;
            assert!((4..=64).contains(&a), "{a}");
        }
        assert!(tree.mass_defect() < 1e-12);
        assert!(tree.is_nested());
        assert_eq!(tree.root().unwrap().mass, 1.0);
    }

    #[test]
    fn segment_branches_about_two_to_kappa() {
        let c = generators::segment::<f64>(2, 1025).unwrap();
        let tree = bj_net_recursion(&c, &top_cube(&c), 2, 3, 1.0, 1).unwrap();
        for lvl in &tree.levels[..tree.levels.len() - 1] {
            for &id in lvl {
                let nd = &tree.nodes[id];
                if nd.children.len() > 1 {
                    assert!((1..=16).contains(&nd.net_size), "{}", nd.net_size);
                }
            }
        }
        let total: f64 = tree.levels.last().unwrap().iter().map(|&i| tree.nodes[i].mass).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(bj_net_recursion(&c, &top_cube(&c), 0, 3, 1.0, 1).is_err());
        assert!(bj_net_recursion(&c, &top_cube(&c), 4, 4, 1.0, 1).is_err());
    }

    #[test]
    fn cantor_exponent_is_sandwiched() {
        let c = generators::cantor4::<f64>(0.3, 7).unwrap();
        let params = DimensionParams { d: 1, kappa: 3, levels: 3, c: 1.0, scan_range: [0.05, 0.5], ball_density: 1 };
        let (cert, tree) = dimension_certificate(&c, &top_cube(&c), &params).unwrap();
        let bx = box_dimension(&c, [c.resolution(), 0.25]).unwrap();
        assert!(cert.frostman_exponent >= 0.9, "{}", cert.frostman_exponent);
        assert!(cert.frostman_exponent <= bx && bx <= 1.16, "{} {bx}", cert.frostman_exponent);
        assert!(cert.raw_exponent <= cert.frostman_exponent);
        assert!(cert.frostman_exponent <= 2.0);
        assert!(cert.mass_defect < 1e-12);
        assert_eq!(cert.branching.len(), 3);
        assert_eq!(cert.branching[0], vec![tree.nodes[0].net_size]);
    }
}
