// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::linalg;
use crate::scalar::{self, Scalar};

use super::christ_david::{Cube, CubeForest};
use super::dyadic::{DyadicCube, SkeletonSet};

/// Stopping-time region: cubes of a forest below a top cube, closed under
/// siblings and convex for inclusion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoppingRegion {
    pub top: usize,
    pub cubes: BTreeSet<usize>,
    /// Minimal cubes: members with no child in the region.
    pub minimal: Vec<usize>,
}

impl StoppingRegion {
    /// Checks the region axioms and derives the minimal cubes.
    pub fn new<T: Scalar>(forest: &CubeForest<T>, top: usize, cubes: BTreeSet<usize>) -> Result<Self> {
        if !cubes.contains(&top) {
            return Err(Error::param("cubes", "region must contain its top cube".to_string()));
        }
        for &q in &cubes {
            // walking up from q must reach top through region cubes only
            let mut cur = q;
            while cur != top {
                cur = forest.cubes[cur].parent.ok_or_else(|| {
                    Error::param("cubes", format!("cube {q} is not below the top cube {top}"))
                })?;
                if !cubes.contains(&cur) {
                    return Err(Error::param("cubes", format!("region is not convex at cube {cur}")));
                }
            }
            if q != top {
                let p = forest.cubes[q].parent.expect("below top");
                if forest.cubes[p].children.iter().any(|c| !cubes.contains(c)) {
                    return Err(Error::param("cubes", format!("siblings of cube {q} are missing")));
                }
            }
        }
        let minimal = cubes
            .iter()
            .copied()
            .filter(|&q| !forest.cubes[q].children.iter().any(|c| cubes.contains(c)))
            .collect();
        Ok(StoppingRegion { top, cubes, minimal })
    }

    /// Grows a region from `top`, descending into a cube's children (all of
    /// them) whenever `descend` accepts the cube.
    pub fn grow<T: Scalar>(forest: &CubeForest<T>, top: usize, mut descend: impl FnMut(&Cube<T>) -> bool) -> Self {
        let mut cubes = BTreeSet::new();
        let mut stack = vec![top];
        let mut minimal = Vec::new();
        while let Some(q) = stack.pop() {
            cubes.insert(q);
            let cube = &forest.cubes[q];
            if !cube.children.is_empty() && descend(cube) {
                stack.extend(cube.children.iter().copied());
            } else {
                minimal.push(q);
            }
        }
        minimal.sort_unstable();
        StoppingRegion { top, cubes, minimal }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// `d_F(x) = min over minimal cubes Q of l(Q) + dist(x, Q)`, the distance to
/// `Q` taken over its member points.
pub fn region_d_f<T: Scalar>(region: &StoppingRegion, forest: &CubeForest<T>, cloud: &PointCloud<T>, x: &[T]) -> Result<T> {
    if region.minimal.is_empty() {
        return Err(Error::Empty("minimal cube family"));
    }
    let mut best = T::infinity();
    for &q in &region.minimal {
        let cube = &forest.cubes[q];
        if cube.side >= best {
            continue;
        }
        let mut d2 = T::infinity();
        for &m in &cube.members {
            d2 = d2.min(linalg::dist2(x, cloud.point(m)));
        }
        best = best.min(cube.side + d2.sqrt());
    }
    Ok(best)
}

/// Precomputed `d_F` over many query points: points of each minimal cube
/// carry `l(Q)`, and the query minimises `l + |x - y|`.
struct DistanceToFamily<T> {
    dim: usize,
    coords: Vec<T>,
    sides: Vec<T>,
}

impl<T: Scalar> DistanceToFamily<T> {
    fn new(region: &StoppingRegion, forest: &CubeForest<T>, cloud: &PointCloud<T>) -> Self {
        let mut coords = Vec::new();
        let mut sides = Vec::new();
        for &q in &region.minimal {
            let cube = &forest.cubes[q];
            for &m in &cube.members {
                coords.extend_from_slice(cloud.point(m));
                sides.push(cube.side);
            }
        }
        DistanceToFamily { dim: cloud.dim(), coords, sides }
    }

    fn eval(&self, x: &[T]) -> T {
        let mut best = T::infinity();
        for (p, &s) in self.coords.chunks_exact(self.dim).zip(&self.sides) {
            if s >= best {
                continue;
            }
            best = best.min(s + linalg::dist(x, p));
        }
        best
    }
}

/// Whitney-type approximant `E_T` of a stopping region.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct WhitneyApproximant<T> {
    pub cubes: Vec<DyadicCube>,
    pub skeleton: SkeletonSet<T>,
    /// Cloud indices lying in `C0 B_T`.
    pub covered: Vec<usize>,
    /// `d_T` at each covered point.
    pub d_t: Vec<T>,
    /// Cubes whose side was clamped at the resolution floor.
    pub clamped: usize,
    /// Worst `dist(x, E_T) / (tau d_T(x))` over covered points.
    pub adr_ratio: T,
    /// `C0 B_T ∩ E ⊆ ⋃ I ⊆ 2 C0 B_T` on the sample.
    pub containment_holds: bool,
    /// Empirical Ahlfors ratio of `E_T` (see [`ahlfors_ratio`]).
    pub ahlfors_ratio: T,
}

/// Selects disjoint dyadic cubes covering `C0 B_T ∩ cloud`, `B_T` the ball
/// `B(x_T, l(T))` of the top cube, splitting a cube until its side is at
/// most `tau` times the least `d_T` over its points and it lies in
/// `2 C0 B_T`. Sides are clamped below at the dyadic scale of the cloud
/// resolution. Returns the `d`-skeleton union of the selection.
pub fn whitney_approximant<T: Scalar>(
    region: &StoppingRegion,
    forest: &CubeForest<T>,
    cloud: &PointCloud<T>,
    tau: T,
    c0: T,
    d: usize,
) -> Result<WhitneyApproximant<T>> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::param("tau", format!("must lie in (0, 1), got {tau}")));
    }
    if !(c0 > T::lit(4.0)) {
        return Err(Error::param("C0", format!("must exceed 4, got {c0}")));
    }
    let top = &forest.cubes[region.top];
    let x_t = cloud.point(top.center).to_vec();
    let big = c0 * top.side;
    let r2 = big * big;
    let covered: Vec<usize> = (0..cloud.len()).filter(|&i| linalg::dist2(cloud.point(i), &x_t) < r2).collect();
    let family = DistanceToFamily::new(region, forest, cloud);
    let d_t: Vec<T> = covered.iter().map(|&i| family.eval(cloud.point(i))).collect();

    let floor_level = -scalar::ceil_log2(cloud.resolution());
    let start_level = (-scalar::ceil_log2(big)).min(floor_level);
    let outer = big + big;

    // top-down refinement over groups of covered points
    let mut groups: std::collections::BTreeMap<DyadicCube, Vec<usize>> = Default::default();
    for (j, &i) in covered.iter().enumerate() {
        groups.entry(DyadicCube::containing(cloud.point(i), start_level)).or_default().push(j);
    }
    let mut selected = Vec::new();
    let mut clamped = 0usize;
    let mut work: Vec<(DyadicCube, Vec<usize>)> = groups.into_iter().collect();
    while let Some((cube, pts)) = work.pop() {
        let side: T = cube.side();
        let min_dt = pts.iter().map(|&j| d_t[j]).fold(T::infinity(), T::min);
        let fits = side <= tau * min_dt && cube.far_distance(&x_t) < outer;
        if fits || cube.level >= floor_level {
            if !fits {
                clamped += 1;
            }
            selected.push(cube);
            continue;
        }
        let mut kids: std::collections::BTreeMap<DyadicCube, Vec<usize>> = Default::default();
        for j in pts {
            kids.entry(DyadicCube::containing(cloud.point(covered[j]), cube.level + 1)).or_default().push(j);
        }
        work.extend(kids);
    }
    selected.sort();
    if selected.is_empty() {
        return Err(Error::Empty("covered sample"));
    }
    let sample_h = cloud.resolution();
    let skeleton = SkeletonSet::from_cubes(&selected, d, sample_h)?;

    let mut adr_ratio = T::zero();
    for (j, &i) in covered.iter().enumerate() {
        let dist = skeleton.distance(cloud.point(i));
        adr_ratio = adr_ratio.max(dist / (tau * d_t[j]));
    }
    let containment_holds = selected.iter().all(|q| q.far_distance(&x_t) < outer);
    let ahlfors = ahlfors_ratio(&skeleton, &[T::lit(0.5), T::one(), T::lit(2.0)].map(|f| f * top.side), 64);
    Ok(WhitneyApproximant {
        cubes: selected,
        skeleton,
        covered,
        d_t,
        clamped,
        adr_ratio,
        containment_holds,
        ahlfors_ratio: ahlfors,
    })
}

/// `sup / inf` over balls centered on skeleton samples of `H^d(E ∩ B) / r^d`,
/// with `H^d` of the ball estimated from the sample count (uniform mass per
/// sample). Uses at most `centers` evenly spaced centers per radius.
pub fn ahlfors_ratio<T: Scalar>(skeleton: &SkeletonSet<T>, radii: &[T], centers: usize) -> T {
    let pts = &skeleton.cloud;
    if pts.is_empty() || radii.is_empty() {
        return T::nan();
    }
    let mass = skeleton.measure() / T::from_usize(pts.len()).unwrap_or_else(T::one);
    let stride = (pts.len() / centers.max(1)).max(1);
    let (mut lo, mut hi) = (T::infinity(), T::zero());
    for &r in radii {
        let rd = r.powi(skeleton.d as i32);
        let r2 = r * r;
        for c in (0..pts.len()).step_by(stride) {
            let x = pts.point(c);
            let count = pts.points().filter(|p| linalg::dist2(p, x) < r2).count();
            let v = mass * T::from_usize(count).unwrap_or_else(T::zero) / rd;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    hi / lo
}
