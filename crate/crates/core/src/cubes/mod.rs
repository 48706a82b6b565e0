// SPDX-License-Identifier: Apache-2.0

//! Dyadic cubes and skeletons, Christ-David hierarchies on point clouds,
//! stopping-time regions and their Whitney-type skeleton approximants.

mod christ_david;
mod dyadic;
mod frostman;
mod region;

pub use christ_david::{
    build_christ_david, build_net_hierarchy, finest_generation, inner_constant, Cube, CubeForest, NetHierarchy,
    DEFAULT_RHO, MAX_RHO,
};
pub use dyadic::{cube_faces, dyadic_cubes_meeting, dyadic_level, skeleton_union, DyadicCube, Face, SkeletonSet};
pub use frostman::{FrostmanNode, FrostmanTree};
pub use region::{ahlfors_ratio, region_d_f, whitney_approximant, StoppingRegion, WhitneyApproximant};
