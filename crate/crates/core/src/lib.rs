// SPDX-License-Identifier: Apache-2.0

// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod beta;
pub mod cubes;
pub mod linalg;
pub mod multiscale;
pub mod pbp;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

// f64 instantiations of the generic types.
pub type PointCloud64 = crate::geometry::PointCloud<f64>;
pub type Ball64 = crate::geometry::Ball<f64>;
pub type AffinePlane64 = crate::geometry::AffinePlane<f64>;
pub type ContentEstimate64 = crate::geometry::ContentEstimate<f64>;
pub type BetaResult64 = crate::beta::BetaResult<f64>;
pub type Cube64 = crate::cubes::Cube<f64>;
pub type CubeForest64 = crate::cubes::CubeForest<f64>;
pub type SkeletonSet64 = crate::cubes::SkeletonSet<f64>;
pub type FrostmanTree64 = crate::cubes::FrostmanTree<f64>;
pub type PBPProfile64 = crate::pbp::PBPProfile<f64>;
pub type TSTReport64 = crate::multiscale::TSTReport<f64>;
pub type DimensionCertificate64 = crate::multiscale::DimensionCertificate<f64>;
pub type BjRecord64 = crate::multiscale::BjRecord<f64>;
