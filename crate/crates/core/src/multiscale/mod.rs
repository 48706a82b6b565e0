// SPDX-License-Identifier: Apache-2.0

//! Multiscale sums over cube hierarchies and the dimension machinery built
//! on nested nets of skeleton sets.

mod bj;
mod dimension;
mod tst;

pub use bj::{bj_sum_check, capacity_lower_bound, BjRecord};
pub use dimension::{
    bj_net_recursion, box_counts, frostman_subtree, prune_to_branching, box_dimension, dimension_certificate, frostman_dimension, nonflatness_scan,
    DimensionCertificate, DimensionParams, NonflatnessScan,
};
pub use tst::{
    beta_square_function, tree_beta_sum, tst_sum, tst_sum_skeleton, GenerationSummary, LedgerEntry, MeasureProxy,
    TSTReport,
};
