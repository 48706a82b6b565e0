// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::dyadic::DyadicCube;

/// Node of a Frostman tree. The root stands for the starting region and has
/// no dyadic cube of its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct FrostmanNode<T> {
    pub level: usize,
    pub cube: Option<DyadicCube>,
    pub side: T,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Size of the net the children were drawn from.
    pub net_size: usize,
    pub mass: T,
}

/// Levels `S_0, S_1, ...` of nested dyadic cubes carrying a mass
/// distribution with `mu(root) = 1` and `mu(parent) = sum mu(children)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar"))]
pub struct FrostmanTree<T> {
    pub nodes: Vec<FrostmanNode<T>>,
    pub levels: Vec<Vec<usize>>,
}

impl<T: Scalar> FrostmanTree<T> {
    pub fn root(&self) -> Option<&FrostmanNode<T>> {
        self.nodes.first()
    }

    pub fn depth(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// Worst `|mu(parent) - sum mu(children)|` over internal nodes.
    pub fn mass_defect(&self) -> T {
        self.nodes
            .iter()
            .filter(|n| !n.children.is_empty())
            .map(|n| (n.mass - n.children.iter().map(|&c| self.nodes[c].mass).sum::<T>()).abs())
            .fold(T::zero(), T::max)
    }

    /// True if each non-root node lies in its parent's cube.
    pub fn is_nested(&self) -> bool {
        self.nodes.iter().all(|n| match (n.parent, &n.cube) {
            (Some(p), Some(c)) => match &self.nodes[p].cube {
                Some(pc) => pc.level <= c.level && c.ancestor(pc.level) == *pc,
                None => true,
            },
            _ => true,
        })
    }
}
