// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::linalg;
use crate::scalar::Scalar;

/// Uniform hash grid over points for radius and nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct GridIndex<T> {
    dim: usize,
    cell: T,
    cells: HashMap<Vec<i64>, Vec<u32>>,
    coords: Vec<T>,
    ids: Vec<u32>,
}

impl<T: Scalar> GridIndex<T> {
    pub fn new(dim: usize, cell: T) -> Self {
        GridIndex { dim, cell, cells: HashMap::new(), coords: Vec::new(), ids: Vec::new() }
    }

    pub fn from_points<'a>(dim: usize, cell: T, points: impl IntoIterator<Item = (usize, &'a [T])>) -> Self {
        let mut g = Self::new(dim, cell);
        for (id, p) in points {
            g.insert(id, p);
        }
        g
    }

    fn key(&self, x: &[T]) -> Vec<i64> {
        x.iter().map(|&c| (c / self.cell).floor().to_i64().unwrap_or(0)).collect()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Adds point `x` under external id `id`.
    pub fn insert(&mut self, id: usize, x: &[T]) {
        let slot = self.ids.len() as u32;
        self.coords.extend_from_slice(x);
        self.ids.push(id as u32);
        let key = self.key(x);
        self.cells.entry(key).or_default().push(slot);
    }

    fn slot_point(&self, slot: u32) -> &[T] {
        let s = slot as usize;
        &self.coords[s * self.dim..(s + 1) * self.dim]
    }

    fn for_each_in_ring(&self, center: &[i64], ring: i64, mut f: impl FnMut(&[u32])) {
        let n = self.dim;
        let mut offset = vec![-ring; n];
        loop {
            if offset.iter().any(|o| o.abs() == ring) {
                let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                if let Some(list) = self.cells.get(&key) {
                    f(list);
                }
            }
            let mut axis = 0;
            loop {
                if axis == n {
                    return;
                }
                offset[axis] += 1;
                if offset[axis] <= ring {
                    break;
                }
                offset[axis] = -ring;
                axis += 1;
            }
        }
    }

    /// True if some indexed point lies at distance `< r` from `x`.
    pub fn any_within(&self, x: &[T], r: T) -> bool {
        let mut found = false;
        self.visit_within(x, r, |_, _| {
            found = true;
            false
        });
        found
    }

    /// Ids of indexed points at distance `< r` from `x`, in insertion order.
    pub fn within(&self, x: &[T], r: T) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_within(x, r, |slot, _| {
            out.push(slot);
            true
        });
        out.sort_unstable();
        out.into_iter().map(|s| self.ids[s as usize] as usize).collect()
    }

    fn visit_within(&self, x: &[T], r: T, mut f: impl FnMut(u32, T) -> bool) {
        let rings = (r / self.cell).ceil().to_i64().unwrap_or(0).max(0);
        let r2 = r * r;
        let center = self.key(x);
        let mut go_on = true;
        for ring in 0..=rings {
            self.for_each_in_ring(&center, ring, |list| {
                if !go_on {
                    return;
                }
                for &slot in list {
                    let d2 = linalg::dist2(x, self.slot_point(slot));
                    if d2 < r2 && !f(slot, d2) {
                        go_on = false;
                        return;
                    }
                }
            });
            if !go_on {
                return;
            }
        }
    }

    fn consider(&self, x: &[T], slots: impl Iterator<Item = u32>, best: &mut Option<(T, u32)>) {
        for slot in slots {
            let d2 = linalg::dist2(x, self.slot_point(slot));
            let id = self.ids[slot as usize];
            *best = match *best {
                None => Some((d2, id)),
                Some((bd, bid)) if d2 < bd || (d2 == bd && id < bid) => Some((d2, id)),
                keep => keep,
            };
        }
    }

    /// Nearest indexed point as `(id, distance)`; ties go to the lowest id.
    pub fn nearest(&self, x: &[T]) -> Option<(usize, T)> {
        if self.ids.is_empty() {
            return None;
        }
        let center = self.key(x);
        let mut best: Option<(T, u32)> = None;
        let mut cells_seen = 0usize;
        let mut ring = 0i64;
        loop {
            self.for_each_in_ring(&center, ring, |list| self.consider(x, list.iter().copied(), &mut best));
            cells_seen += (2 * ring as usize + 1).pow(self.dim as u32);
            if let Some((bd, _)) = best {
                // points outside the rings scanned so far are at least
                // `ring * cell` away
                let reach = T::from_i64(ring).unwrap_or_else(T::zero) * self.cell;
                if bd < reach * reach {
                    break;
                }
            }
            if cells_seen > 4 * self.cells.len() + 64 {
                // sparse far query: scan everything
                self.consider(x, 0..self.ids.len() as u32, &mut best);
                break;
            }
            ring += 1;
        }
        best.map(|(d2, id)| (id as usize, d2.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_brute_force() {
        let pts: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.618).fract() * 3.0, (i as f64 * 0.414).fract()]).collect();
        let g = GridIndex::from_points(2, 0.1, pts.iter().enumerate().map(|(i, p)| (i, p.as_slice())));
        for q in [[0.5, 0.5], [5.0, -3.0], [1.3, 0.01]] {
            let (id, d) = g.nearest(&q).unwrap();
            let (bid, bd) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, linalg::dist(p, &q)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
                .unwrap();
            assert_eq!(id, bid);
            assert_eq!(d, bd);
        }
        let within = g.within(&[1.0, 0.5], 0.25);
        let brute: Vec<usize> = (0..200).filter(|&i| linalg::dist(&pts[i], &[1.0, 0.5]) < 0.25).collect();
        assert_eq!(within, brute);
    }
}
