//! Exact range and K-nearest-neighbour search with node-access accounting.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{NodeId, RTree};
use crate::geometry::Rect;

/// Cost of answering one query. The root counts as an access.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub node_accesses: u64,
    pub result_count: u64,
    pub elapsed_nanos: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeResult {
    /// Ids of every object whose box intersects the window, ascending.
    pub ids: Vec<u64>,
    pub stats: QueryStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnResult {
    /// `(id, squared distance)` in ascending distance, ties by id.
    pub neighbors: Vec<(u64, f64)>,
    /// Set when fewer than K objects exist.
    pub short: bool,
    pub stats: QueryStats,
}

impl KnnResult {
    pub fn ids(&self) -> Vec<u64> {
        self.neighbors.iter().map(|&(id, _)| id).collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    id: u64,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.id.cmp(&other.id))
    }
}

impl<const D: usize> RTree<D> {
    /// Node accesses for a range query, without collecting results.
    pub fn range_count(&self, window: &Rect<D>) -> (u64, u64) {
        let mut accesses = 0u64;
        let mut hits = 0u64;
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            accesses += 1;
            let node = self.node(id);
            if node.is_leaf() {
                hits += node
                    .entries()
                    .iter()
                    .filter(|e| e.mbr.intersects(window))
                    .count() as u64;
            } else {
                stack.extend(
                    node.entries()
                        .iter()
                        .filter(|e| e.mbr.intersects(window))
                        .map(|e| e.node()),
                );
            }
        }
        (accesses, hits)
    }

    /// All objects whose box intersects `window` (closed boxes).
    pub fn range_query(&self, window: &Rect<D>) -> RangeResult {
        let start = Instant::now();
        let mut accesses = 0u64;
        let mut ids = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            accesses += 1;
            let node = self.node(id);
            for e in node.entries() {
                if e.mbr.intersects(window) {
                    if node.is_leaf() {
                        ids.push(e.child);
                    } else {
                        stack.push(e.node());
                    }
                }
            }
        }
        ids.sort_unstable();
        RangeResult {
            stats: QueryStats {
                node_accesses: accesses,
                result_count: ids.len() as u64,
                elapsed_nanos: start.elapsed().as_nanos() as u64,
            },
            ids,
        }
    }

    /// The `k` objects nearest to `q` by minimum distance to their boxes.
    ///
    /// Depth-first branch and bound: children are visited in ascending
    /// MINDIST order and a subtree is pruned once its MINDIST exceeds the
    /// current k-th best distance.
    pub fn knn_query(&self, q: &[f64; D], k: usize) -> KnnResult {
        let start = Instant::now();
        let k = k.max(1);
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut accesses = 0u64;
        if !self.is_empty() {
            self.knn_visit(self.root, q, k, &mut best, &mut accesses);
        } else {
            accesses = 1;
        }
        let mut neighbors: Vec<(u64, f64)> = best
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.id, c.dist_sq))
            .collect();
        neighbors.truncate(k);
        KnnResult {
            short: neighbors.len() < k,
            stats: QueryStats {
                node_accesses: accesses,
                result_count: neighbors.len() as u64,
                elapsed_nanos: start.elapsed().as_nanos() as u64,
            },
            neighbors,
        }
    }

    fn knn_visit(
        &self,
        id: NodeId,
        q: &[f64; D],
        k: usize,
        best: &mut BinaryHeap<Candidate>,
        accesses: &mut u64,
    ) {
        *accesses += 1;
        let node = self.node(id);
        if node.is_leaf() {
            for e in node.entries() {
                let cand = Candidate {
                    dist_sq: e.mbr.min_dist_sq(q),
                    id: e.child,
                };
                if best.len() < k {
                    best.push(cand);
                } else if cand < *best.peek().expect("k >= 1") {
                    best.pop();
                    best.push(cand);
                }
            }
            return;
        }
        let mut branches: Vec<(f64, NodeId)> = node
            .entries()
            .iter()
            .map(|e| (e.mbr.min_dist_sq(q), e.node()))
            .collect();
        branches.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (mindist, child) in branches {
            // Equal distances are still visited so id tie-breaks stay exact.
            if best.len() == k && mindist > best.peek().expect("k >= 1").dist_sq {
                break;
            }
            self.knn_visit(child, q, k, best, accesses);
        }
    }
}
