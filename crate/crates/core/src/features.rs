//! State construction for the learned ChooseSubtree and Split decisions.
//!
//! A ChooseSubtree state describes the `k` children with the smallest area
//! enlargement; a Split state describes the `k` non-overlapping sorted-sequence
//! splits with the smallest total area. Each candidate contributes four
//! features, so a state always has `4k` values; missing candidates are
//! zero-padded and masked out through `valid_actions`.

use std::cmp::Ordering;

use crate::geometry::Rect;
use crate::rtree::{Entry, NodeId, RTree, SplitPartition};

pub const FEATURES_PER_CANDIDATE: usize = 4;

/// Raw ChooseSubtree features of one child.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateChild {
    pub entry_index: usize,
    pub delta_area: f64,
    pub delta_margin: f64,
    pub delta_overlap: f64,
    /// Child entry count divided by the node capacity.
    pub occupancy: f64,
}

/// One sorted-sequence split of an overflowing node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateSplit<const D: usize> {
    pub axis: usize,
    /// Size of the first group.
    pub position: usize,
    pub group1_mbr: Rect<D>,
    pub group2_mbr: Rect<D>,
    pub area1: f64,
    pub area2: f64,
    pub margin1: f64,
    pub margin2: f64,
    pub overlap: f64,
}

impl<const D: usize> CandidateSplit<D> {
    pub fn total_area(&self) -> f64 {
        self.area1 + self.area2
    }

    pub fn total_margin(&self) -> f64 {
        self.margin1 + self.margin2
    }
}

/// Fixed-length state with an action mask.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub valid_actions: usize,
}

impl StateVector {
    /// Number of action slots, `k`.
    pub fn action_slots(&self) -> usize {
        self.values.len() / FEATURES_PER_CANDIDATE
    }
}

/// Children ranked by ascending area enlargement (ties: margin enlargement,
/// then entry index), truncated to `k`.
///
/// The overlap increase of a child is summed over all of its siblings, not
/// just the other candidates.
pub fn rank_candidate_children<const D: usize>(
    tree: &RTree<D>,
    node: NodeId,
    obj: &Rect<D>,
    k: usize,
) -> Vec<CandidateChild> {
    let entries = tree.node(node).entries();
    let mut ranked: Vec<(f64, f64, usize)> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let grown = e.mbr.union(obj);
            (grown.area() - e.mbr.area(), grown.margin() - e.mbr.margin(), i)
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    ranked.truncate(k.max(1));

    let capacity = tree.max_entries() as f64;
    let children_are_nodes = !tree.node(node).is_leaf();
    ranked
        .into_iter()
        .map(|(delta_area, delta_margin, i)| {
            let e = &entries[i];
            let occupancy = if children_are_nodes {
                tree.node(e.node()).len() as f64 / capacity
            } else {
                0.0
            };
            CandidateChild {
                entry_index: i,
                delta_area,
                delta_margin,
                delta_overlap: overlap_increase(entries, i, obj),
                occupancy,
            }
        })
        .collect()
}

/// Increase of the summed overlap between entry `i` and its siblings when
/// entry `i` grows to cover `obj`.
pub fn overlap_increase<const D: usize>(entries: &[Entry<D>], i: usize, obj: &Rect<D>) -> f64 {
    let before = entries[i].mbr;
    let after = before.union(obj);
    let mut delta = 0.0;
    for (j, sib) in entries.iter().enumerate() {
        if j != i {
            delta += after.overlap_area(&sib.mbr) - before.overlap_area(&sib.mbr);
        }
    }
    delta.max(0.0)
}

fn normalize(value: f64, max: f64) -> f64 {
    if max > 0.0 {
        value / max
    } else {
        0.0
    }
}

/// ChooseSubtree state: per candidate `[ΔA, ΔM, ΔO]` normalized by their
/// maxima over the candidates, followed by the occupancy.
pub fn choose_state(candidates: &[CandidateChild], k: usize) -> StateVector {
    assert!(
        !candidates.is_empty() && candidates.len() <= k,
        "need 1..=k candidates"
    );
    let max_area = candidates.iter().map(|c| c.delta_area).fold(0.0, f64::max);
    let max_margin = candidates.iter().map(|c| c.delta_margin).fold(0.0, f64::max);
    let max_overlap = candidates.iter().map(|c| c.delta_overlap).fold(0.0, f64::max);
    let mut values = vec![0.0; FEATURES_PER_CANDIDATE * k];
    for (slot, c) in values
        .chunks_exact_mut(FEATURES_PER_CANDIDATE)
        .zip(candidates)
    {
        slot[0] = normalize(c.delta_area, max_area);
        slot[1] = normalize(c.delta_margin, max_margin);
        slot[2] = normalize(c.delta_overlap, max_overlap);
        slot[3] = c.occupancy;
    }
    StateVector {
        values,
        valid_actions: candidates.len(),
    }
}

/// Child whose box already contains `obj`; the smallest such box wins, ties
/// by index.
pub fn containment_shortcut<const D: usize>(entries: &[Entry<D>], obj: &Rect<D>) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, e) in entries.iter().enumerate() {
        if e.mbr.contains(obj) {
            let area = e.mbr.area();
            if best.is_none_or(|(a, _)| area < a) {
                best = Some((area, i));
            }
        }
    }
    best.map(|(_, i)| i)
}

/// Every sorted-sequence split of an overflowing entry list.
#[derive(Clone, Debug)]
pub struct CandidateSplits<const D: usize> {
    /// Per axis, entry indices sorted by (lower, upper, child id).
    orders: Vec<Vec<usize>>,
    /// All candidates, axis-major then by position.
    pub all: Vec<CandidateSplit<D>>,
    /// Indices into `all` of the zero-overlap candidates, by ascending total
    /// area (ties: total margin, axis, position).
    pub zero_overlap: Vec<usize>,
    /// Indices into `all` of every candidate, same order.
    pub by_area: Vec<usize>,
}

fn area_order<const D: usize>(a: &CandidateSplit<D>, b: &CandidateSplit<D>) -> Ordering {
    a.total_area()
        .total_cmp(&b.total_area())
        .then(a.total_margin().total_cmp(&b.total_margin()))
        .then(a.axis.cmp(&b.axis))
        .then(a.position.cmp(&b.position))
}

/// Entry indices sorted along `axis` by lower bound, then upper bound, then
/// child id.
pub fn sorted_along<const D: usize>(entries: &[Entry<D>], axis: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&entries[a], &entries[b]);
        ea.mbr.lo()[axis]
            .total_cmp(&eb.mbr.lo()[axis])
            .then(ea.mbr.hi()[axis].total_cmp(&eb.mbr.hi()[axis]))
            .then(ea.child.cmp(&eb.child))
            .then(a.cmp(&b))
    });
    order
}

/// Enumerates splits at positions `min..=len-min` of every per-axis sorted
/// sequence.
pub fn enumerate_candidate_splits<const D: usize>(
    entries: &[Entry<D>],
    min: usize,
) -> CandidateSplits<D> {
    let n = entries.len();
    assert!(n >= 2 * min && min >= 1, "need at least 2*min entries");
    let per_axis = n + 1 - 2 * min;
    let mut orders = Vec::with_capacity(D);
    let mut all = Vec::with_capacity(D * per_axis);
    let mut prefix = Vec::with_capacity(n);
    let mut suffix = vec![entries[0].mbr; n];
    for axis in 0..D {
        let order = sorted_along(entries, axis);
        prefix.clear();
        let mut acc = entries[order[0]].mbr;
        for &i in &order {
            acc.expand(&entries[i].mbr);
            prefix.push(acc);
        }
        let mut acc = entries[order[n - 1]].mbr;
        for pos in (0..n).rev() {
            acc.expand(&entries[order[pos]].mbr);
            suffix[pos] = acc;
        }
        for position in min..=(n - min) {
            let g1 = prefix[position - 1];
            let g2 = suffix[position];
            all.push(CandidateSplit {
                axis,
                position,
                group1_mbr: g1,
                group2_mbr: g2,
                area1: g1.area(),
                area2: g2.area(),
                margin1: g1.margin(),
                margin2: g2.margin(),
                overlap: g1.overlap_area(&g2),
            });
        }
        orders.push(order);
    }
    let mut by_area: Vec<usize> = (0..all.len()).collect();
    by_area.sort_by(|&a, &b| area_order(&all[a], &all[b]));
    let zero_overlap = by_area
        .iter()
        .copied()
        .filter(|&i| all[i].overlap == 0.0)
        .collect();
    CandidateSplits {
        orders,
        all,
        zero_overlap,
        by_area,
    }
}

impl<const D: usize> CandidateSplits<D> {
    /// The index partition a candidate stands for.
    pub fn partition(&self, candidate: &CandidateSplit<D>) -> SplitPartition {
        let order = &self.orders[candidate.axis];
        SplitPartition {
            first: order[..candidate.position].to_vec(),
            second: order[candidate.position..].to_vec(),
        }
    }

    /// Sorted sequence for `axis`.
    pub fn order(&self, axis: usize) -> &[usize] {
        &self.orders[axis]
    }

    /// The first `k` zero-overlap candidates.
    pub fn top_zero_overlap(&self, k: usize) -> Vec<CandidateSplit<D>> {
        self.zero_overlap
            .iter()
            .take(k)
            .map(|&i| self.all[i])
            .collect()
    }
}

/// Split state: per candidate `[area1, area2, margin1, margin2]`, areas divided
/// by the largest group area and margins by the largest group margin among
/// the listed candidates.
pub fn split_state<const D: usize>(topk: &[CandidateSplit<D>], k: usize) -> StateVector {
    assert!(!topk.is_empty() && topk.len() <= k, "need 1..=k candidates");
    let max_area = topk
        .iter()
        .map(|c| c.area1.max(c.area2))
        .fold(0.0, f64::max);
    let max_margin = topk
        .iter()
        .map(|c| c.margin1.max(c.margin2))
        .fold(0.0, f64::max);
    let mut values = vec![0.0; FEATURES_PER_CANDIDATE * k];
    for (slot, c) in values.chunks_exact_mut(FEATURES_PER_CANDIDATE).zip(topk) {
        slot[0] = normalize(c.area1, max_area);
        slot[1] = normalize(c.area2, max_area);
        slot[2] = normalize(c.margin1, max_margin);
        slot[3] = normalize(c.margin2, max_margin);
    }
    StateVector {
        values,
        valid_actions: topk.len(),
    }
}

/// Minimum-overlap candidate when at most one candidate has zero overlap;
/// `None` when the learned policy should decide.
pub fn split_special_case<const D: usize>(cands: &CandidateSplits<D>) -> Option<CandidateSplit<D>> {
    if cands.zero_overlap.len() > 1 {
        return None;
    }
    min_overlap_candidate(cands)
}

/// Candidate with the least overlap; ties by total area, then axis, then
/// position.
pub fn min_overlap_candidate<const D: usize>(cands: &CandidateSplits<D>) -> Option<CandidateSplit<D>> {
    cands
        .all
        .iter()
        .min_by(|a, b| {
            a.overlap
                .total_cmp(&b.overlap)
                .then(a.total_area().total_cmp(&b.total_area()))
                .then(a.axis.cmp(&b.axis))
                .then(a.position.cmp(&b.position))
        })
        .copied()
}
