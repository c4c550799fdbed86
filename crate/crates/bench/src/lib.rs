//! Fixtures shared by the criterion benchmarks.

use rlr_core::datagen::{gen_dataset, DataGenConfig, Distribution};
use rlr_core::rtree::Entry;
use rlr_core::{HeuristicPolicy, ObjectRecord, RTree};

pub const SEED: u64 = 7;

pub fn dataset(distribution: Distribution, n: usize) -> Vec<ObjectRecord<2>> {
    gen_dataset::<2>(&DataGenConfig::new(distribution, n, SEED)).expect("2-d generation")
}

pub fn reference_tree(data: &[ObjectRecord<2>]) -> RTree<2> {
    let mut tree = RTree::new(50, 20).expect("default capacities");
    tree.extend(data.iter().copied(), &mut HeuristicPolicy::reference());
    tree
}

/// An overflowing leaf: the first `M + 1` objects as entries.
pub fn overflowing_leaf(data: &[ObjectRecord<2>], max_entries: usize) -> Vec<Entry<2>> {
    data.iter()
        .take(max_entries + 1)
        .map(|o| Entry {
            mbr: o.mbr,
            child: o.id,
        })
        .collect()
}
