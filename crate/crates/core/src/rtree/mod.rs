//! Arena-backed R-Tree with pluggable ChooseSubtree and Split policies.
//!
//! Nodes live in a `Vec` and are addressed by stable [`NodeId`] handles. Level 0
//! is the leaf level; leaf entries carry object ids, inner entries carry child
//! node handles. Every entry rectangle is the exact union of the entries of the
//! node it points to.
//!
//! The tree can record a checkpoint and later roll back to it, or bring another
//! tree that shares the same checkpoint up to date by copying only the nodes
//! touched since then. Training loops use this to reset and synchronize trees
//! without deep copies.

mod query;
mod validate;

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

pub use query::{KnnResult, QueryStats, RangeResult};
pub use validate::Violation;

use crate::error::{Error, Result};
use crate::geometry::{union_all, Rect};

/// Default node capacity.
pub const DEFAULT_MAX_ENTRIES: usize = 50;
/// Default minimum fill.
pub const DEFAULT_MIN_ENTRIES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    fn from_child(child: u64) -> Self {
        NodeId(child as u32)
    }

    fn as_child(self) -> u64 {
        u64::from(self.0)
    }
}

/// An object to index: an id plus its bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectRecord<const D: usize> {
    pub id: u64,
    pub mbr: Rect<D>,
}

impl<const D: usize> ObjectRecord<D> {
    pub fn new(id: u64, mbr: Rect<D>) -> Self {
        Self { id, mbr }
    }
}

/// A node slot: an MBR plus either an object id (leaf) or a child handle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry<const D: usize> {
    pub mbr: Rect<D>,
    pub child: u64,
}

impl<const D: usize> Entry<D> {
    /// Child node handle; only meaningful for entries of inner nodes.
    pub fn node(&self) -> NodeId {
        NodeId::from_child(self.child)
    }
}

#[derive(Debug, PartialEq)]
pub struct Node<const D: usize> {
    level: u32,
    parent: Option<NodeId>,
    entries: Vec<Entry<D>>,
}

impl<const D: usize> Clone for Node<D> {
    fn clone(&self) -> Self {
        Self {
            level: self.level,
            parent: self.parent,
            entries: self.entries.clone(),
        }
    }

    fn clone_from(&mut self, source: &Self) {
        self.level = source.level;
        self.parent = source.parent;
        self.entries.clone_from(&source.entries);
    }
}

impl<const D: usize> Node<D> {
    fn new(level: u32, parent: Option<NodeId>) -> Self {
        Self {
            level,
            parent,
            entries: Vec::new(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_leaf(&self) -> bool {
        self.level == 0
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn entries(&self) -> &[Entry<D>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mbr(&self) -> Option<Rect<D>> {
        union_all(self.entries.iter().map(|e| &e.mbr))
    }
}

/// Two-way partition of an overflowing entry list, as indices into it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPartition {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl SplitPartition {
    /// Checks that the groups cover `0..total` exactly once and both respect
    /// the fill bounds.
    pub fn check(&self, total: usize, min: usize) -> std::result::Result<(), String> {
        let mut seen = vec![false; total];
        for &i in self.first.iter().chain(&self.second) {
            if i >= total {
                return Err(format!("index {i} out of range {total}"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(format!("index {i} assigned twice"));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("partition is not exhaustive".into());
        }
        let max_group = total.saturating_sub(min);
        for (name, g) in [("first", &self.first), ("second", &self.second)] {
            if g.len() < min || g.len() > max_group {
                return Err(format!(
                    "{name} group has {} entries, allowed [{min}, {max_group}]",
                    g.len()
                ));
            }
        }
        Ok(())
    }
}

/// The two decisions an insertion delegates.
pub trait InsertPolicy<const D: usize> {
    /// Index of the entry of `node` whose subtree receives `obj`.
    fn choose_subtree(&mut self, tree: &RTree<D>, node: NodeId, obj: &Rect<D>) -> usize;

    /// Partitions `max + 1` entries of an overflowing node into two groups of
    /// at least `min` entries each.
    fn split(&mut self, entries: &[Entry<D>], min: usize, max: usize) -> SplitPartition;
}

impl<const D: usize, P: InsertPolicy<D> + ?Sized> InsertPolicy<D> for &mut P {
    fn choose_subtree(&mut self, tree: &RTree<D>, node: NodeId, obj: &Rect<D>) -> usize {
        (**self).choose_subtree(tree, node, obj)
    }

    fn split(&mut self, entries: &[Entry<D>], min: usize, max: usize) -> SplitPartition {
        (**self).split(entries, min, max)
    }
}

static CHECKPOINT_TOKENS: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
struct Journal<const D: usize> {
    token: u64,
    base_nodes: usize,
    root: NodeId,
    height: usize,
    len: usize,
    touched: HashSet<u32>,
    saved: Vec<(u32, Node<D>)>,
}

#[derive(Debug)]
pub struct RTree<const D: usize> {
    nodes: Vec<Node<D>>,
    root: NodeId,
    max_entries: usize,
    min_entries: usize,
    height: usize,
    len: usize,
    journal: Option<Journal<D>>,
}

impl<const D: usize> Clone for RTree<D> {
    /// Deep copy of the structure. The copy carries no checkpoint.
    fn clone(&self) -> Self {
        Self {
            nodes: self.nodes.clone(),
            root: self.root,
            max_entries: self.max_entries,
            min_entries: self.min_entries,
            height: self.height,
            len: self.len,
            journal: None,
        }
    }
}

impl<const D: usize> PartialEq for RTree<D> {
    /// Structural equality, node for node.
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
            && self.height == other.height
            && self.len == other.len
            && self.max_entries == other.max_entries
            && self.min_entries == other.min_entries
            && self.nodes == other.nodes
    }
}

impl<const D: usize> Default for RTree<D> {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_ENTRIES, DEFAULT_MIN_ENTRIES).expect("default capacities are valid")
    }
}

impl<const D: usize> RTree<D> {
    /// Empty tree with node capacity `max_entries` and minimum fill
    /// `min_entries` (`2 <= min_entries <= max_entries / 2`).
    pub fn new(max_entries: usize, min_entries: usize) -> Result<Self> {
        if D < 1 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if min_entries < 1 || max_entries < 2 || min_entries > max_entries / 2 {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= m <= M/2, got M={max_entries}, m={min_entries}"
            )));
        }
        Ok(Self {
            nodes: vec![Node::new(0, None)],
            root: NodeId(0),
            max_entries,
            min_entries,
            height: 1,
            len: 0,
            journal: None,
        })
    }

    pub(crate) fn from_parts(
        nodes: Vec<Node<D>>,
        root: NodeId,
        max_entries: usize,
        min_entries: usize,
        height: usize,
        len: usize,
    ) -> Self {
        Self {
            nodes,
            root,
            max_entries,
            min_entries,
            height,
            len,
            journal: None,
        }
    }

    pub(crate) fn raw_node(level: u32, parent: Option<NodeId>, entries: Vec<Entry<D>>) -> Node<D> {
        Node {
            level,
            parent,
            entries,
        }
    }

    pub fn max_entries(&self) -> usize {
        self.max_entries
    }

    pub fn min_entries(&self) -> usize {
        self.min_entries
    }

    /// Number of levels from root to leaf, inclusive.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of indexed objects.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node<D> {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node<D>)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn root_mbr(&self) -> Option<Rect<D>> {
        self.node(self.root).mbr()
    }

    /// All indexed objects, in leaf order.
    pub fn objects(&self) -> Vec<ObjectRecord<D>> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = self.node(id);
            if node.is_leaf() {
                out.extend(node.entries.iter().map(|e| ObjectRecord::new(e.child, e.mbr)));
            } else {
                stack.extend(node.entries.iter().rev().map(|e| e.node()));
            }
        }
        out
    }

    /// Leaf that a descent driven by `policy` reaches for `obj`, without
    /// modifying the tree.
    pub fn descend<P: InsertPolicy<D> + ?Sized>(&self, obj: &Rect<D>, policy: &mut P) -> NodeId {
        let mut cur = self.root;
        while !self.node(cur).is_leaf() {
            let idx = policy.choose_subtree(self, cur, obj);
            cur = self.node(cur).entries[idx].node();
        }
        cur
    }

    /// Inserts `obj`, splitting overflowing nodes bottom-up.
    ///
    /// # Panics
    /// If the policy returns an out-of-range child index or an invalid split
    /// partition.
    pub fn insert<P: InsertPolicy<D> + ?Sized>(&mut self, obj: ObjectRecord<D>, policy: &mut P) {
        let mut path: Vec<(NodeId, usize)> = Vec::with_capacity(self.height);
        let mut cur = self.root;
        while !self.node(cur).is_leaf() {
            let node = self.node(cur);
            let idx = policy.choose_subtree(self, cur, &obj.mbr);
            assert!(
                idx < node.len(),
                "choose_subtree returned {idx} for a node with {} entries",
                node.len()
            );
            let child = node.entries[idx].node();
            path.push((cur, idx));
            cur = child;
        }

        self.node_mut(cur).entries.push(Entry {
            mbr: obj.mbr,
            child: obj.id,
        });
        self.len += 1;

        // AdjustTree: walk back up, splitting and tightening parent entries.
        let mut sibling = self.split_if_overflowing(cur, policy);
        while let Some((parent, idx)) = path.pop() {
            let child_mbr = self.node(cur).mbr().expect("non-empty child");
            let unchanged = sibling.is_none() && self.node(parent).entries[idx].mbr == child_mbr;
            if unchanged {
                return;
            }
            let p = self.node_mut(parent);
            p.entries[idx].mbr = child_mbr;
            if let Some(sib) = sibling {
                let sib_mbr = self.node(sib).mbr().expect("non-empty sibling");
                self.node_mut(parent).entries.push(Entry {
                    mbr: sib_mbr,
                    child: sib.as_child(),
                });
            }
            sibling = self.split_if_overflowing(parent, policy);
            cur = parent;
        }

        if let Some(sib) = sibling {
            self.grow_root(cur, sib);
        }
    }

    /// Inserts every record with the same policy.
    pub fn extend<P, I>(&mut self, objects: I, policy: &mut P)
    where
        P: InsertPolicy<D> + ?Sized,
        I: IntoIterator<Item = ObjectRecord<D>>,
    {
        for obj in objects {
            self.insert(obj, policy);
        }
    }

    fn split_if_overflowing<P: InsertPolicy<D> + ?Sized>(
        &mut self,
        id: NodeId,
        policy: &mut P,
    ) -> Option<NodeId> {
        if self.node(id).len() <= self.max_entries {
            return None;
        }
        let (min, max) = (self.min_entries, self.max_entries);
        let entries = std::mem::take(&mut self.node_mut(id).entries);
        let partition = policy.split(&entries, min, max);
        if let Err(msg) = partition.check(entries.len(), min) {
            panic!("split policy returned an invalid partition: {msg}");
        }
        let level = self.node(id).level;
        let parent = self.node(id).parent;

        let first: Vec<Entry<D>> = partition.first.iter().map(|&i| entries[i]).collect();
        let second: Vec<Entry<D>> = partition.second.iter().map(|&i| entries[i]).collect();

        let new_id = NodeId(self.nodes.len() as u32);
        if level > 0 {
            for e in &second {
                self.node_mut(e.node()).parent = Some(new_id);
            }
        }
        self.node_mut(id).entries = first;
        self.nodes.push(Node {
            level,
            parent,
            entries: second,
        });
        Some(new_id)
    }

    fn grow_root(&mut self, old_root: NodeId, sibling: NodeId) {
        let level = self.node(old_root).level + 1;
        let new_root = NodeId(self.nodes.len() as u32);
        let entries = vec![
            Entry {
                mbr: self.node(old_root).mbr().expect("non-empty root"),
                child: old_root.as_child(),
            },
            Entry {
                mbr: self.node(sibling).mbr().expect("non-empty sibling"),
                child: sibling.as_child(),
            },
        ];
        self.nodes.push(Node {
            level,
            parent: None,
            entries,
        });
        self.node_mut(old_root).parent = Some(new_root);
        self.node_mut(sibling).parent = Some(new_root);
        self.root = new_root;
        self.height += 1;
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node<D> {
        if let Some(journal) = self.journal.as_mut() {
            if id.index() < journal.base_nodes && journal.touched.insert(id.0) {
                journal.saved.push((id.0, self.nodes[id.index()].clone()));
            }
        }
        &mut self.nodes[id.index()]
    }

    #[cfg(test)]
    pub(crate) fn node_mut_for_test(&mut self, id: NodeId) -> &mut Vec<Entry<D>> {
        &mut self.node_mut(id).entries
    }

    /// Records the current state; later mutations can be undone with
    /// [`rollback`](Self::rollback). Replaces any earlier checkpoint.
    pub fn checkpoint(&mut self) {
        self.checkpoint_with(CHECKPOINT_TOKENS.fetch_add(1, Ordering::Relaxed));
    }

    fn checkpoint_with(&mut self, token: u64) {
        let mut touched = self.journal.take().map(|j| j.touched).unwrap_or_default();
        touched.clear();
        self.journal = Some(Journal {
            token,
            base_nodes: self.nodes.len(),
            root: self.root,
            height: self.height,
            len: self.len,
            touched,
            saved: Vec::new(),
        });
    }

    pub fn has_checkpoint(&self) -> bool {
        self.journal.is_some()
    }

    /// Restores the state at the last checkpoint, which stays active.
    ///
    /// Returns `false` (and does nothing) when no checkpoint exists.
    pub fn rollback(&mut self) -> bool {
        let Some(journal) = self.journal.as_mut() else {
            return false;
        };
        for (id, node) in journal.saved.drain(..) {
            self.nodes[id as usize] = node;
        }
        journal.touched.clear();
        self.nodes.truncate(journal.base_nodes);
        self.root = journal.root;
        self.height = journal.height;
        self.len = journal.len;
        true
    }

    /// Makes `self` structurally identical to `src` and checkpoints both.
    ///
    /// When both trees were checkpointed at the same state (for instance by an
    /// earlier `sync_from`), only the nodes touched since then are copied;
    /// otherwise this falls back to a full copy.
    pub fn sync_from(&mut self, src: &mut RTree<D>) {
        let shared = match (&self.journal, &src.journal) {
            (Some(a), Some(b)) => a.token == b.token,
            _ => false,
        };
        if shared {
            self.rollback();
            let src_journal = src.journal.as_ref().expect("checked above");
            let base = src_journal.base_nodes;
            for &id in &src_journal.touched {
                self.nodes[id as usize].clone_from(&src.nodes[id as usize]);
            }
            self.nodes.extend(src.nodes[base..].iter().cloned());
            self.root = src.root;
            self.height = src.height;
            self.len = src.len;
        } else {
            self.nodes.clone_from(&src.nodes);
            self.root = src.root;
            self.height = src.height;
            self.len = src.len;
            self.max_entries = src.max_entries;
            self.min_entries = src.min_entries;
        }
        let token = CHECKPOINT_TOKENS.fetch_add(1, Ordering::Relaxed);
        self.checkpoint_with(token);
        src.checkpoint_with(token);
    }

    /// Discards the checkpoint without rolling back.
    pub fn clear_checkpoint(&mut self) {
        self.journal = None;
    }
}

/// Deep copy of a tree; the copy shares nothing with `src`.
pub fn clone_structure<const D: usize>(src: &RTree<D>) -> RTree<D> {
    src.clone()
}
