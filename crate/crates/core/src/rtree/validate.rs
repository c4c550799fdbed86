use std::collections::HashSet;
use std::fmt;

use super::{NodeId, RTree};

/// A broken structural invariant found by [`RTree::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Underfull { node: NodeId, entries: usize, min: usize },
    Overfull { node: NodeId, entries: usize, max: usize },
    LooseMbr { node: NodeId, entry: usize },
    LevelMismatch { node: NodeId, child: NodeId, expected: u32, found: u32 },
    ParentLink { node: NodeId, expected: Option<NodeId>, found: Option<NodeId> },
    Height { expected: usize, found: usize },
    Unreachable { node: NodeId },
    Revisited { node: NodeId },
    DuplicateObject { id: u64 },
    ObjectCount { expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Underfull { node, entries, min } => {
                write!(f, "node {} underfull: {entries} < {min}", node.0)
            }
            Violation::Overfull { node, entries, max } => {
                write!(f, "node {} overfull: {entries} > {max}", node.0)
            }
            Violation::LooseMbr { node, entry } => {
                write!(f, "loose MBR: node {} entry {entry}", node.0)
            }
            Violation::LevelMismatch { node, child, expected, found } => write!(
                f,
                "node {} child {} has level {found}, expected {expected}",
                node.0, child.0
            ),
            Violation::ParentLink { node, expected, found } => write!(
                f,
                "node {} parent link {:?}, expected {:?}",
                node.0, found, expected
            ),
            Violation::Height { expected, found } => {
                write!(f, "height {found}, root level implies {expected}")
            }
            Violation::Unreachable { node } => write!(f, "node {} unreachable", node.0),
            Violation::Revisited { node } => write!(f, "node {} reachable twice", node.0),
            Violation::DuplicateObject { id } => write!(f, "object {id} stored twice"),
            Violation::ObjectCount { expected, found } => {
                write!(f, "{found} objects stored, tree reports {expected}")
            }
        }
    }
}

impl<const D: usize> RTree<D> {
    /// Checks fill bounds, tight MBRs, balance and parent links. Empty means
    /// the tree is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let root = self.node(self.root);
        let expected_height = root.level() as usize + 1;
        if self.height != expected_height {
            out.push(Violation::Height {
                expected: expected_height,
                found: self.height,
            });
        }
        if root.parent().is_some() {
            out.push(Violation::ParentLink {
                node: self.root,
                expected: None,
                found: root.parent(),
            });
        }

        let mut visited = vec![false; self.node_count()];
        let mut objects = HashSet::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut visited[id.index()], true) {
                out.push(Violation::Revisited { node: id });
                continue;
            }
            let node = self.node(id);
            let n = node.len();
            let is_root = id == self.root;
            let min = if is_root {
                if node.is_leaf() {
                    0
                } else {
                    2
                }
            } else {
                self.min_entries
            };
            if n < min {
                out.push(Violation::Underfull {
                    node: id,
                    entries: n,
                    min,
                });
            }
            if n > self.max_entries {
                out.push(Violation::Overfull {
                    node: id,
                    entries: n,
                    max: self.max_entries,
                });
            }
            if node.is_leaf() {
                for e in node.entries() {
                    if !objects.insert(e.child) {
                        out.push(Violation::DuplicateObject { id: e.child });
                    }
                }
                continue;
            }
            for (i, e) in node.entries().iter().enumerate() {
                let child_id = e.node();
                if child_id.index() >= self.node_count() {
                    out.push(Violation::Unreachable { node: child_id });
                    continue;
                }
                let child = self.node(child_id);
                if child.level() + 1 != node.level() {
                    out.push(Violation::LevelMismatch {
                        node: id,
                        child: child_id,
                        expected: node.level() - 1,
                        found: child.level(),
                    });
                }
                if child.parent() != Some(id) {
                    out.push(Violation::ParentLink {
                        node: child_id,
                        expected: Some(id),
                        found: child.parent(),
                    });
                }
                if child.mbr() != Some(e.mbr) {
                    out.push(Violation::LooseMbr { node: id, entry: i });
                }
                stack.push(child_id);
            }
        }
        for (i, seen) in visited.iter().enumerate() {
            if !seen {
                out.push(Violation::Unreachable {
                    node: NodeId(i as u32),
                });
            }
        }
        if objects.len() != self.len() {
            out.push(Violation::ObjectCount {
                expected: self.len(),
                found: objects.len(),
            });
        }
        out
    }
}
