//! Versioned binary snapshots of a tree.
//!
//! Layout, little-endian:
//!
//! ```text
//! magic "RLRTSNAP" | version u32 | M u32 | m u32 | dims u32
//! node_count u64 | root u32 | height u32 | len u64
//! per node: level u32 | parent u32 (u32::MAX = none) | entries u32
//!           per entry: lo f64 x dims | hi f64 x dims | child u64
//! sha256 of everything above (32 bytes)
//! ```

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::rtree::{Entry, NodeId, RTree};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RLRTSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;
const NO_PARENT: u32 = u32::MAX;

pub fn snapshot_to_bytes<const D: usize>(tree: &RTree<D>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + tree.node_count() * tree.max_entries() * (16 * D + 8));
    out.extend_from_slice(SNAPSHOT_MAGIC);
    for v in [
        SNAPSHOT_VERSION,
        tree.max_entries() as u32,
        tree.min_entries() as u32,
        D as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(tree.node_count() as u64).to_le_bytes());
    out.extend_from_slice(&(tree.root().index() as u32).to_le_bytes());
    out.extend_from_slice(&(tree.height() as u32).to_le_bytes());
    out.extend_from_slice(&(tree.len() as u64).to_le_bytes());
    for (_, node) in tree.nodes() {
        out.extend_from_slice(&node.level().to_le_bytes());
        let parent = node.parent().map_or(NO_PARENT, |p| p.index() as u32);
        out.extend_from_slice(&parent.to_le_bytes());
        out.extend_from_slice(&(node.len() as u32).to_le_bytes());
        for e in node.entries() {
            for v in e.mbr.lo().iter().chain(e.mbr.hi()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&e.child.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt("snapshot truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Decodes and verifies a snapshot: checksum, header, and the full set of
/// structural invariants.
pub fn snapshot_from_bytes<const D: usize>(bytes: &[u8]) -> Result<RTree<D>> {
    if bytes.len() < SNAPSHOT_MAGIC.len() + 32 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Corrupt("not a tree snapshot".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Corrupt("snapshot checksum mismatch".into()));
    }
    let mut c = Cursor { bytes: body, pos: 8 };
    let version = c.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Corrupt(format!(
            "snapshot version {version} (supported: {SNAPSHOT_VERSION})"
        )));
    }
    let max_entries = c.u32()? as usize;
    let min_entries = c.u32()? as usize;
    let dims = c.u32()? as usize;
    if dims != D {
        return Err(Error::DimensionMismatch {
            expected: D,
            found: dims,
        });
    }
    RTree::<D>::new(max_entries, min_entries)?;
    let node_count = c.u64()? as usize;
    let root = c.u32()? as usize;
    let height = c.u32()? as usize;
    let len = c.u64()? as usize;
    if root >= node_count {
        return Err(Error::Corrupt("root outside the arena".into()));
    }
    // Each node takes at least 12 bytes; refuses absurd counts before
    // allocating.
    if node_count > body.len() / 12 {
        return Err(Error::Corrupt("node count exceeds snapshot size".into()));
    }
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let level = c.u32()?;
        let parent = match c.u32()? {
            NO_PARENT => None,
            p if (p as usize) < node_count => Some(NodeId(p)),
            _ => return Err(Error::Corrupt("parent outside the arena".into())),
        };
        let count = c.u32()? as usize;
        if count > max_entries {
            return Err(Error::Corrupt("node above capacity".into()));
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let mut lo = [0.0; D];
            let mut hi = [0.0; D];
            for v in lo.iter_mut() {
                *v = c.f64()?;
            }
            for v in hi.iter_mut() {
                *v = c.f64()?;
            }
            let mbr = Rect::new(lo, hi).map_err(|e| Error::Corrupt(e.to_string()))?;
            let child = c.u64()?;
            if level > 0 && child as usize >= node_count {
                return Err(Error::Corrupt("child outside the arena".into()));
            }
            entries.push(Entry { mbr, child });
        }
        nodes.push(RTree::raw_node(level, parent, entries));
    }
    if c.pos != body.len() {
        return Err(Error::Corrupt("trailing bytes after the arena".into()));
    }
    let tree = RTree::from_parts(nodes, NodeId(root as u32), max_entries, min_entries, height, len);
    if let Some(v) = tree.validate().first() {
        return Err(Error::Corrupt(format!("snapshot violates tree invariants: {v}")));
    }
    Ok(tree)
}

pub fn save_snapshot<const D: usize>(path: &Path, tree: &RTree<D>) -> Result<()> {
    fs::write(path, snapshot_to_bytes(tree))?;
    Ok(())
}

pub fn load_snapshot<const D: usize>(path: &Path) -> Result<RTree<D>> {
    snapshot_from_bytes(&fs::read(path)?)
}

/// Reads only the dimension field of a snapshot header.
pub fn snapshot_dims(path: &Path) -> Result<usize> {
    let bytes = fs::read(path)?;
    if bytes.len() < 24 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Corrupt("not a tree snapshot".into()));
    }
    Ok(u32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes")) as usize)
}
