//! Binary index format, little-endian throughout:
//!
//! ```text
//! magic "PGMG" | version u32 | dim u32 | count u64 | max_degree u32 | entry u64
//! count × { degree u32 | degree × neighbor u64 }
//! ef_construction u32 | count × global id u64 | count × dim × f32
//! ```
//!
//! `entry` is `u64::MAX` for an empty graph. The trailer after the
//! adjacency section makes an index file self-contained for merging.

use std::path::Path;

use super::{Index, ProximityGraph};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::vecstore::{NodeId, VectorSet};

pub const INDEX_MAGIC: [u8; 4] = *b"PGMG";
pub const INDEX_VERSION: u32 = 1;
const NO_ENTRY: u64 = u64::MAX;

pub fn encode_index(index: &Index) -> Vec<u8> {
    let g = &index.graph;
    let n = g.len();
    let dim = index.vectors.dim();
    let mut out = Vec::with_capacity(36 + n * (4 + 8 + dim * 4) + g.edge_count() * 8);
    out.extend_from_slice(&INDEX_MAGIC);
    out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(g.max_degree() as u32).to_le_bytes());
    let entry = g.entry_point().map_or(NO_ENTRY, u64::from);
    out.extend_from_slice(&entry.to_le_bytes());
    for list in g.adjacency() {
        out.extend_from_slice(&(list.len() as u32).to_le_bytes());
        for &u in list {
            out.extend_from_slice(&u64::from(u).to_le_bytes());
        }
    }
    out.extend_from_slice(&(g.ef_construction() as u32).to_le_bytes());
    for id in index.vectors.ids() {
        out.extend_from_slice(&id.to_le_bytes());
    }
    for x in index.vectors.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(format!("truncated index file while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Decodes and validates an index. Never trusts header counts for
/// allocation beyond what the remaining bytes can hold.
pub fn decode_index(bytes: &[u8]) -> Result<Index> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != INDEX_MAGIC {
        return Err(Error::format("bad magic, not a PGMG index file"));
    }
    let version = r.u32("version")?;
    if version != INDEX_VERSION {
        return Err(Error::format(format!(
            "unsupported index version {version}"
        )));
    }
    let dim = r.u32("dim")? as usize;
    let count = r.u64("count")?;
    // Each node needs at least a degree word and a global id.
    if count > (r.remaining() / 12) as u64 || count >= u64::from(NodeId::MAX) {
        return Err(Error::format(format!(
            "node count {count} exceeds file size"
        )));
    }
    let n = count as usize;
    if n > 0 && dim == 0 {
        return Err(Error::format("non-empty index with dimension 0"));
    }
    let max_degree = r.u32("max_degree")? as usize;
    let entry = r.u64("entry point")?;
    let entry_point = match entry {
        NO_ENTRY => None,
        e if e < count => Some(e as NodeId),
        e => return Err(Error::format(format!("entry point {e} out of range"))),
    };

    let mut adjacency = Vec::with_capacity(n);
    for v in 0..n {
        let degree = r.u32("degree")? as usize;
        if degree > max_degree {
            return Err(Error::format(format!(
                "node {v} has degree {degree} > max_degree {max_degree}"
            )));
        }
        let raw = r.take(degree * 8, "neighbors")?;
        let mut list = Vec::with_capacity(degree);
        for chunk in raw.chunks_exact(8) {
            let u = u64::from_le_bytes(chunk.try_into().unwrap());
            if u >= count {
                return Err(Error::format(format!("node {v} links to missing node {u}")));
            }
            list.push(u as NodeId);
        }
        adjacency.push(list);
    }
    let ef_construction = r.u32("ef_construction")? as usize;
    let graph = ProximityGraph::from_parts(adjacency, max_degree, entry_point, ef_construction)?;

    let ids: Vec<u64> = r
        .take(n * 8, "ids")?
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let floats = n
        .checked_mul(dim)
        .and_then(|x| x.checked_mul(4))
        .ok_or_else(|| Error::format("vector section size overflow"))?;
    let data: Vec<f32> = r
        .take(floats, "vectors")?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if r.remaining() != 0 {
        return Err(Error::format(format!(
            "{} trailing bytes after index",
            r.remaining()
        )));
    }
    let vectors = VectorSet::from_flat(dim, data)
        .and_then(|v| v.with_ids(ids))
        .map_err(|e| Error::format(e.to_string()))?;
    Index::from_parts(vectors, graph)
}

pub fn save_index(index: &Index, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path, &encode_index(index))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Index> {
    decode_index(&fsutil::read(path)?)
}
