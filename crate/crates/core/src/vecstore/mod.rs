//! Dense vector storage, distance kernels, and fvecs/ivecs ingestion.

mod distance;
mod io;
pub mod synth;

use std::collections::HashSet;

pub use distance::{distance_evaluations, l2_distance, l2_squared, l2_squared_scalar};
pub use io::{
    encode_fvecs, encode_ivecs, load_fvecs, load_ivecs, parse_fvecs, parse_ivecs, save_fvecs,
    save_ivecs,
};

use crate::error::{Error, Result};

/// Dense node identifier inside one vector set or graph.
pub type NodeId = u32;

/// Row-major collection of `f32` vectors sharing one dimension.
///
/// Each row carries a 64-bit global id. Sets loaded from disk get ids
/// `0..count`; partitions carry disjoint ranges so merged indexes can map
/// back to source rows. An empty set has `dim() == 0` until the first push.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    dim: usize,
    data: Vec<f32>,
    ids: Vec<u64>,
    next_id: u64,
}

impl VectorSet {
    /// Empty set with a fixed dimension (0 leaves it unset).
    pub fn new(dim: usize) -> Self {
        VectorSet {
            dim,
            data: Vec::new(),
            ids: Vec::new(),
            next_id: 0,
        }
    }

    /// Wraps flat row-major data, assigning ids `0..count`.
    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            if !data.is_empty() {
                return Err(Error::usage("non-empty data with dimension 0"));
            }
            return Ok(VectorSet::new(0));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::usage(format!(
                "data length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        let count = (data.len() / dim) as u64;
        Ok(VectorSet {
            dim,
            data,
            ids: (0..count).collect(),
            next_id: count,
        })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let mut set = VectorSet::new(rows.first().map_or(0, |r| r.as_ref().len()));
        for row in rows {
            set.push(row.as_ref())?;
        }
        Ok(set)
    }

    /// Replaces the id column. Ids must be pairwise distinct.
    pub fn with_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.len() {
            return Err(Error::usage(format!(
                "{} ids for {} vectors",
                ids.len(),
                self.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::usage(format!("duplicate id {dup}")));
        }
        self.ids = ids;
        self.refresh_next_id();
        Ok(self)
    }

    /// Appends a vector with id = previous count (or one past the max id).
    pub fn push(&mut self, v: &[f32]) -> Result<NodeId> {
        let id = self.next_id();
        self.push_with_id(v, id)
    }

    /// Appends a vector carrying the given global id. The id is not checked
    /// against existing ids; callers that need uniqueness use [`with_ids`].
    ///
    /// [`with_ids`]: VectorSet::with_ids
    pub fn push_with_id(&mut self, v: &[f32], id: u64) -> Result<NodeId> {
        if self.dim == 0 {
            if v.is_empty() {
                return Err(Error::usage("cannot push a zero-length vector"));
            }
            self.dim = v.len();
        }
        if v.len() != self.dim {
            return Err(Error::usage(format!(
                "dimension mismatch: set has {}, vector has {}",
                self.dim,
                v.len()
            )));
        }
        if self.len() >= NodeId::MAX as usize {
            return Err(Error::usage("vector set is full"));
        }
        self.data.extend_from_slice(v);
        self.ids.push(id);
        self.next_id = self.next_id.max(id + 1);
        Ok((self.ids.len() - 1) as NodeId)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One past the largest id (0 when empty).
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    fn refresh_next_id(&mut self) {
        self.next_id = self.ids.iter().max().map_or(0, |m| m + 1);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn get(&self, i: NodeId) -> &[f32] {
        let start = i as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn id(&self, i: NodeId) -> u64 {
        self.ids[i as usize]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        // chunks_exact(0) panics; an unset dimension means there are no rows.
        self.data.chunks_exact(self.dim.max(1))
    }

    /// New set holding the given rows of `self`, ids carried over.
    pub fn select(&self, rows: &[NodeId]) -> VectorSet {
        let mut out = VectorSet::new(self.dim);
        out.data.reserve(rows.len() * self.dim);
        for &r in rows {
            out.data.extend_from_slice(self.get(r));
            out.ids.push(self.id(r));
        }
        out.refresh_next_id();
        out
    }

    /// Concatenates sets in order. If the id columns collide they are
    /// remapped to positions in the concatenation.
    pub fn concat(parts: &[&VectorSet]) -> Result<VectorSet> {
        let dim = parts.iter().map(|p| p.dim).find(|d| *d > 0).unwrap_or(0);
        let mut out = VectorSet::new(dim);
        for p in parts {
            if !p.is_empty() && p.dim != dim {
                return Err(Error::usage(format!(
                    "dimension mismatch: {} vs {dim}",
                    p.dim
                )));
            }
            out.data.extend_from_slice(&p.data);
            out.ids.extend_from_slice(&p.ids);
        }
        let mut seen = HashSet::with_capacity(out.ids.len());
        if !out.ids.iter().all(|id| seen.insert(*id)) {
            out.ids = (0..out.ids.len() as u64).collect();
        }
        out.refresh_next_id();
        Ok(out)
    }

    /// Coordinate-wise mean. `None` for an empty set.
    pub fn centroid(&self) -> Option<Vec<f32>> {
        if self.is_empty() {
            return None;
        }
        let mut acc = vec![0.0f64; self.dim];
        for row in self.iter() {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += f64::from(*x);
            }
        }
        let n = self.len() as f64;
        Some(acc.into_iter().map(|a| (a / n) as f32).collect())
    }
}

/// Read access to vectors by node id, the interface graph search runs against.
///
/// Wrapping an implementation lets tests count every distance evaluation.
pub trait Space: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn vector(&self, id: NodeId) -> &[f32];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Squared distance from an external query to node `id`.
    #[inline]
    fn dist2_to(&self, query: &[f32], id: NodeId) -> f32 {
        l2_squared(query, self.vector(id))
    }

    /// Squared distance between two stored nodes.
    #[inline]
    fn dist2(&self, a: NodeId, b: NodeId) -> f32 {
        self.dist2_to(self.vector(a), b)
    }
}

impl Space for VectorSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    fn vector(&self, id: NodeId) -> &[f32] {
        self.get(id)
    }
}

/// Exact k-nearest-neighbor lists for a query set, rows sorted by ascending
/// distance. Entries are the base set's global ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    k: usize,
    neighbors: Vec<Vec<u64>>,
}

impl GroundTruth {
    pub fn new(k: usize, neighbors: Vec<Vec<u64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::usage("ground truth k must be positive"));
        }
        for (q, row) in neighbors.iter().enumerate() {
            if row.len() != k {
                return Err(Error::format(format!(
                    "ground truth row {q} has {} entries, expected {k}",
                    row.len()
                )));
            }
            let distinct: HashSet<_> = row.iter().collect();
            if distinct.len() != k {
                return Err(Error::format(format!("ground truth row {q} repeats an id")));
            }
        }
        Ok(GroundTruth { k, neighbors })
    }

    /// Builds from ivecs rows; `k` is taken from the first row.
    pub fn from_ivecs_rows(rows: &[Vec<i32>]) -> Result<Self> {
        let k = rows.first().map_or(1, Vec::len);
        let mut neighbors = Vec::with_capacity(rows.len());
        for row in rows {
            let mut out = Vec::with_capacity(row.len());
            for &v in row {
                if v < 0 {
                    return Err(Error::format(format!("negative id {v} in ground truth")));
                }
                out.push(v as u64);
            }
            neighbors.push(out);
        }
        GroundTruth::new(k, neighbors)
    }

    pub fn to_ivecs_rows(&self) -> Result<Vec<Vec<i32>>> {
        self.neighbors
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&id| {
                        i32::try_from(id).map_err(|_| {
                            Error::usage(format!("id {id} does not fit in an ivecs entry"))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks that every id names a row of `base`.
    pub fn validate_against(&self, base: &VectorSet) -> Result<()> {
        let ids: HashSet<u64> = base.ids().iter().copied().collect();
        for row in &self.neighbors {
            if let Some(bad) = row.iter().find(|id| !ids.contains(id)) {
                return Err(Error::format(format!(
                    "ground truth id {bad} not in base set"
                )));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn query_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn row(&self, q: usize) -> &[u64] {
        &self.neighbors[q]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.neighbors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_fixes_dimension() {
        let mut s = VectorSet::new(0);
        s.push(&[1.0, 2.0]).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.push(&[1.0]).is_err());
        assert_eq!(s.len(), 1);
        assert_eq!(s.data().len(), s.len() * s.dim());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let s = VectorSet::from_rows(&[[0.0f32], [1.0]]).unwrap();
        assert!(s.clone().with_ids(vec![4, 4]).is_err());
        assert_eq!(s.with_ids(vec![4, 9]).unwrap().ids(), &[4, 9]);
    }

    #[test]
    fn concat_remaps_colliding_ids() {
        let a = VectorSet::from_rows(&[[0.0f32], [1.0]]).unwrap();
        let b = VectorSet::from_rows(&[[2.0f32]]).unwrap();
        let c = VectorSet::concat(&[&a, &b]).unwrap();
        assert_eq!(c.ids(), &[0, 1, 2]);
        let b = b.with_ids(vec![10]).unwrap();
        let c = VectorSet::concat(&[&a, &b]).unwrap();
        assert_eq!(c.ids(), &[0, 1, 10]);
    }

    #[test]
    fn centroid_is_mean() {
        let s = VectorSet::from_rows(&[[0.0f32, 0.0], [2.0, 4.0]]).unwrap();
        assert_eq!(s.centroid().unwrap(), vec![1.0, 2.0]);
        assert!(VectorSet::new(3).centroid().is_none());
    }

    #[test]
    fn ground_truth_rows_checked() {
        assert!(GroundTruth::new(2, vec![vec![1, 2], vec![3, 4]]).is_ok());
        assert!(GroundTruth::new(2, vec![vec![1, 1]]).is_err());
        assert!(GroundTruth::new(2, vec![vec![1]]).is_err());
        assert!(GroundTruth::from_ivecs_rows(&[vec![-1, 2]]).is_err());
    }
}
