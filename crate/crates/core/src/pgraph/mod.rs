//! Flat proximity-graph index: beam search, RNG neighbor selection,
//! incremental construction, and the binary index format.

mod build;
mod io;
mod prune;
mod search;

use std::collections::{HashSet, VecDeque};

pub(crate) use build::link_reverse;
pub use build::{BuildParams, BuildStats};
pub use io::{decode_index, encode_index, load_index, save_index, INDEX_MAGIC, INDEX_VERSION};
pub use prune::prune_rng;
pub(crate) use prune::rank_by_distance;
pub(crate) use search::search_into;
pub use search::{beam_search, beam_search_with, Candidate, SearchScratch, SearchStats};

use crate::error::{Error, Result};
use crate::vecstore::{NodeId, VectorSet};

/// Adjacency lists with a degree cap and a fixed entry point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProximityGraph {
    adjacency: Vec<Vec<NodeId>>,
    max_degree: usize,
    entry_point: Option<NodeId>,
    ef_construction: usize,
}

impl ProximityGraph {
    pub fn new(max_degree: usize, ef_construction: usize) -> Self {
        ProximityGraph {
            adjacency: Vec::new(),
            max_degree,
            entry_point: None,
            ef_construction,
        }
    }

    /// Assembles a graph from raw parts and validates it.
    pub fn from_parts(
        adjacency: Vec<Vec<NodeId>>,
        max_degree: usize,
        entry_point: Option<NodeId>,
        ef_construction: usize,
    ) -> Result<Self> {
        let g = ProximityGraph {
            adjacency,
            max_degree,
            entry_point,
            ef_construction,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v as usize]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn ef_construction(&self) -> usize {
        self.ef_construction
    }

    pub fn entry_point(&self) -> Option<NodeId> {
        self.entry_point
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub(crate) fn push_node(&mut self) -> NodeId {
        self.adjacency.push(Vec::new());
        (self.adjacency.len() - 1) as NodeId
    }

    pub(crate) fn set_neighbors(&mut self, v: NodeId, neighbors: Vec<NodeId>) {
        self.adjacency[v as usize] = neighbors;
    }

    pub(crate) fn set_entry_point(&mut self, entry: Option<NodeId>) {
        self.entry_point = entry;
    }

    /// Checks every structural invariant: ids in range, no self loops, no
    /// duplicates, degree cap, valid entry point.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.max_degree == 0 {
            return Err(Error::format("max_degree must be positive"));
        }
        match self.entry_point {
            None if n > 0 => return Err(Error::format("non-empty graph without entry point")),
            Some(e) if e as usize >= n => {
                return Err(Error::format(format!("entry point {e} out of range")))
            }
            _ => {}
        }
        let mut seen = HashSet::new();
        for (v, list) in self.adjacency.iter().enumerate() {
            if list.len() > self.max_degree {
                return Err(Error::format(format!(
                    "node {v} has degree {} > {}",
                    list.len(),
                    self.max_degree
                )));
            }
            seen.clear();
            for &u in list {
                if u as usize >= n {
                    return Err(Error::format(format!("node {v} links to missing node {u}")));
                }
                if u as usize == v {
                    return Err(Error::format(format!("node {v} links to itself")));
                }
                if !seen.insert(u) {
                    return Err(Error::format(format!("node {v} lists {u} twice")));
                }
            }
        }
        Ok(())
    }

    /// Number of nodes reachable from the entry point along out-edges.
    pub fn reachable_from_entry(&self) -> usize {
        self.reachable_mask().iter().filter(|&&r| r).count()
    }

    /// `mask[v]` is true iff `v` can be reached from the entry point.
    pub fn reachable_mask(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if let Some(entry) = self.entry_point {
            self.mark_reachable(entry, &mut seen);
        }
        seen
    }

    /// Marks everything reachable from `from` that is not marked yet.
    pub(crate) fn mark_reachable(&self, from: NodeId, seen: &mut [bool]) -> usize {
        if std::mem::replace(&mut seen[from as usize], true) {
            return 0;
        }
        let mut queue = VecDeque::from([from]);
        let mut count = 0;
        while let Some(v) = queue.pop_front() {
            count += 1;
            for &u in self.neighbors(v) {
                if !std::mem::replace(&mut seen[u as usize], true) {
                    queue.push_back(u);
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from_entry() == self.len()
    }
}

/// A graph together with the vectors it indexes.
#[derive(Clone, Debug, PartialEq)]
pub struct Index {
    pub vectors: VectorSet,
    pub graph: ProximityGraph,
}

impl Index {
    /// Pairs a graph with its vectors, checking the node counts agree.
    pub fn from_parts(vectors: VectorSet, graph: ProximityGraph) -> Result<Self> {
        if vectors.len() != graph.len() {
            return Err(Error::usage(format!(
                "graph has {} nodes but {} vectors were given",
                graph.len(),
                vectors.len()
            )));
        }
        Ok(Index { vectors, graph })
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    /// Searches from the graph's entry point.
    pub fn search(
        &self,
        query: &[f32],
        ef: usize,
        k: usize,
        scratch: &mut SearchScratch,
    ) -> Result<(Vec<Candidate>, SearchStats)> {
        let Some(entry) = self.graph.entry_point() else {
            return Ok((Vec::new(), SearchStats::default()));
        };
        beam_search_with(&self.graph, &self.vectors, query, ef, k, &[entry], scratch)
    }
}
