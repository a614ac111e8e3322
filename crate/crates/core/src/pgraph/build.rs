//! Incremental construction: search the current graph, RNG-prune the
//! visited pool, then add reverse edges.

use std::time::{Duration, Instant};

use super::prune::{prune_rng, rank_by_distance};
use super::search::{search_into, Candidate, SearchScratch};
use super::{Index, ProximityGraph};
use crate::error::{Error, Result};
use crate::vecstore::{NodeId, Space, VectorSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildParams {
    pub max_degree: usize,
    pub ef_construction: usize,
    /// Recorded for reproducibility. Insertion follows row order, so the
    /// graph does not depend on it.
    pub seed: u64,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            max_degree: 16,
            ef_construction: 100,
            seed: 42,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Distance computations across searches and pruning.
    pub ndc: u64,
    pub elapsed: Duration,
}

/// Adds `new` to `list` (the neighbors of `owner`). When the list is full,
/// it is re-pruned over its current members plus `new`. Returns the NDC.
pub(crate) fn link_reverse<S: Space + ?Sized>(
    space: &S,
    list: &mut Vec<NodeId>,
    owner: NodeId,
    new: NodeId,
    max_degree: usize,
) -> u64 {
    if new == owner || list.contains(&new) {
        return 0;
    }
    if list.len() < max_degree {
        list.push(new);
        return 0;
    }
    let (ranked, mut ndc) = rank_by_distance(
        space,
        owner,
        list.iter().copied().chain(std::iter::once(new)),
    );
    let (kept, prune_ndc) = prune_rng(space, owner, &ranked, max_degree);
    ndc += prune_ndc;
    *list = kept;
    ndc
}

/// Links every node that the entry point cannot reach, lowest id first.
///
/// Each stray node is searched for from the entry point and attached as an
/// out-neighbor of the nearest reachable node with a free slot. When every
/// reachable node is full, an edge is swapped out instead, but only one
/// whose removal keeps everything reachable. Connected graphs are left
/// untouched. Returns the NDC.
pub(crate) fn repair_connectivity<S: Space + ?Sized>(
    graph: &mut ProximityGraph,
    space: &S,
    scratch: &mut SearchScratch,
) -> u64 {
    let Some(entry) = graph.entry_point() else {
        return 0;
    };
    let n = graph.len();
    let max_degree = graph.max_degree();
    let mut seen = graph.reachable_mask();
    let mut ndc = 0;
    let mut next = 0;
    while let Some(offset) = seen[next..].iter().position(|&r| !r) {
        let stray = (next + offset) as NodeId;
        next = stray as usize + 1;
        let query = space.vector(stray);
        ndc += search_into(
            graph,
            space,
            query,
            graph.ef_construction(),
            &[entry],
            scratch,
        )
        .ndc;
        let mut hosts: Vec<Candidate> = scratch.results().collect();
        if !hosts
            .iter()
            .any(|c| graph.neighbors(c.id).len() < max_degree)
        {
            // Nothing near has room; widen to every reachable node.
            let known: Vec<NodeId> = hosts.iter().map(|c| c.id).collect();
            for v in (0..n as NodeId).filter(|&v| seen[v as usize] && !known.contains(&v)) {
                ndc += 1;
                hosts.push(Candidate::new(v, space.dist2_to(query, v)));
            }
            hosts.sort_by(Candidate::cmp_by_dist);
        }
        if let Some(h) = hosts
            .iter()
            .find(|c| graph.neighbors(c.id).len() < max_degree)
        {
            graph.adjacency[h.id as usize].push(stray);
            graph.mark_reachable(stray, &mut seen);
            continue;
        }
        'swap: for h in &hosts {
            let (ranked, rank_ndc) =
                rank_by_distance(space, h.id, graph.neighbors(h.id).iter().copied());
            ndc += rank_ndc;
            for far in ranked.iter().rev() {
                let old = graph.adjacency[h.id as usize].clone();
                let list = &mut graph.adjacency[h.id as usize];
                list.retain(|&u| u != far.id);
                list.push(stray);
                let after = graph.reachable_mask();
                if seen.iter().zip(&after).all(|(&was, &now)| !was || now) {
                    seen = after;
                    break 'swap;
                }
                graph.adjacency[h.id as usize] = old;
            }
        }
    }
    ndc
}

impl Index {
    pub fn empty(dim: usize, params: &BuildParams) -> Result<Self> {
        if params.max_degree == 0 || params.ef_construction == 0 {
            return Err(Error::usage(
                "max_degree and ef_construction must be positive",
            ));
        }
        Ok(Index {
            vectors: VectorSet::new(dim),
            graph: ProximityGraph::new(params.max_degree, params.ef_construction),
        })
    }

    /// Builds by inserting every row of `set` in order.
    pub fn build(set: &VectorSet, params: &BuildParams) -> Result<(Index, BuildStats)> {
        let start = Instant::now();
        let mut index = Index::empty(set.dim(), params)?;
        let mut scratch = SearchScratch::new();
        let mut stats = BuildStats::default();
        for (row, &id) in set.iter().zip(set.ids()) {
            stats.ndc += index.insert_with_id(row, id, &mut scratch)?.1;
        }
        stats.ndc += repair_connectivity(&mut index.graph, &index.vectors, &mut scratch);
        stats.elapsed = start.elapsed();
        Ok((index, stats))
    }

    /// Makes every node reachable from the entry point; returns the NDC.
    /// See [`repair_connectivity`].
    pub fn repair_connectivity(&mut self) -> u64 {
        repair_connectivity(&mut self.graph, &self.vectors, &mut SearchScratch::new())
    }

    /// Inserts one vector; returns its node id.
    pub fn insert(&mut self, v: &[f32]) -> Result<NodeId> {
        let id = self.vectors.next_id();
        Ok(self.insert_with_id(v, id, &mut SearchScratch::new())?.0)
    }

    /// Inserts one vector with an explicit global id. Returns the node id
    /// and the number of distance computations spent.
    pub fn insert_with_id(
        &mut self,
        v: &[f32],
        global_id: u64,
        scratch: &mut SearchScratch,
    ) -> Result<(NodeId, u64)> {
        let node = self.vectors.push_with_id(v, global_id)?;
        let pushed = self.graph.push_node();
        debug_assert_eq!(node, pushed);
        let Some(entry) = self.graph.entry_point() else {
            self.graph.set_entry_point(Some(node));
            return Ok((node, 0));
        };

        let max_degree = self.graph.max_degree();
        let ef = self.graph.ef_construction();
        let query = self.vectors.get(node);
        let mut ndc = search_into(&self.graph, &self.vectors, query, ef, &[entry], scratch).ndc;
        let mut pool: Vec<Candidate> = scratch
            .visited_pool()
            .iter()
            .copied()
            .filter(|c| c.id != node)
            .collect();
        pool.sort_by(Candidate::cmp_by_dist);
        let (neighbors, prune_ndc) = prune_rng(&self.vectors, node, &pool, max_degree);
        ndc += prune_ndc;

        for &u in &neighbors {
            let mut list = std::mem::take(&mut self.graph.adjacency[u as usize]);
            ndc += link_reverse(&self.vectors, &mut list, u, node, max_degree);
            self.graph.adjacency[u as usize] = list;
        }
        self.graph.set_neighbors(node, neighbors);
        Ok((node, ndc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton() {
        let set = VectorSet::from_rows(&[[1.0f32, 2.0]]).unwrap();
        let (idx, _) = Index::build(&set, &BuildParams::default()).unwrap();
        assert_eq!(idx.graph.entry_point(), Some(0));
        assert!(idx.graph.neighbors(0).is_empty());
    }

    #[test]
    fn collinear_endpoints_link_middle() {
        let set = VectorSet::from_rows(&[[0.0f32], [1.0], [2.0]]).unwrap();
        let (idx, _) = Index::build(&set, &BuildParams::default()).unwrap();
        idx.graph.validate().unwrap();
        assert_eq!(idx.graph.neighbors(0), &[1]);
        assert_eq!(idx.graph.neighbors(2), &[1]);
        let mut mid = idx.graph.neighbors(1).to_vec();
        mid.sort();
        assert_eq!(mid, vec![0, 2]);
    }

    #[test]
    fn empty_set_gives_empty_graph() {
        let (idx, stats) = Index::build(&VectorSet::new(4), &BuildParams::default()).unwrap();
        assert!(idx.is_empty());
        assert_eq!(idx.graph.entry_point(), None);
        assert_eq!(stats.ndc, 0);
    }

    #[test]
    fn insert_into_empty_becomes_entry() {
        let mut idx = Index::empty(2, &BuildParams::default()).unwrap();
        let id = idx.insert(&[0.5, 0.5]).unwrap();
        assert_eq!(idx.graph.entry_point(), Some(id));
        assert!(idx.insert(&[0.5]).is_err());
    }

    #[test]
    fn reverse_overflow_reprunes() {
        let set = VectorSet::from_rows(&[[0.0f32], [1.0], [-1.0], [2.0]]).unwrap();
        let mut list = vec![1, 2];
        link_reverse(&set, &mut list, 0, 3, 2);
        // 3 is occluded by 1, so the list is unchanged.
        assert_eq!(list, vec![1, 2]);
    }
}
