//! Best-first beam search over a proximity graph.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use super::ProximityGraph;
use crate::error::{Error, Result};
use crate::vecstore::{NodeId, Space};

/// A node paired with its squared distance to the current query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub id: NodeId,
    pub dist2: f32,
}

impl Candidate {
    pub fn new(id: NodeId, dist2: f32) -> Self {
        Candidate { id, dist2 }
    }

    /// Euclidean distance.
    pub fn dist(&self) -> f32 {
        self.dist2.sqrt()
    }

    /// Ascending distance, lower id first on ties.
    #[inline]
    pub fn cmp_by_dist(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.id.cmp(&other.id))
    }
}

/// Per-query cost counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Number of distance computations, seeding included.
    pub ndc: u64,
    /// Expanded nodes that were not seeds.
    pub hops: u64,
    pub elapsed: Duration,
}

impl SearchStats {
    pub fn accumulate(&mut self, other: &SearchStats) {
        self.ndc += other.ndc;
        self.hops += other.hops;
        self.elapsed += other.elapsed;
    }
}

#[derive(Clone, Copy)]
struct Slot {
    cand: Candidate,
    expanded: bool,
}

/// Reusable buffers for repeated searches over graphs of up to `capacity`
/// nodes. One scratch per worker thread.
#[derive(Default)]
pub struct SearchScratch {
    stamp: Vec<u32>,
    epoch: u32,
    beam: Vec<Slot>,
    pool: Vec<Candidate>,
    seeds: Vec<NodeId>,
    neighbors: Vec<NodeId>,
}

impl SearchScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n: usize) {
        if self.stamp.len() < n {
            self.stamp.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.beam.clear();
        self.pool.clear();
        self.seeds.clear();
    }

    #[inline]
    fn visit(&mut self, id: NodeId) -> bool {
        let s = &mut self.stamp[id as usize];
        if *s == self.epoch {
            false
        } else {
            *s = self.epoch;
            true
        }
    }

    /// The current beam, ascending. Valid until the next search.
    pub fn results(&self) -> impl Iterator<Item = Candidate> + '_ {
        self.beam.iter().map(|s| s.cand)
    }

    /// Every node whose distance was evaluated by the last search, in
    /// evaluation order.
    pub fn visited_pool(&self) -> &[Candidate] {
        &self.pool
    }

    /// Inserts into the bounded beam; returns the insertion position.
    #[inline]
    fn offer(&mut self, cand: Candidate, ef: usize) -> Option<usize> {
        if self.beam.len() >= ef {
            let worst = &self.beam[self.beam.len() - 1].cand;
            if cand.cmp_by_dist(worst) != Ordering::Less {
                return None;
            }
        }
        let pos = self
            .beam
            .partition_point(|s| s.cand.cmp_by_dist(&cand) == Ordering::Less);
        self.beam.insert(
            pos,
            Slot {
                cand,
                expanded: false,
            },
        );
        self.beam.truncate(ef);
        Some(pos)
    }
}

/// Core loop; assumes validated arguments. Leaves the final beam and the
/// visited pool in `scratch`.
pub(crate) fn search_into<S: Space + ?Sized>(
    graph: &ProximityGraph,
    space: &S,
    query: &[f32],
    ef: usize,
    entries: &[NodeId],
    scratch: &mut SearchScratch,
) -> SearchStats {
    let start = Instant::now();
    let mut stats = SearchStats::default();
    scratch.reset(graph.len());
    for &e in entries {
        if !scratch.visit(e) {
            continue;
        }
        let cand = Candidate::new(e, space.dist2_to(query, e));
        stats.ndc += 1;
        scratch.pool.push(cand);
        scratch.seeds.push(e);
        scratch.offer(cand, ef);
    }

    let mut next = 0;
    loop {
        while next < scratch.beam.len() && scratch.beam[next].expanded {
            next += 1;
        }
        if next >= scratch.beam.len() {
            break;
        }
        scratch.beam[next].expanded = true;
        let u = scratch.beam[next].cand.id;
        if !scratch.seeds.contains(&u) {
            stats.hops += 1;
        }
        let mut lowest_insert = next + 1;
        scratch.neighbors.clear();
        scratch.neighbors.extend_from_slice(graph.neighbors(u));
        for i in 0..scratch.neighbors.len() {
            let v = scratch.neighbors[i];
            if !scratch.visit(v) {
                continue;
            }
            let cand = Candidate::new(v, space.dist2_to(query, v));
            stats.ndc += 1;
            scratch.pool.push(cand);
            if let Some(pos) = scratch.offer(cand, ef) {
                lowest_insert = lowest_insert.min(pos);
            }
        }
        next = lowest_insert;
    }
    stats.elapsed = start.elapsed();
    stats
}

pub(crate) fn check_entries(graph: &ProximityGraph, entries: &[NodeId]) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::usage("beam search needs at least one entry point"));
    }
    if let Some(bad) = entries.iter().find(|&&e| e as usize >= graph.len()) {
        return Err(Error::usage(format!(
            "entry {bad} out of range for a graph of {} nodes",
            graph.len()
        )));
    }
    Ok(())
}

/// Beam search (best-first with a candidate set bounded at `ef`).
///
/// Returns up to `k` candidates ascending by distance plus cost counters.
/// Ties on distance resolve to the lower node id, so the result is a pure
/// function of the graph, query, `ef`, and entries.
pub fn beam_search<S: Space + ?Sized>(
    graph: &ProximityGraph,
    space: &S,
    query: &[f32],
    ef: usize,
    k: usize,
    entries: &[NodeId],
) -> Result<(Vec<Candidate>, SearchStats)> {
    let mut scratch = SearchScratch::new();
    beam_search_with(graph, space, query, ef, k, entries, &mut scratch)
}

/// [`beam_search`] reusing caller-owned buffers.
pub fn beam_search_with<S: Space + ?Sized>(
    graph: &ProximityGraph,
    space: &S,
    query: &[f32],
    ef: usize,
    k: usize,
    entries: &[NodeId],
    scratch: &mut SearchScratch,
) -> Result<(Vec<Candidate>, SearchStats)> {
    if graph.is_empty() {
        return Ok((Vec::new(), SearchStats::default()));
    }
    if k == 0 || ef < k {
        return Err(Error::usage(format!(
            "need 1 <= k <= ef, got k={k} ef={ef}"
        )));
    }
    if space.len() != graph.len() {
        return Err(Error::usage(format!(
            "graph has {} nodes but the vector set has {}",
            graph.len(),
            space.len()
        )));
    }
    if query.len() != space.dim() {
        return Err(Error::usage(format!(
            "query dimension {} does not match {}",
            query.len(),
            space.dim()
        )));
    }
    check_entries(graph, entries)?;
    let stats = search_into(graph, space, query, ef, entries, scratch);
    Ok((scratch.results().take(k).collect(), stats))
}
