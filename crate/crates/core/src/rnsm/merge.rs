//! Cross-linking a source index into a target index inside a unified graph.

use std::time::{Duration, Instant};

use parking_lot::Mutex;

use super::parallel::map_nodes;
use super::pivots::{build_reverse_index, expand_neighbors, select_pivots, PivotPlan};
use crate::error::{Error, Result};
use crate::pgraph::{
    prune_rng, rank_by_distance, search_into, Candidate, Index, ProximityGraph, SearchScratch,
};
use crate::vecstore::{NodeId, Space, VectorSet};

/// Follower beam width when none is given. A follower starts next to its
/// answer, so a beam well below `ef_merge` suffices.
pub const DEFAULT_FOLLOWER_EF: usize = 32;

/// Knobs for a two-index merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergeParams {
    /// Neighbor-expansion size (`k⁺`).
    pub k_plus: usize,
    /// Reverse-kNN size.
    pub k: usize,
    /// Beam width for pivot (naive) searches into the target.
    pub ef_merge: usize,
    /// Beam width for follower (sliding) searches. `None` means
    /// [`DEFAULT_FOLLOWER_EF`] clamped to `[k_cross, ef_merge]`.
    pub follower_ef: Option<usize>,
    /// Cross-index neighbors requested per node.
    pub k_cross: usize,
    pub expand_pad: usize,
    pub workers: usize,
}

impl Default for MergeParams {
    fn default() -> Self {
        MergeParams {
            k_plus: 20,
            k: 5,
            ef_merge: 100,
            follower_ef: None,
            k_cross: 10,
            expand_pad: super::pivots::DEFAULT_EXPAND_PAD,
            workers: 1,
        }
    }
}

impl MergeParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.k_plus {
            return Err(Error::usage(format!(
                "need 1 <= k <= k_plus, got k={} k_plus={}",
                self.k, self.k_plus
            )));
        }
        if self.k_cross == 0 {
            return Err(Error::usage("k_cross must be at least 1"));
        }
        if self.ef_merge < self.k_cross || self.follower_ef() < self.k_cross {
            return Err(Error::usage(format!(
                "ef ({}/{}) must be at least k_cross ({})",
                self.ef_merge,
                self.follower_ef(),
                self.k_cross
            )));
        }
        Ok(())
    }

    pub fn follower_ef(&self) -> usize {
        self.follower_ef
            .unwrap_or_else(|| DEFAULT_FOLLOWER_EF.max(self.k_cross).min(self.ef_merge))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Every source node searches the target from its default entry point.
    Naive,
    /// Reverse neighbor sliding merge.
    Rnsm,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::Rnsm => "rnsm",
        }
    }
}

/// Cost and timing record of one two-index merge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MergeReport {
    pub source_nodes: usize,
    pub target_nodes: usize,
    pub pivots: usize,
    pub followers: usize,
    /// Neighbor-expansion searches in the source graph.
    pub expand_ndc: u64,
    /// Naive searches into the target (pivots, or every node for naive merge).
    pub naive_ndc: u64,
    /// Sliding searches into the target.
    pub slide_ndc: u64,
    /// Candidate ranking and pruning while updating adjacency.
    pub update_ndc: u64,
    /// Reattaching nodes the merged entry point could not reach.
    pub repair_ndc: u64,
    pub expand_time: Duration,
    pub select_time: Duration,
    pub merge_time: Duration,
    /// Mean NDC of the naive searches performed (0 if none).
    pub gamma: f64,
    /// (pivot-to-follower distance, follower search NDC) per follower.
    pub samples: Vec<(f32, u64)>,
    pub workers: usize,
}

impl MergeReport {
    /// NDC spent searching: expansion, naive and sliding searches.
    pub fn search_ndc(&self) -> u64 {
        self.expand_ndc + self.naive_ndc + self.slide_ndc
    }

    /// Every distance computation of the merge.
    pub fn total_ndc(&self) -> u64 {
        self.search_ndc() + self.update_ndc + self.repair_ndc
    }

    pub fn sliding_ratio(&self) -> f64 {
        let n = self.pivots + self.followers;
        if n == 0 {
            0.0
        } else {
            self.followers as f64 / n as f64
        }
    }

    pub fn wall_time(&self) -> Duration {
        self.expand_time + self.select_time + self.merge_time
    }

    /// Folds another report in (used to aggregate multi-index merges).
    pub fn absorb(&mut self, other: &MergeReport) {
        let naive_before = self.naive_searches();
        self.source_nodes += other.source_nodes;
        self.target_nodes += other.target_nodes;
        self.pivots += other.pivots;
        self.followers += other.followers;
        self.expand_ndc += other.expand_ndc;
        self.naive_ndc += other.naive_ndc;
        self.slide_ndc += other.slide_ndc;
        self.update_ndc += other.update_ndc;
        self.repair_ndc += other.repair_ndc;
        self.expand_time += other.expand_time;
        self.select_time += other.select_time;
        self.merge_time += other.merge_time;
        self.samples.extend_from_slice(&other.samples);
        self.workers = self.workers.max(other.workers);
        let searches = naive_before + other.naive_searches();
        self.gamma = if searches == 0 {
            0.0
        } else {
            self.naive_ndc as f64 / searches as f64
        };
    }

    fn naive_searches(&self) -> usize {
        self.pivots
    }
}

/// A unified graph under construction. Each adjacency list sits behind its
/// own lock; writers hold at most one lock at a time and readers copy a
/// list out whole, so a list is always seen entirely before or after an
/// update.
pub struct MergeGraph {
    vectors: VectorSet,
    lists: Vec<Mutex<Vec<NodeId>>>,
    max_degree: usize,
    ef_construction: usize,
    entry_point: Option<NodeId>,
}

impl MergeGraph {
    /// Concatenates the parts; node ids of part `i` are shifted by the
    /// sizes of the parts before it. The entry point is the largest part's
    /// (first such part on ties).
    pub fn from_parts(parts: &[&Index]) -> Result<Self> {
        let sets: Vec<&VectorSet> = parts.iter().map(|p| &p.vectors).collect();
        let vectors = VectorSet::concat(&sets)?;
        let mut lists = Vec::with_capacity(vectors.len());
        let mut offset = 0 as NodeId;
        let mut entry_point = None;
        let mut largest = 0usize;
        for p in parts {
            for list in p.graph.adjacency() {
                lists.push(Mutex::new(list.iter().map(|&u| u + offset).collect()));
            }
            if let Some(e) = p.graph.entry_point() {
                if entry_point.is_none() || p.len() > largest {
                    entry_point = Some(e + offset);
                    largest = p.len();
                }
            }
            offset += p.len() as NodeId;
        }
        Ok(MergeGraph {
            vectors,
            lists,
            max_degree: parts
                .iter()
                .map(|p| p.graph.max_degree())
                .max()
                .unwrap_or(1),
            ef_construction: parts
                .iter()
                .map(|p| p.graph.ef_construction())
                .max()
                .unwrap_or(1),
            entry_point,
        })
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn vectors(&self) -> &VectorSet {
        &self.vectors
    }

    /// Snapshot of one adjacency list.
    pub fn neighbors(&self, v: NodeId) -> Vec<NodeId> {
        self.lists[v as usize].lock().clone()
    }

    /// Merges cross-index results into `node`'s neighborhood: the union of
    /// its current neighbors and the first `k_cross` results is RNG-pruned,
    /// then every surviving cross edge gets a reverse edge (re-pruning the
    /// far end on overflow). `cross` must be ascending by distance to
    /// `node` with distances measured in this graph's vectors. Returns NDC.
    pub fn update_graph(&self, node: NodeId, cross: &[Candidate], k_cross: usize) -> u64 {
        let cross = &cross[..cross.len().min(k_cross)];
        if cross.is_empty() {
            return 0;
        }
        let mut ndc = 0;
        let survivors: Vec<NodeId> = {
            let mut list = self.lists[node as usize].lock();
            let (mut ranked, rank_ndc) =
                rank_by_distance(&self.vectors, node, list.iter().copied());
            ndc += rank_ndc;
            ranked.extend(cross.iter().filter(|c| !list.contains(&c.id)).copied());
            ranked.sort_by(Candidate::cmp_by_dist);
            ranked.dedup_by_key(|c| c.id);
            let (kept, prune_ndc) = prune_rng(&self.vectors, node, &ranked, self.max_degree);
            ndc += prune_ndc;
            *list = kept;
            list.iter()
                .copied()
                .filter(|u| cross.iter().any(|c| c.id == *u))
                .collect()
        };
        for c in survivors {
            let mut list = self.lists[c as usize].lock();
            ndc += crate::pgraph::link_reverse(&self.vectors, &mut list, c, node, self.max_degree);
        }
        ndc
    }

    pub fn into_index(self) -> Result<Index> {
        let adjacency: Vec<Vec<NodeId>> = self.lists.into_iter().map(Mutex::into_inner).collect();
        let graph = ProximityGraph::from_parts(
            adjacency,
            self.max_degree,
            self.entry_point,
            self.ef_construction,
        )?;
        Index::from_parts(self.vectors, graph)
    }
}

/// One side of a merge: the pristine input index and where its nodes sit
/// in the unified graph. Searches run on the pristine graph only.
#[derive(Clone, Copy)]
pub(crate) struct Side<'a> {
    pub index: &'a Index,
    pub offset: NodeId,
}

impl Side<'_> {
    fn search(
        &self,
        query: &[f32],
        ef: usize,
        entries: &[NodeId],
        k: usize,
        scratch: &mut SearchScratch,
    ) -> (Vec<Candidate>, u64) {
        let stats = search_into(
            &self.index.graph,
            &self.index.vectors,
            query,
            ef,
            entries,
            scratch,
        );
        (scratch.results().take(k).collect(), stats.ndc)
    }

    fn unified(&self, local: &[Candidate]) -> Vec<Candidate> {
        local
            .iter()
            .map(|c| Candidate::new(c.id + self.offset, c.dist2))
            .collect()
    }
}

/// Pivot plan for a source index plus the work spent deriving it.
#[derive(Clone, Debug)]
pub(crate) struct SourcePlan {
    pub plan: PivotPlan,
    pub expand_ndc: u64,
    pub expand_time: Duration,
    pub select_time: Duration,
}

pub(crate) fn plan_source(source: &Index, params: &MergeParams) -> Result<SourcePlan> {
    let n = source.len();
    let start = Instant::now();
    // Tiny sources cannot supply k_plus neighbors; expand what exists.
    let k_plus = params.k_plus.min(n.saturating_sub(1));
    let expansion = if k_plus == 0 {
        super::pivots::Expansion {
            lists: vec![Vec::new(); n],
            ndc: 0,
        }
    } else {
        expand_neighbors(source, k_plus, params.expand_pad, params.workers)?
    };
    let expand_time = start.elapsed();
    let start = Instant::now();
    let rindex = build_reverse_index(&expansion.lists, params.k);
    let plan = select_pivots(&rindex);
    Ok(SourcePlan {
        plan,
        expand_ndc: expansion.ndc,
        expand_time,
        select_time: start.elapsed(),
    })
}

struct UnitOutcome {
    naive_ndc: u64,
    slide_ndc: u64,
    update_ndc: u64,
    samples: Vec<(f32, u64)>,
}

/// Links every node of `source` to its nearest nodes in `target` inside
/// `graph`. For [`Strategy::Rnsm`], `plan` must be the source's pivot plan.
pub(crate) fn merge_sides(
    graph: &MergeGraph,
    source: Side<'_>,
    target: Side<'_>,
    strategy: Strategy,
    plan: Option<&SourcePlan>,
    params: &MergeParams,
) -> Result<MergeReport> {
    params.validate()?;
    if !source.index.is_empty()
        && !target.index.is_empty()
        && source.index.dim() != target.index.dim()
    {
        return Err(Error::usage(format!(
            "dimension mismatch: source {} vs target {}",
            source.index.dim(),
            target.index.dim()
        )));
    }
    let mut report = MergeReport {
        source_nodes: source.index.len(),
        target_nodes: target.index.len(),
        workers: params.workers.max(1),
        ..Default::default()
    };
    let Some(target_entry) = target.index.graph.entry_point() else {
        return Ok(report);
    };
    if source.index.is_empty() {
        return Ok(report);
    }
    let k_cross = params.k_cross;
    let start = Instant::now();
    let outcomes: Vec<UnitOutcome> = match strategy {
        Strategy::Naive => {
            report.pivots = source.index.len();
            map_nodes(
                params.workers,
                source.index.len(),
                SearchScratch::new,
                |scratch, s| {
                    let s = s as NodeId;
                    let (res, ndc) = target.search(
                        source.index.vectors.get(s),
                        params.ef_merge,
                        &[target_entry],
                        k_cross,
                        scratch,
                    );
                    let update_ndc =
                        graph.update_graph(source.offset + s, &target.unified(&res), k_cross);
                    UnitOutcome {
                        naive_ndc: ndc,
                        slide_ndc: 0,
                        update_ndc,
                        samples: Vec::new(),
                    }
                },
            )
        }
        Strategy::Rnsm => {
            let sp = plan.ok_or_else(|| Error::usage("sliding merge needs a pivot plan"))?;
            report.expand_ndc = sp.expand_ndc;
            report.expand_time = sp.expand_time;
            report.select_time = sp.select_time;
            report.pivots = sp.plan.pivots.len();
            report.followers = sp.plan.follower_count();
            let vectors = &source.index.vectors;
            map_nodes(
                params.workers,
                sp.plan.pivots.len(),
                SearchScratch::new,
                |scratch, i| {
                    let p = sp.plan.pivots[i];
                    let (res_p, naive_ndc) = target.search(
                        vectors.get(p),
                        params.ef_merge,
                        &[target_entry],
                        k_cross,
                        scratch,
                    );
                    let mut update_ndc =
                        graph.update_graph(source.offset + p, &target.unified(&res_p), k_cross);
                    let entries: Vec<NodeId> = res_p.iter().map(|c| c.id).collect();
                    let mut slide_ndc = 0;
                    let mut samples = Vec::with_capacity(sp.plan.followers[i].len());
                    for &y in &sp.plan.followers[i] {
                        let (res_y, ndc) = target.search(
                            vectors.get(y),
                            params.follower_ef(),
                            &entries,
                            k_cross,
                            scratch,
                        );
                        slide_ndc += ndc;
                        samples.push((vectors.dist2(p, y).sqrt(), ndc));
                        update_ndc +=
                            graph.update_graph(source.offset + y, &target.unified(&res_y), k_cross);
                    }
                    UnitOutcome {
                        naive_ndc,
                        slide_ndc,
                        update_ndc,
                        samples,
                    }
                },
            )
        }
    };
    report.merge_time = start.elapsed();
    for o in outcomes {
        report.naive_ndc += o.naive_ndc;
        report.slide_ndc += o.slide_ndc;
        report.update_ndc += o.update_ndc;
        report.samples.extend(o.samples);
    }
    report.gamma = if report.pivots == 0 {
        0.0
    } else {
        report.naive_ndc as f64 / report.pivots as f64
    };
    Ok(report)
}

/// Merges two indexes. The unified layout is `a`'s nodes then `b`'s; the
/// smaller index is the source (`b` on ties) and the entry point is the
/// larger index's (`a`'s on ties).
pub fn merge_pair(
    a: &Index,
    b: &Index,
    strategy: Strategy,
    params: &MergeParams,
) -> Result<(Index, MergeReport)> {
    params.validate()?;
    let graph = MergeGraph::from_parts(&[a, b])?;
    let side_a = Side {
        index: a,
        offset: 0,
    };
    let side_b = Side {
        index: b,
        offset: a.len() as NodeId,
    };
    let (source, target) = if a.len() < b.len() {
        (side_a, side_b)
    } else {
        (side_b, side_a)
    };
    let plan = match strategy {
        Strategy::Rnsm => Some(plan_source(source.index, params)?),
        Strategy::Naive => None,
    };
    let mut report = merge_sides(&graph, source, target, strategy, plan.as_ref(), params)?;
    let mut merged = graph.into_index()?;
    report.repair_ndc = merged.repair_connectivity();
    Ok((merged, report))
}

/// Naive merge of `source` into `target`. Layout is target then source.
/// If the source is the larger index the roles are swapped.
pub fn naive_merge(
    source: &Index,
    target: &Index,
    params: &MergeParams,
) -> Result<(Index, MergeReport)> {
    merge_pair(target, source, Strategy::Naive, params)
}

/// Reverse neighbor sliding merge of `source` into `target`: expand the
/// source's neighborhoods, pick hub pivots by reverse-kNN count, search the
/// target once per pivot, and slide every follower from its pivot's
/// results. Layout is target then source; roles swap if the source is larger.
pub fn rnsm_merge(
    source: &Index,
    target: &Index,
    params: &MergeParams,
) -> Result<(Index, MergeReport)> {
    merge_pair(target, source, Strategy::Rnsm, params)
}
