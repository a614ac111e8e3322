//! Multi-index merge along a merge-order graph, and the separated-search
//! baseline it replaces.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::{build_cost_matrix, CostKind, CostMatrix, MergeOrderGraph};
use crate::error::{Error, Result};
use crate::pgraph::{Candidate, Index, SearchScratch, SearchStats};
use crate::rnsm::{
    merge_sides, plan_source, MergeGraph, MergeParams, MergeReport, Side, SourcePlan, Strategy,
};
use crate::vecstore::NodeId;

/// One processed plan edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMerge {
    pub source: usize,
    pub target: usize,
    pub report: MergeReport,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiMergeReport {
    /// Plan edges in processing order.
    pub edges: Vec<EdgeMerge>,
    /// Sum over edges plus the final connectivity repair.
    pub total: MergeReport,
    pub elapsed: Duration,
}

impl MultiMergeReport {
    pub fn total_ndc(&self) -> u64 {
        self.total.total_ndc()
    }
}

/// Processing order: ascending cost, but each edge must touch the component
/// built so far until every partition is in it; leftover chords follow in
/// ascending cost.
fn edge_order(plan: &MergeOrderGraph, costs: &CostMatrix) -> Vec<(usize, usize)> {
    let mut sorted = plan.edges().to_vec();
    sorted.sort_by(|p, q| {
        costs
            .get(p.0, p.1)
            .total_cmp(&costs.get(q.0, q.1))
            .then(p.cmp(q))
    });
    let mut in_tree = vec![false; plan.m()];
    let mut used = vec![false; sorted.len()];
    let mut order = Vec::with_capacity(sorted.len());
    if let Some(&(a, _)) = sorted.first() {
        in_tree[a] = true;
    }
    while let Some(i) = (0..sorted.len()).find(|&i| {
        let (a, b) = sorted[i];
        !used[i] && in_tree[a] != in_tree[b]
    }) {
        used[i] = true;
        let (a, b) = sorted[i];
        in_tree[a] = true;
        in_tree[b] = true;
        order.push(sorted[i]);
    }
    order.extend(
        sorted
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(_, e)| *e),
    );
    order
}

/// [`multi_merge_with`] using reverse neighbor sliding on every edge.
pub fn multi_merge(
    indexes: &[&Index],
    plan: &MergeOrderGraph,
    params: &MergeParams,
) -> Result<(Index, MultiMergeReport)> {
    multi_merge_with(indexes, plan, Strategy::Rnsm, params)
}

/// Merges all `indexes` into one graph, cross-linking the two partitions of
/// every plan edge.
///
/// The unified layout is the indexes in order; the entry point is the
/// largest partition's (lowest index on ties). On each edge the smaller
/// partition (higher index on ties) is the source and searches the other
/// partition's original graph. Pivot plans are computed once per source
/// partition and reused.
pub fn multi_merge_with(
    indexes: &[&Index],
    plan: &MergeOrderGraph,
    strategy: Strategy,
    params: &MergeParams,
) -> Result<(Index, MultiMergeReport)> {
    params.validate()?;
    let start = Instant::now();
    let m = indexes.len();
    if m == 0 {
        return Err(Error::usage("no indexes to merge"));
    }
    if plan.m() != m {
        return Err(Error::usage(format!(
            "plan covers {} partitions but {m} indexes were given",
            plan.m()
        )));
    }
    if !plan.is_connected() {
        return Err(Error::usage(
            "merge plan is disconnected; the result would not be one index",
        ));
    }
    let graph = MergeGraph::from_parts(indexes)?;
    let mut offsets = Vec::with_capacity(m);
    let mut acc = 0 as NodeId;
    for idx in indexes {
        offsets.push(acc);
        acc += idx.len() as NodeId;
    }
    let sets: Vec<_> = indexes.iter().map(|i| &i.vectors).collect();
    let costs =
        build_cost_matrix(&sets, CostKind::Centroid).unwrap_or_else(|_| CostMatrix::unit(m));

    let mut report = MultiMergeReport::default();
    let mut plans: HashMap<usize, SourcePlan> = HashMap::new();
    for (a, b) in edge_order(plan, &costs) {
        let (src, tgt) = if indexes[b].len() <= indexes[a].len() {
            (b, a)
        } else {
            (a, b)
        };
        let fresh = strategy == Strategy::Rnsm && !plans.contains_key(&src);
        if fresh {
            plans.insert(src, plan_source(indexes[src], params)?);
        }
        let mut r = merge_sides(
            &graph,
            Side {
                index: indexes[src],
                offset: offsets[src],
            },
            Side {
                index: indexes[tgt],
                offset: offsets[tgt],
            },
            strategy,
            plans.get(&src),
            params,
        )?;
        if strategy == Strategy::Rnsm && !fresh {
            // Expansion and selection were paid on this partition's first edge.
            r.expand_ndc = 0;
            r.expand_time = Duration::ZERO;
            r.select_time = Duration::ZERO;
        }
        report.total.absorb(&r);
        report.edges.push(EdgeMerge {
            source: src,
            target: tgt,
            report: r,
        });
    }
    let mut merged = graph.into_index()?;
    report.total.repair_ndc += merged.repair_connectivity();
    report.total.workers = params.workers.max(1);
    report.elapsed = start.elapsed();
    Ok((merged, report))
}

/// Searches every index independently and keeps the global top `k`.
/// Result ids are positions in the concatenation of the indexes in order.
pub fn separated_search(
    indexes: &[&Index],
    query: &[f32],
    ef: usize,
    k: usize,
    scratch: &mut SearchScratch,
) -> Result<(Vec<Candidate>, SearchStats)> {
    let mut all = Vec::with_capacity(k * indexes.len());
    let mut stats = SearchStats::default();
    let mut offset = 0 as NodeId;
    for idx in indexes {
        let (res, s) = idx.search(query, ef, k, scratch)?;
        all.extend(
            res.into_iter()
                .map(|c| Candidate::new(c.id + offset, c.dist2)),
        );
        stats.accumulate(&s);
        offset += idx.len() as NodeId;
    }
    all.sort_by(Candidate::cmp_by_dist);
    all.truncate(k);
    Ok((all, stats))
}
