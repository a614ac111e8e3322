//! End-to-end comparisons: merge strategies on identical partitions, and
//! merge-order topologies on identical cluster partitions.

use petgraph::algo::min_spanning_tree;
use petgraph::data::Element;
use petgraph::graph::UnGraph;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{bench_search, bench_separated, BenchRun};
use crate::error::{Error, Result};
use crate::mos::{
    build_cost_matrix, default_degree_bound, mos_plan, multi_merge_with, pairwise_plan, CostKind,
    CostMatrix, MergeOrderGraph,
};
use crate::pgraph::{BuildParams, Index};
use crate::rnsm::{MergeParams, Strategy};
use crate::vecstore::{GroundTruth, VectorSet};

#[derive(Clone, Debug, PartialEq)]
pub struct CompareParams {
    pub build: BuildParams,
    pub merge: MergeParams,
    pub efs: Vec<usize>,
    pub k: usize,
    /// MOS degree bound; `None` uses `min(4, m - 1)`.
    pub degree_bound: Option<usize>,
    pub delta: Option<usize>,
    pub seed: u64,
}

impl Default for CompareParams {
    fn default() -> Self {
        CompareParams {
            build: BuildParams::default(),
            merge: MergeParams::default(),
            efs: vec![16, 32, 64, 128, 256],
            k: 10,
            degree_bound: None,
            delta: Some(2),
            seed: 42,
        }
    }
}

impl CompareParams {
    fn degree_bound(&self, m: usize) -> usize {
        self.degree_bound.unwrap_or_else(|| default_degree_bound(m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MergeStrategy {
    /// Naive merge over every pair.
    Naive,
    /// Sliding merge over every pair.
    Rnsm,
    /// Sliding merge along a MOS plan with unit costs.
    RnsmMosRandom,
    /// Sliding merge along a MOS plan with centroid costs.
    RnsmMosCentroid,
    Rebuild,
    Separated,
}

impl MergeStrategy {
    pub const ALL: [MergeStrategy; 6] = [
        MergeStrategy::Naive,
        MergeStrategy::Rnsm,
        MergeStrategy::RnsmMosRandom,
        MergeStrategy::RnsmMosCentroid,
        MergeStrategy::Rebuild,
        MergeStrategy::Separated,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            MergeStrategy::Naive => "naive",
            MergeStrategy::Rnsm => "rnsm",
            MergeStrategy::RnsmMosRandom => "rnsm+mos-random",
            MergeStrategy::RnsmMosCentroid => "rnsm+mos-centroid",
            MergeStrategy::Rebuild => "rebuild",
            MergeStrategy::Separated => "separated",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        MergeStrategy::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::usage(format!("unknown strategy {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyRow {
    pub strategy: MergeStrategy,
    /// Pairwise merges performed (0 for rebuild and separated search).
    pub edges: usize,
    pub merge_ms: f64,
    pub merge_ndc: u64,
    pub ndc_speedup_vs_nm: f64,
    pub ndc_speedup_vs_rebuild: f64,
    pub time_speedup_vs_nm: f64,
    pub time_speedup_vs_rebuild: f64,
    pub bench: BenchRun,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Runs each strategy on the same partitions, queries and ground truth.
/// Naive merge and rebuild are always included since speedups are
/// measured against them. Partition ids must be disjoint.
pub fn compare_merge_strategies(
    parts: &[VectorSet],
    queries: &VectorSet,
    truth: &GroundTruth,
    strategies: &[MergeStrategy],
    params: &CompareParams,
) -> Result<Vec<StrategyRow>> {
    let m = parts.len();
    if m < 2 {
        return Err(Error::usage(
            "strategy comparison needs at least 2 partitions",
        ));
    }
    let indexes: Vec<Index> = parts
        .iter()
        .map(|p| Index::build(p, &params.build).map(|(i, _)| i))
        .collect::<Result<_>>()?;
    let refs: Vec<&Index> = indexes.iter().collect();
    let mut wanted: Vec<MergeStrategy> = vec![MergeStrategy::Naive, MergeStrategy::Rebuild];
    for s in strategies {
        if !wanted.contains(s) {
            wanted.push(*s);
        }
    }
    let r = params.degree_bound(m);
    let mut rows = Vec::with_capacity(wanted.len());
    for s in wanted {
        let (edges, merge_ms, merge_ndc, bench) = match s {
            MergeStrategy::Rebuild => {
                let union = VectorSet::concat(&parts.iter().collect::<Vec<_>>())?;
                let (idx, stats) = Index::build(&union, &params.build)?;
                let b = bench_search(&idx, queries, truth, &params.efs, params.k)?;
                (0, stats.elapsed.as_secs_f64() * 1e3, stats.ndc, b)
            }
            MergeStrategy::Separated => (
                0,
                0.0,
                0,
                bench_separated(&refs, queries, truth, &params.efs, params.k)?,
            ),
            _ => {
                let (plan, strategy) = match s {
                    MergeStrategy::Naive => (pairwise_plan(m), Strategy::Naive),
                    MergeStrategy::Rnsm => (pairwise_plan(m), Strategy::Rnsm),
                    MergeStrategy::RnsmMosRandom => (
                        mos_plan(&CostMatrix::unit(m), r, params.delta)?,
                        Strategy::Rnsm,
                    ),
                    _ => {
                        let sets: Vec<&VectorSet> = parts.iter().collect();
                        let costs = build_cost_matrix(&sets, CostKind::Centroid)?;
                        (mos_plan(&costs, r, params.delta)?, Strategy::Rnsm)
                    }
                };
                let (idx, rep) = multi_merge_with(&refs, &plan, strategy, &params.merge)?;
                let b = bench_search(&idx, queries, truth, &params.efs, params.k)?;
                (
                    plan.edges().len(),
                    rep.elapsed.as_secs_f64() * 1e3,
                    rep.total_ndc(),
                    b,
                )
            }
        };
        rows.push(StrategyRow {
            strategy: s,
            edges,
            merge_ms,
            merge_ndc,
            ndc_speedup_vs_nm: 0.0,
            ndc_speedup_vs_rebuild: 0.0,
            time_speedup_vs_nm: 0.0,
            time_speedup_vs_rebuild: 0.0,
            bench: bench.with_label(s.label(), merge_ms),
        });
    }
    let nm = rows[0].clone();
    let rebuild = rows[1].clone();
    for row in &mut rows {
        row.ndc_speedup_vs_nm = ratio(nm.merge_ndc as f64, row.merge_ndc as f64);
        row.ndc_speedup_vs_rebuild = ratio(rebuild.merge_ndc as f64, row.merge_ndc as f64);
        row.time_speedup_vs_nm = ratio(nm.merge_ms, row.merge_ms);
        row.time_speedup_vs_rebuild = ratio(rebuild.merge_ms, row.merge_ms);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Partitions chained in index order.
    Path,
    /// Every partition joined to the medoid partition.
    Star,
    /// Minimum spanning tree of the cost matrix.
    Mst,
    Mos,
    /// Seeded random connected graph with as many edges as the MOS plan.
    RandomRegular,
}

impl Topology {
    pub const ALL: [Topology; 5] = [
        Topology::Path,
        Topology::Star,
        Topology::Mst,
        Topology::Mos,
        Topology::RandomRegular,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Topology::Path => "path",
            Topology::Star => "star",
            Topology::Mst => "mst",
            Topology::Mos => "mos",
            Topology::RandomRegular => "random-regular",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::usage(format!("unknown topology {s:?}")))
    }
}

pub fn path_plan(m: usize) -> Result<MergeOrderGraph> {
    let edges: Vec<(usize, usize)> = (1..m).map(|i| (i - 1, i)).collect();
    MergeOrderGraph::from_edges(m, &edges, 2.min(m.saturating_sub(1)).max(1), None)
}

/// Vertex with the smallest total cost to all others (lower id on ties).
pub fn medoid(costs: &CostMatrix) -> usize {
    let m = costs.m();
    let total = |v: usize| (0..m).map(|u| costs.get(v, u)).sum::<f64>();
    (0..m)
        .min_by(|&a, &b| total(a).total_cmp(&total(b)).then(a.cmp(&b)))
        .unwrap_or(0)
}

pub fn star_plan(costs: &CostMatrix) -> Result<MergeOrderGraph> {
    let m = costs.m();
    let c = medoid(costs);
    let edges: Vec<(usize, usize)> = (0..m).filter(|&v| v != c).map(|v| (c, v)).collect();
    MergeOrderGraph::from_edges(m, &edges, m.saturating_sub(1).max(1), Some(2))
}

fn mst_plan(costs: &CostMatrix) -> Result<MergeOrderGraph> {
    let m = costs.m();
    let mut g = UnGraph::<(), f64>::with_capacity(m, m * m / 2);
    let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
    for i in 0..m {
        for j in i + 1..m {
            g.add_edge(nodes[i], nodes[j], costs.get(i, j));
        }
    }
    let edges: Vec<(usize, usize)> = min_spanning_tree(&g)
        .filter_map(|e| match e {
            Element::Edge { source, target, .. } => Some((source, target)),
            Element::Node { .. } => None,
        })
        .collect();
    MergeOrderGraph::from_edges(m, &edges, m.saturating_sub(1).max(1), None)
}

/// Connected graph with `edges` edges: a random Hamiltonian path, then
/// random extra pairs whose endpoints stay under `ceil(2 * edges / m)`.
pub fn random_regular_plan(m: usize, edges: usize, seed: u64) -> Result<MergeOrderGraph> {
    if m == 0 {
        return Err(Error::usage("need at least one partition"));
    }
    let edges = edges.clamp(m - 1, m * (m - 1) / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng);
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut chosen: Vec<(usize, usize)> = perm.windows(2).map(|w| norm(w[0], w[1])).collect();
    let mut deg = vec![0usize; m];
    for &(a, b) in &chosen {
        deg[a] += 1;
        deg[b] += 1;
    }
    let cap = (2 * edges).div_ceil(m).max(2);
    let mut pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    pairs.shuffle(&mut rng);
    for capped in [true, false] {
        for &(a, b) in &pairs {
            if chosen.len() >= edges {
                break;
            }
            if chosen.contains(&(a, b)) || (capped && (deg[a] >= cap || deg[b] >= cap)) {
                continue;
            }
            chosen.push((a, b));
            deg[a] += 1;
            deg[b] += 1;
        }
    }
    MergeOrderGraph::from_edges(m, &chosen, cap, None)
}

/// Plan for one topology. Random-regular matches the MOS plan's edge count.
pub fn topology_plan(
    t: Topology,
    costs: &CostMatrix,
    degree_bound: usize,
    delta: Option<usize>,
    seed: u64,
) -> Result<MergeOrderGraph> {
    match t {
        Topology::Path => path_plan(costs.m()),
        Topology::Star => star_plan(costs),
        Topology::Mst => mst_plan(costs),
        Topology::Mos => mos_plan(costs, degree_bound, delta),
        Topology::RandomRegular => {
            let mos = mos_plan(costs, degree_bound, delta)?;
            random_regular_plan(costs.m(), mos.edges().len(), seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderRow {
    pub topology: Topology,
    pub plan: MergeOrderGraph,
    pub cost: f64,
    pub merge_ndc: u64,
    pub merge_ms: f64,
    pub bench: BenchRun,
}

/// Merges the same indexes along each topology with sliding merge and
/// benchmarks the results. Costs are centroid distances.
pub fn compare_merge_orders(
    indexes: &[&Index],
    queries: &VectorSet,
    truth: &GroundTruth,
    topologies: &[Topology],
    params: &CompareParams,
) -> Result<Vec<OrderRow>> {
    let m = indexes.len();
    if m < 4 {
        return Err(Error::usage("order comparison needs at least 4 partitions"));
    }
    let sets: Vec<&VectorSet> = indexes.iter().map(|i| &i.vectors).collect();
    let costs = build_cost_matrix(&sets, CostKind::Centroid)?;
    let r = params.degree_bound(m);
    topologies
        .iter()
        .map(|&t| {
            let plan = topology_plan(t, &costs, r, params.delta, params.seed)?;
            let (idx, rep) = multi_merge_with(indexes, &plan, Strategy::Rnsm, &params.merge)?;
            let merge_ms = rep.elapsed.as_secs_f64() * 1e3;
            let bench = bench_search(&idx, queries, truth, &params.efs, params.k)?
                .with_label(t.label(), merge_ms);
            Ok(OrderRow {
                topology: t,
                cost: plan.cost(&costs),
                plan,
                merge_ndc: rep.total_ndc(),
                merge_ms,
                bench,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_topologies_have_m_minus_one_edges() {
        let pts: Vec<Vec<f32>> = (0..7)
            .map(|i| vec![i as f32, (i * i) as f32 * 0.1])
            .collect();
        let costs = CostMatrix::from_points(&pts).unwrap();
        for t in [Topology::Path, Topology::Star, Topology::Mst] {
            let p = topology_plan(t, &costs, 3, Some(2), 1).unwrap();
            assert_eq!(p.edges().len(), 6, "{}", t.label());
            assert!(p.is_connected());
        }
        // Points on a gentle curve: the MST is the chain.
        let mst = topology_plan(Topology::Mst, &costs, 3, None, 0).unwrap();
        let path = path_plan(7).unwrap();
        assert!((mst.cost(&costs) - path.cost(&costs)).abs() < 1e-9);
        assert_eq!(medoid(&costs), 3);
    }

    #[test]
    fn random_regular_shape() {
        for seed in 0..20 {
            let g = random_regular_plan(10, 17, seed).unwrap();
            assert_eq!(g.edges().len(), 17);
            assert!(g.is_connected());
            assert!(g.max_degree() <= 4);
        }
        assert_eq!(random_regular_plan(4, 100, 0).unwrap().edges().len(), 6);
    }

    #[test]
    fn labels_roundtrip() {
        for s in MergeStrategy::ALL {
            assert_eq!(MergeStrategy::parse(s.label()).unwrap(), s);
        }
        for t in Topology::ALL {
            assert_eq!(Topology::parse(t.label()).unwrap(), t);
        }
    }
}
