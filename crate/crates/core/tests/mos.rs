mod common;

use common::{brute_knn, components, exhaustive_mos, hops_bfs, mst_weight, random_costs, recall};
use pgmerge::mos::{
    build_cost_matrix, decode_plan, default_degree_bound, encode_plan, load_plan, mos_plan,
    multi_merge, multi_merge_with, pairwise_plan, save_plan, separated_search, CostKind,
    CostMatrix, MergeOrderGraph, MosBuilder, Step, UNREACHABLE,
};
use pgmerge::pgraph::{BuildParams, Index, SearchScratch};
use pgmerge::rnsm::{merge_pair, MergeParams, Strategy};
use pgmerge::vecstore::{distance_evaluations, synth, NodeId, VectorSet};
use pgmerge::Error;
use proptest::prelude::*;

fn hops_agree(g: &MergeOrderGraph) -> bool {
    let want = hops_bfs(g.m(), g.edges());
    (0..g.m()).all(|i| {
        (0..g.m()).all(|j| {
            let w = want[i][j];
            let h = g.hop(i, j);
            (w == usize::MAX && h == UNREACHABLE) || w == h as usize
        })
    })
}

/// Six partitions, R = 3. G1 (id 0) is saturated with neighbors G2, G3, G6;
/// G5 (id 4) hangs off G4 and is out of reach. Asking for (G5, G1) must
/// relay to G1's unsaturated neighbor nearest G5, which is G6.
#[test]
fn saturated_endpoint_relays_to_neighbor() {
    let mut c = vec![vec![5.0; 6]; 6];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let mut set = |a: usize, b: usize, v: f64| {
        c[a][b] = v;
        c[b][a] = v;
    };
    set(4, 0, 1.0);
    set(4, 5, 2.0);
    set(4, 1, 3.0);
    set(4, 2, 4.0);
    let costs = CostMatrix::from_rows(&c).unwrap();
    let mut b = MosBuilder::new(&costs, 3, Some(2)).unwrap();
    for (x, y) in [(0, 1), (0, 2), (0, 5), (3, 4)] {
        assert!(b.add_edge(x, y));
    }
    assert_eq!(b.degree(0), 3);
    assert_eq!(b.hop(4, 0), UNREACHABLE);
    assert_eq!(b.far_candidate(4), Some(0));
    let step = b.step(4, 0);
    assert_eq!(
        step,
        Step::Relay {
            wanted: (4, 0),
            added: (4, 5)
        }
    );
    assert_eq!(b.degree(0), 3);
    assert_eq!(b.hop(4, 0), 2);
    let g = b.finish();
    assert!(g.is_connected());
    assert!(hops_agree(&g));
}

#[test]
fn both_saturated_is_stuck() {
    let costs = CostMatrix::unit(6);
    let mut b = MosBuilder::new(&costs, 1, Some(2)).unwrap();
    b.add_edge(0, 1);
    b.add_edge(2, 3);
    assert_eq!(b.step(0, 2), Step::Stuck);
    assert_eq!(b.edges().len(), 2);
}

#[test]
fn small_instances_close_to_exhaustive_optimum() {
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let m = 3 + (seed as usize % 4);
        let rows = random_costs(m, seed);
        let costs = CostMatrix::from_rows(&rows).unwrap();
        let r = default_degree_bound(m);
        let g = mos_plan(&costs, r, Some(2)).unwrap();
        let (best, _) = exhaustive_mos(|a, b| rows[a][b], m, r, 2).expect("feasible");
        worst = worst.max(g.cost(&costs) / best);
    }
    assert!(worst <= 2.0, "worst ratio {worst}");
}

#[test]
fn unbounded_plan_is_minimum_spanning_tree() {
    for seed in 0..30 {
        let m = 2 + seed as usize % 20;
        let rows = random_costs(m, 500 + seed);
        let costs = CostMatrix::from_rows(&rows).unwrap();
        let g = mos_plan(&costs, m - 1, None).unwrap();
        let mst = mst_weight(|a, b| rows[a][b], m);
        let c = g.cost(&costs);
        assert!(
            c >= mst - 1e-9 && c <= 2.0 * mst + 1e-9,
            "cost {c} mst {mst}"
        );
    }
}

#[test]
fn sparser_than_pairwise() {
    for seed in 0..30 {
        let r = 2 + seed as usize % 4;
        let m = r + 2 + seed as usize % 9;
        let rows = random_costs(m, 900 + seed);
        let costs = CostMatrix::from_rows(&rows).unwrap();
        let g = mos_plan(&costs, r, Some(2)).unwrap();
        assert!(g.cost(&costs) < pairwise_plan(m).cost(&costs));
    }
}

#[test]
fn plan_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.json");
    let g = mos_plan(
        &CostMatrix::from_rows(&random_costs(9, 4)).unwrap(),
        3,
        Some(2),
    )
    .unwrap();
    save_plan(&g, &path).unwrap();
    let back = load_plan(&path).unwrap();
    assert_eq!(back.edges(), g.edges());
    assert_eq!(std::fs::read(&path).unwrap(), encode_plan(&back));
    assert!(matches!(decode_plan(b"[1,2]"), Err(Error::Format(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn plans_are_connected_and_consistent(seed in any::<u64>(), m in 1usize..=64, r in 2usize..=6, delta in 1usize..=3, unit in any::<bool>()) {
        let costs = if unit {
            CostMatrix::unit(m)
        } else {
            CostMatrix::from_rows(&random_costs(m, seed)).unwrap()
        };
        let g = mos_plan(&costs, r, Some(delta)).unwrap();
        prop_assert!(g.is_connected());
        prop_assert_eq!(components(m, g.edges()), 1);
        prop_assert!(hops_agree(&g));
        if g.repair_edges() == 0 {
            prop_assert_eq!(g.degree_violations(), 0);
        }
    }
}

fn partitions(m: usize, n: usize, dim: usize, seed: u64) -> (VectorSet, Vec<Index>) {
    let all = synth::gaussian(m * n, dim, seed);
    let parts = (0..m)
        .map(|p| {
            let rows: Vec<NodeId> = (0..n).map(|i| (i * m + p) as NodeId).collect();
            Index::build(&all.select(&rows), &BuildParams::default())
                .unwrap()
                .0
        })
        .collect();
    (all, parts)
}

fn mean_recall(idx: &Index, queries: &VectorSet, ef: usize) -> f64 {
    let mut s = SearchScratch::new();
    queries
        .iter()
        .map(|q| {
            let found: Vec<NodeId> = idx
                .search(q, ef, 10, &mut s)
                .unwrap()
                .0
                .iter()
                .map(|c| c.id)
                .collect();
            recall(&found, &brute_knn(&idx.vectors, q, 10))
        })
        .sum::<f64>()
        / queries.len() as f64
}

#[test]
fn single_partition_is_identity() {
    let (_, parts) = partitions(1, 300, 6, 1);
    let (merged, report) =
        multi_merge(&[&parts[0]], &pairwise_plan(1), &MergeParams::default()).unwrap();
    assert_eq!(merged, parts[0]);
    assert_eq!(report.total_ndc(), 0);
}

#[test]
fn two_partitions_reduce_to_pair_merge() {
    let (_, parts) = partitions(2, 400, 6, 2);
    let params = MergeParams::default();
    let (multi, mr) = multi_merge(&[&parts[0], &parts[1]], &pairwise_plan(2), &params).unwrap();
    let (pair, pr) = merge_pair(&parts[0], &parts[1], Strategy::Rnsm, &params).unwrap();
    assert_eq!(multi, pair);
    assert_eq!(mr.total_ndc(), pr.total_ndc());
}

#[test]
fn disconnected_plan_rejected() {
    let (_, parts) = partitions(3, 50, 4, 3);
    let refs: Vec<&Index> = parts.iter().collect();
    let plan = MergeOrderGraph::from_edges(3, &[(0, 1)], 2, Some(2)).unwrap();
    assert!(matches!(
        multi_merge(&refs, &plan, &MergeParams::default()),
        Err(Error::Usage(_))
    ));
    assert!(matches!(
        multi_merge(&refs, &pairwise_plan(4), &MergeParams::default()),
        Err(Error::Usage(_))
    ));
}

#[test]
fn mos_merge_close_to_pairwise_and_cheaper() {
    let (_, parts) = partitions(4, 500, 8, 4);
    let refs: Vec<&Index> = parts.iter().collect();
    let params = MergeParams::default();
    let sets: Vec<&VectorSet> = parts.iter().map(|p| &p.vectors).collect();
    let costs = build_cost_matrix(&sets, CostKind::RandomUnit).unwrap();
    let plan = mos_plan(&costs, 3, Some(2)).unwrap();
    let before = distance_evaluations();
    let (mos, mos_r) = multi_merge(&refs, &plan, &params).unwrap();
    let counted = distance_evaluations() - before;
    assert_eq!(counted, mos_r.total_ndc() + mos_r.total.followers as u64);
    let (full, full_r) = multi_merge(&refs, &pairwise_plan(4), &params).unwrap();
    mos.graph.validate().unwrap();
    assert!(mos.graph.is_connected());
    let queries = synth::gaussian(200, 8, 44);
    let (a, b) = (
        mean_recall(&mos, &queries, 64),
        mean_recall(&full, &queries, 64),
    );
    assert!((a - b).abs() <= 0.04, "mos {a} pairwise {b}");
    assert!(mos_r.total_ndc() < full_r.total_ndc());
}

#[test]
fn edge_order_does_not_matter_much() {
    let (_, parts) = partitions(5, 400, 8, 5);
    let refs: Vec<&Index> = parts.iter().collect();
    let plan = mos_plan(&CostMatrix::unit(5), 3, Some(2)).unwrap();
    let mut reversed: Vec<(usize, usize)> = plan.edges().iter().rev().copied().collect();
    reversed.iter_mut().for_each(|e| *e = (e.1, e.0));
    let permuted = MergeOrderGraph::from_edges(5, &reversed, 3, Some(2)).unwrap();
    let params = MergeParams::default();
    let (a, _) = multi_merge(&refs, &plan, &params).unwrap();
    let (b, _) = multi_merge(&refs, &permuted, &params).unwrap();
    let queries = synth::gaussian(200, 8, 55);
    let (ra, rb) = (mean_recall(&a, &queries, 64), mean_recall(&b, &queries, 64));
    assert!((ra - rb).abs() < 0.02, "{ra} vs {rb}");
}

#[test]
fn naive_strategy_multi_merge_works() {
    let (_, parts) = partitions(3, 300, 6, 6);
    let refs: Vec<&Index> = parts.iter().collect();
    let (g, r) = multi_merge_with(
        &refs,
        &pairwise_plan(3),
        Strategy::Naive,
        &MergeParams::default(),
    )
    .unwrap();
    g.graph.validate().unwrap();
    assert_eq!(r.edges.len(), 3);
    assert_eq!(r.total.followers, 0);
    // Source is the smaller side; equal sizes pick the higher index.
    assert!(r.edges.iter().all(|e| e.source > e.target));
}

#[test]
fn separated_search_accounting() {
    let (all, parts) = partitions(3, 300, 6, 7);
    let refs: Vec<&Index> = parts.iter().collect();
    let mut s = SearchScratch::new();
    let q = synth::gaussian(1, 6, 70);
    let (res, stats) = separated_search(&refs, q.get(0), 300, 10, &mut s).unwrap();
    let mut sum = 0;
    for p in &parts {
        sum += p.search(q.get(0), 300, 10, &mut s).unwrap().1.ndc;
    }
    assert_eq!(stats.ndc, sum);
    // With ef covering each partition the result is exact over the union.
    let concat = VectorSet::concat(&parts.iter().map(|p| &p.vectors).collect::<Vec<_>>()).unwrap();
    let mut got: Vec<NodeId> = res.iter().map(|c| c.id).collect();
    let mut want = brute_knn(&concat, q.get(0), 10);
    got.sort();
    want.sort();
    assert_eq!(got, want);
    let (one, _) = separated_search(&refs[..1], q.get(0), 32, 10, &mut s).unwrap();
    assert_eq!(one, parts[0].search(q.get(0), 32, 10, &mut s).unwrap().0);
    drop(all);
}
