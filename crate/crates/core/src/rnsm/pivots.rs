//! Neighbor expansion, reverse-kNN inversion, and greedy pivot selection.

use crate::error::{Error, Result};
use crate::pgraph::{search_into, Index, SearchScratch};
use crate::vecstore::{NodeId, Space, VectorSet};

use super::parallel::map_nodes;

/// Extra beam width on top of `k_plus + 1` used when expanding neighbors.
pub const DEFAULT_EXPAND_PAD: usize = 0;

/// Per-node approximate `k_plus`-NN lists found by searching the source
/// graph from each node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub lists: Vec<Vec<NodeId>>,
    pub ndc: u64,
}

/// Searches the graph from every node (seeded with the node itself) and
/// keeps its `k_plus` nearest other nodes, nearest first.
pub fn expand_neighbors(
    index: &Index,
    k_plus: usize,
    pad: usize,
    workers: usize,
) -> Result<Expansion> {
    let n = index.len();
    if k_plus == 0 || k_plus >= n {
        return Err(Error::usage(format!(
            "k_plus must be in 1..{n} for a graph of {n} nodes, got {k_plus}"
        )));
    }
    let ef = k_plus + 1 + pad;
    let per_node = map_nodes(workers, n, SearchScratch::new, |scratch, v| {
        let v = v as NodeId;
        let stats = search_into(
            &index.graph,
            &index.vectors,
            index.vectors.get(v),
            ef,
            &[v],
            scratch,
        );
        let list: Vec<NodeId> = scratch
            .results()
            .filter(|c| c.id != v)
            .take(k_plus)
            .map(|c| c.id)
            .collect();
        (list, stats.ndc)
    });
    let ndc = per_node.iter().map(|(_, d)| d).sum();
    Ok(Expansion {
        lists: per_node.into_iter().map(|(l, _)| l).collect(),
        ndc,
    })
}

/// kNN lists truncated to `k` and their inversion, R_k(x) = {y | x ∈ N_k(y)}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReverseIndex {
    pub k: usize,
    pub knn: Vec<Vec<NodeId>>,
    /// Ascending by follower id.
    pub rnn: Vec<Vec<NodeId>>,
}

impl ReverseIndex {
    pub fn len(&self) -> usize {
        self.knn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knn.is_empty()
    }

    pub fn rnn_count(&self, x: NodeId) -> usize {
        self.rnn[x as usize].len()
    }
}

pub fn build_reverse_index(expanded: &[Vec<NodeId>], k: usize) -> ReverseIndex {
    let n = expanded.len();
    let knn: Vec<Vec<NodeId>> = expanded
        .iter()
        .map(|l| l.iter().copied().take(k).collect())
        .collect();
    let mut rnn = vec![Vec::new(); n];
    for (y, list) in knn.iter().enumerate() {
        for &x in list {
            rnn[x as usize].push(y as NodeId);
        }
    }
    ReverseIndex { k, knn, rnn }
}

/// Pivots and the followers assigned to slide from each of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PivotPlan {
    /// In selection order.
    pub pivots: Vec<NodeId>,
    /// `followers[i]` slide from `pivots[i]`, ascending by id.
    pub followers: Vec<Vec<NodeId>>,
    /// Per node: the pivot it follows, `None` for pivots themselves.
    pub assignment: Vec<Option<NodeId>>,
    pub covered: Vec<bool>,
}

impl PivotPlan {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn follower_count(&self) -> usize {
        self.followers.iter().map(Vec::len).sum()
    }

    /// Followers over all nodes; 0 for an empty plan.
    pub fn sliding_ratio(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.follower_count() as f64 / self.len() as f64
        }
    }
}

/// Nodes by descending reverse-neighbor count, lower id first on ties.
pub fn hub_order(rindex: &ReverseIndex) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..rindex.len() as NodeId).collect();
    order.sort_by(|&a, &b| {
        rindex
            .rnn_count(b)
            .cmp(&rindex.rnn_count(a))
            .then(a.cmp(&b))
    });
    order
}

/// Greedy pivot selection: walk nodes in hub order; every still-uncovered
/// node becomes a pivot and claims its uncovered reverse neighbors.
pub fn select_pivots(rindex: &ReverseIndex) -> PivotPlan {
    select_pivots_in_order(rindex, &hub_order(rindex))
}

/// Same greedy rule over an arbitrary visiting order (which must list every
/// node once).
pub fn select_pivots_in_order(rindex: &ReverseIndex, order: &[NodeId]) -> PivotPlan {
    let n = rindex.len();
    let mut plan = PivotPlan {
        pivots: Vec::new(),
        followers: Vec::new(),
        assignment: vec![None; n],
        covered: vec![false; n],
    };
    for &x in order {
        if plan.covered[x as usize] {
            continue;
        }
        plan.covered[x as usize] = true;
        let mut claimed = Vec::new();
        for &y in &rindex.rnn[x as usize] {
            if !plan.covered[y as usize] {
                plan.covered[y as usize] = true;
                plan.assignment[y as usize] = Some(x);
                claimed.push(y);
            }
        }
        plan.pivots.push(x);
        plan.followers.push(claimed);
    }
    plan
}

/// Dominating-pivot cost: `gamma` per pivot plus the distance from every
/// follower to its pivot.
pub fn dps_cost(plan: &PivotPlan, set: &VectorSet, gamma: f64) -> Result<f64> {
    if plan.len() != set.len() {
        return Err(Error::usage(format!(
            "plan covers {} nodes, set has {}",
            plan.len(),
            set.len()
        )));
    }
    let mut is_pivot = vec![false; set.len()];
    for &p in &plan.pivots {
        is_pivot[p as usize] = true;
    }
    let mut cost = gamma * plan.pivots.len() as f64;
    for (y, a) in plan.assignment.iter().enumerate() {
        match a {
            Some(p) => cost += f64::from(set.dist2(y as NodeId, *p).sqrt()),
            None if is_pivot[y] => {}
            None => return Err(Error::usage(format!("node {y} is not covered by the plan"))),
        }
    }
    Ok(cost)
}
