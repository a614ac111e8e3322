//! Greedy merge-order selection under degree and diameter bounds.

use std::collections::VecDeque;

use super::{CostMatrix, UNREACHABLE};
use crate::error::{Error, Result};

/// `min(4, m - 1)`, at least 1.
pub fn default_degree_bound(m: usize) -> usize {
    4.min(m.saturating_sub(1)).max(1)
}

/// Undirected merge-order graph over `m` partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeOrderGraph {
    m: usize,
    /// Normalized `(lo, hi)` pairs in insertion order.
    edges: Vec<(usize, usize)>,
    degree_bound: usize,
    /// `None` means unbounded.
    diameter_bound: Option<usize>,
    hops: Vec<u32>,
    repair_edges: usize,
}

impl MergeOrderGraph {
    /// Graph with the given edges; the hop matrix is computed by BFS.
    pub fn from_edges(
        m: usize,
        edges: &[(usize, usize)],
        degree_bound: usize,
        diameter_bound: Option<usize>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= m || b >= m || a == b {
                return Err(Error::usage(format!(
                    "invalid edge ({a}, {b}) for {m} partitions"
                )));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::usage(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            normalized.push(e);
        }
        let hops = bfs_hops(m, &normalized);
        Ok(MergeOrderGraph {
            m,
            edges: normalized,
            degree_bound,
            diameter_bound,
            hops,
            repair_edges: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn diameter_bound(&self) -> Option<usize> {
        self.diameter_bound
    }

    /// Shortest hop count between two partitions ([`UNREACHABLE`] if none).
    pub fn hop(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.m + j]
    }

    pub fn hop_matrix(&self) -> Vec<Vec<u32>> {
        self.hops
            .chunks(self.m.max(1))
            .map(<[u32]>::to_vec)
            .take(self.m)
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.m).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        self.hops.iter().all(|&h| h != UNREACHABLE)
    }

    /// Largest hop count, `None` if disconnected.
    pub fn diameter(&self) -> Option<u32> {
        if self.is_connected() {
            Some(self.hops.iter().copied().max().unwrap_or(0))
        } else {
            None
        }
    }

    /// Edges added by the final connectivity pass.
    pub fn repair_edges(&self) -> usize {
        self.repair_edges
    }

    /// Vertices whose degree exceeds the bound.
    pub fn degree_violations(&self) -> usize {
        (0..self.m)
            .filter(|&v| self.degree(v) > self.degree_bound)
            .count()
    }

    pub fn cost(&self, costs: &CostMatrix) -> f64 {
        costs.total(&self.edges)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }
}

fn bfs_hops(m: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut hops = vec![UNREACHABLE; m * m];
    for s in 0..m {
        let row = &mut hops[s * m..(s + 1) * m];
        row[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if row[u] == UNREACHABLE {
                    row[u] = row[v] + 1;
                    queue.push_back(u);
                }
            }
        }
    }
    hops
}

/// Complete graph: every pair merged once.
pub fn pairwise_plan(m: usize) -> MergeOrderGraph {
    let edges: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    MergeOrderGraph::from_edges(m, &edges, m.saturating_sub(1).max(1), Some(1))
        .expect("complete graph edges are valid")
}

/// What one iteration of the greedy loop did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// `(v, x)` added directly.
    Direct(usize, usize),
    /// `(v, x)` was wanted; `added` went in through a neighbor of the
    /// saturated endpoint.
    Relay {
        wanted: (usize, usize),
        added: (usize, usize),
    },
    /// Nothing could be added.
    Stuck,
}

/// Incremental state of the greedy planner. [`mos_plan`] drives it; tests
/// can script individual steps.
#[derive(Clone, Debug)]
pub struct MosBuilder<'a> {
    costs: &'a CostMatrix,
    r: usize,
    delta: Option<usize>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    hops: Vec<u32>,
}

impl<'a> MosBuilder<'a> {
    pub fn new(costs: &'a CostMatrix, r: usize, delta: Option<usize>) -> Result<Self> {
        let m = costs.m();
        if m == 0 {
            return Err(Error::usage("need at least one partition"));
        }
        if r == 0 || delta == Some(0) {
            return Err(Error::usage(
                "degree and diameter bounds must be at least 1",
            ));
        }
        let mut hops = vec![UNREACHABLE; m * m];
        for v in 0..m {
            hops[v * m + v] = 0;
        }
        Ok(MosBuilder {
            costs,
            r,
            delta,
            adj: vec![Vec::new(); m],
            edges: Vec::new(),
            hops,
        })
    }

    pub fn m(&self) -> usize {
        self.costs.m()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn hop(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.m() + j]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn too_far(&self, h: u32) -> bool {
        match self.delta {
            Some(d) => h == UNREACHABLE || h as usize > d,
            None => false,
        }
    }

    /// Adds an undirected edge and relaxes every hop count through it.
    /// Returns false if the edge already existed.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        assert!(a != b, "self loop");
        if self.adj[a].contains(&b) {
            return false;
        }
        self.adj[a].push(b);
        self.adj[b].push(a);
        self.edges.push((a.min(b), a.max(b)));
        let m = self.m();
        let via = |h: &[u32], i: usize, p: usize, q: usize, j: usize| {
            let (x, y) = (h[i * m + p], h[q * m + j]);
            if x == UNREACHABLE || y == UNREACHABLE {
                UNREACHABLE
            } else {
                x + 1 + y
            }
        };
        // Snapshot rows of both endpoints before relaxing.
        let old = self.hops.clone();
        for i in 0..m {
            for j in 0..m {
                let best = old[i * m + j]
                    .min(via(&old, i, a, b, j))
                    .min(via(&old, i, b, a, j));
                self.hops[i * m + j] = best;
            }
        }
        true
    }

    /// Cheapest vertex more than the diameter bound away from `v` (lower
    /// id on ties).
    pub fn far_candidate(&self, v: usize) -> Option<usize> {
        (0..self.m())
            .filter(|&x| x != v && self.too_far(self.hop(v, x)))
            .min_by(|&a, &b| {
                self.costs
                    .get(v, a)
                    .total_cmp(&self.costs.get(v, b))
                    .then(a.cmp(&b))
            })
    }

    /// Unsaturated neighbor of `hub` nearest (by cost) to `other`, excluding
    /// `other` and anything already adjacent to it.
    fn relay(&self, hub: usize, other: usize) -> Option<usize> {
        self.adj[hub]
            .iter()
            .copied()
            .filter(|&n| n != other && self.degree(n) < self.r && !self.adj[other].contains(&n))
            .min_by(|&a, &b| {
                self.costs
                    .get(a, other)
                    .total_cmp(&self.costs.get(b, other))
                    .then(a.cmp(&b))
            })
    }

    /// One iteration for the pair `(v, x)`: direct edge if both have room,
    /// a relay through the saturated endpoint's neighbor if exactly one is
    /// full, otherwise nothing.
    pub fn step(&mut self, v: usize, x: usize) -> Step {
        let (v_full, x_full) = (self.degree(v) >= self.r, self.degree(x) >= self.r);
        let added = match (v_full, x_full) {
            (false, false) => (v, x),
            (false, true) => match self.relay(x, v) {
                Some(x2) => (v, x2),
                None => return Step::Stuck,
            },
            (true, false) => match self.relay(v, x) {
                Some(v2) => (v2, x),
                None => return Step::Stuck,
            },
            (true, true) => return Step::Stuck,
        };
        if !self.add_edge(added.0, added.1) {
            return Step::Stuck;
        }
        if added == (v, x) {
            Step::Direct(v, x)
        } else {
            Step::Relay {
                wanted: (v, x),
                added,
            }
        }
    }

    /// Visiting order: ascending mean cost to the `R` cheapest peers.
    pub fn order(&self) -> Vec<usize> {
        let m = self.m();
        let score: Vec<f64> = (0..m)
            .map(|v| {
                let mut c: Vec<f64> = (0..m)
                    .filter(|&u| u != v)
                    .map(|u| self.costs.get(v, u))
                    .collect();
                c.sort_by(f64::total_cmp);
                c.truncate(self.r);
                if c.is_empty() {
                    0.0
                } else {
                    c.iter().sum::<f64>() / c.len() as f64
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
        order
    }

    /// Joins leftover components with their cheapest connecting edges
    /// (Kruskal over all pairs), ignoring the degree bound, and returns
    /// the finished graph.
    pub fn finish(mut self) -> MergeOrderGraph {
        let m = self.m();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let mut pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .collect();
        pairs.sort_by(|p, q| {
            self.costs
                .get(p.0, p.1)
                .total_cmp(&self.costs.get(q.0, q.1))
                .then(p.cmp(q))
        });
        let mut repair_edges = 0;
        for (a, b) in pairs {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                self.add_edge(a, b);
                repair_edges += 1;
            }
        }
        MergeOrderGraph {
            m,
            edges: self.edges,
            degree_bound: self.r,
            diameter_bound: self.delta,
            hops: self.hops,
            repair_edges,
        }
    }
}

/// Greedy merge-order selection.
///
/// Vertices are visited centrally-located first. For each vertex `v` the
/// cheapest vertex farther than `delta` hops is linked, directly or through
/// a one-hop relay, until none is left or no edge can be added. A final
/// pass joins any remaining components with minimum-cost edges even if that
/// breaks the degree bound. `delta = None` disables the diameter rule, which
/// leaves only the final pass (a minimum spanning tree).
pub fn mos_plan(costs: &CostMatrix, r: usize, delta: Option<usize>) -> Result<MergeOrderGraph> {
    let mut b = MosBuilder::new(costs, r, delta)?;
    for v in b.order() {
        while let Some(x) = b.far_candidate(v) {
            if b.step(v, x) == Step::Stuck {
                break;
            }
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_hops(b: &MosBuilder<'_>) {
        let fresh = bfs_hops(b.m(), b.edges());
        assert_eq!(b.hops, fresh);
    }

    #[test]
    fn two_partitions_single_edge() {
        let c = CostMatrix::unit(2);
        let g = mos_plan(&c, 1, Some(2)).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        let one = mos_plan(&CostMatrix::unit(1), 1, Some(2)).unwrap();
        assert!(one.edges().is_empty());
        assert!(one.is_connected());
    }

    #[test]
    fn four_unit_vertices() {
        let c = CostMatrix::unit(4);
        let g = mos_plan(&c, 3, Some(2)).unwrap();
        assert!(g.is_connected());
        assert!(g.diameter().unwrap() <= 2);
        assert!(g.edges().len() <= 4 * 3 / 2);
        assert_eq!(g.degree_violations(), 0);
    }

    #[test]
    fn incremental_hops_match_bfs() {
        let pts: Vec<Vec<f32>> = (0..12)
            .map(|i| vec![(i * 7 % 12) as f32, (i * i % 5) as f32])
            .collect();
        let c = CostMatrix::from_points(&pts).unwrap();
        let mut b = MosBuilder::new(&c, 3, Some(2)).unwrap();
        for v in b.order() {
            while let Some(x) = b.far_candidate(v) {
                let s = b.step(v, x);
                check_hops(&b);
                if s == Step::Stuck {
                    break;
                }
            }
        }
        let g = b.finish();
        assert!(g.is_connected());
    }

    #[test]
    fn pairwise_sizes() {
        assert_eq!(pairwise_plan(3).edges().len(), 3);
        assert_eq!(pairwise_plan(5).edges().len(), 10);
        assert_eq!(pairwise_plan(5).diameter(), Some(1));
    }

    #[test]
    fn unbounded_diameter_is_spanning_tree() {
        let pts: Vec<Vec<f32>> = (0..9).map(|i| vec![i as f32, (i % 3) as f32]).collect();
        let c = CostMatrix::from_points(&pts).unwrap();
        let g = mos_plan(&c, 8, None).unwrap();
        assert_eq!(g.edges().len(), 8);
        assert_eq!(g.repair_edges(), 8);
        assert!(g.is_connected());
    }

    #[test]
    fn bad_bounds_rejected() {
        let c = CostMatrix::unit(3);
        assert!(mos_plan(&c, 0, Some(2)).is_err());
        assert!(mos_plan(&c, 2, Some(0)).is_err());
        assert!(MergeOrderGraph::from_edges(3, &[(0, 0)], 2, Some(2)).is_err());
        assert!(MergeOrderGraph::from_edges(3, &[(0, 1), (1, 0)], 2, Some(2)).is_err());
    }
}
