//! Oracles shared by the integration tests. Nothing here calls into the
//! library's distance kernels or search code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::atomic::{AtomicU64, Ordering};

use pgmerge::vecstore::{NodeId, Space, VectorSet};

pub fn dist2_f64(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Exhaustive k-NN by position, ties to the lower position.
pub fn brute_knn(base: &VectorSet, q: &[f32], k: usize) -> Vec<NodeId> {
    let mut all: Vec<(f64, NodeId)> = (0..base.len() as NodeId)
        .map(|i| (dist2_f64(q, base.get(i)), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(_, i)| i).collect()
}

/// Like [`brute_knn`] but skips `exclude`.
pub fn brute_knn_excluding(base: &VectorSet, v: NodeId, k: usize) -> Vec<NodeId> {
    let mut out = brute_knn(base, base.get(v), k + 1);
    out.retain(|&u| u != v);
    out.truncate(k);
    out
}

pub fn recall(found: &[NodeId], truth: &[NodeId]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hits = found.iter().filter(|f| truth.contains(f)).count();
    hits as f64 / truth.len() as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Wraps a vector set and counts every distance the library asks for.
pub struct CountingSpace<'a> {
    pub inner: &'a VectorSet,
    pub calls: AtomicU64,
}

impl<'a> CountingSpace<'a> {
    pub fn new(inner: &'a VectorSet) -> Self {
        CountingSpace {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn take(&self) -> u64 {
        self.calls.swap(0, Ordering::Relaxed)
    }
}

impl Space for CountingSpace<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn vector(&self, id: NodeId) -> &[f32] {
        self.inner.get(id)
    }

    fn dist2_to(&self, query: &[f32], id: NodeId) -> f32 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        dist2_f64(query, self.inner.get(id)) as f32
    }
}

/// Straight transcription of the occlusion rule: walk candidates nearest
/// first, keep one unless some kept node is at least as close to it as the
/// query is.
pub fn reference_rng(
    set: &VectorSet,
    q: NodeId,
    sorted: &[NodeId],
    max_degree: usize,
) -> Vec<NodeId> {
    let mut kept: Vec<NodeId> = Vec::new();
    for &c in sorted {
        if kept.len() == max_degree {
            break;
        }
        if c == q || kept.contains(&c) {
            continue;
        }
        let dq = dist2_f64(set.get(c), set.get(q));
        let mut occluded = false;
        for &s in &kept {
            if dist2_f64(set.get(c), set.get(s)) <= dq {
                occluded = true;
            }
        }
        if !occluded {
            kept.push(c);
        }
    }
    kept
}

/// Minimum over all pivot subsets that cover every node (a node is covered
/// by itself or by a pivot in its knn list) of
/// `gamma * |P| + sum over followers of the distance to the nearest pivot in its knn list`.
pub fn exhaustive_dps(
    knn: &[Vec<NodeId>],
    dist: impl Fn(NodeId, NodeId) -> f64,
    gamma: f64,
) -> (f64, u32) {
    let n = knn.len();
    assert!(n <= 16);
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1u32..(1 << n) {
        let mut cost = gamma * mask.count_ones() as f64;
        let mut ok = true;
        for y in 0..n {
            if mask & (1 << y) != 0 {
                continue;
            }
            let slide = knn[y]
                .iter()
                .filter(|&&p| mask & (1 << p) != 0)
                .map(|&p| dist(p, y as NodeId))
                .fold(f64::INFINITY, f64::min);
            if slide.is_infinite() {
                ok = false;
                break;
            }
            cost += slide;
        }
        if ok && cost < best.0 {
            best = (cost, mask);
        }
    }
    best
}

/// Size of a minimum dominating set where `y` is dominated by any pivot in
/// `knn[y]` (or by being a pivot).
pub fn exhaustive_mds(knn: &[Vec<NodeId>]) -> usize {
    let n = knn.len();
    (1u32..(1 << n))
        .filter(|&mask| {
            (0..n).all(|y| mask & (1 << y) != 0 || knn[y].iter().any(|&p| mask & (1 << p) != 0))
        })
        .map(u32::count_ones)
        .min()
        .unwrap_or(0) as usize
}

/// Connected components of an undirected edge list over `n` vertices.
pub fn components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut count = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

/// All-pairs hop counts by repeated BFS; `usize::MAX` when unreachable.
pub fn hops_bfs(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut q = std::collections::VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &u in &adj[v] {
                    if d[u] == usize::MAX {
                        d[u] = d[v] + 1;
                        q.push_back(u);
                    }
                }
            }
            d
        })
        .collect()
}

/// Cheapest edge set over `m` vertices that is connected, has every degree
/// at most `r`, and diameter at most `delta`. `None` if no such graph.
pub fn exhaustive_mos(
    cost: impl Fn(usize, usize) -> f64,
    m: usize,
    r: usize,
    delta: usize,
) -> Option<(f64, Vec<(usize, usize)>)> {
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    assert!(pairs.len() <= 21);
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    for mask in 0u32..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| *e)
            .collect();
        if edges.len() + 1 < m {
            continue;
        }
        let mut deg = vec![0; m];
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        if deg.iter().any(|&d| d > r) {
            continue;
        }
        let h = hops_bfs(m, &edges);
        if h.iter().flatten().any(|&d| d > delta) {
            continue;
        }
        let c: f64 = edges.iter().map(|&(a, b)| cost(a, b)).sum();
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, edges));
        }
    }
    best
}

/// Minimum spanning tree weight by Prim's algorithm on a dense matrix.
pub fn mst_weight(cost: impl Fn(usize, usize) -> f64, m: usize) -> f64 {
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..m {
        let v = (0..m)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[v] = true;
        total += best[v];
        for u in 0..m {
            if !in_tree[u] && cost(v, u) < best[u] {
                best[u] = cost(v, u);
            }
        }
    }
    total
}

/// Random symmetric cost matrix with entries in [1, 10).
pub fn random_costs(m: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let v = rng.random_range(1.0..10.0);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    c
}
