//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{assemble, check_m, PartitionKind, PartitionSpec, Partitioning};
use crate::error::Result;
use crate::vecstore::VectorSet;

pub const DEFAULT_MAX_ITERS: usize = 50;
/// Stop once no centroid moves farther than this.
pub const DEFAULT_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KmeansParams {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

// Kept apart from the graph kernels so clustering never shows up in NDC.
fn dist2(a: &[f32], c: &[f64]) -> f64 {
    a.iter()
        .zip(c)
        .map(|(x, y)| {
            let d = f64::from(*x) - y;
            d * d
        })
        .sum()
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

fn seed_centers(set: &VectorSet, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = set.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![to_f64(set.get(first as u32))];
    let mut d: Vec<f64> = (0..n)
        .map(|i| dist2(set.get(i as u32), &centers[0]))
        .collect();
    while centers.len() < m {
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // All remaining points coincide with a center.
            (0..n).find(|&i| !chosen[i]).expect("m <= n")
        };
        chosen[pick] = true;
        let c = to_f64(set.get(pick as u32));
        for (i, di) in d.iter_mut().enumerate() {
            *di = di.min(dist2(set.get(i as u32), &c));
        }
        centers.push(c);
    }
    centers
}

/// Nearest center per row (lower center index on ties) and its squared distance.
fn assign(set: &VectorSet, centers: &[Vec<f64>], prev: Option<&[usize]>) -> Vec<(usize, f64)> {
    (0..set.len())
        .into_par_iter()
        .map(|i| {
            let v = set.get(i as u32);
            let mut best = match prev {
                Some(p) => (p[i], dist2(v, &centers[p[i]])),
                None => (0, f64::INFINITY),
            };
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(v, center);
                // Only strict improvements move a row, so inertia cannot rise on ties.
                if d < best.1 || (prev.is_none() && d == best.1 && c < best.0) {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

/// Moves the farthest row of the largest cluster into each empty cluster.
fn repair_empty(assigned: &mut [(usize, f64)], centers: &mut [Vec<f64>], set: &VectorSet) {
    let m = centers.len();
    loop {
        let mut sizes = vec![0usize; m];
        for &(c, _) in assigned.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..m)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .expect("m >= 1");
        let far = (0..assigned.len())
            .filter(|&i| assigned[i].0 == largest)
            .max_by(|&a, &b| assigned[a].1.total_cmp(&assigned[b].1).then(b.cmp(&a)))
            .expect("largest cluster is non-empty");
        assigned[far] = (empty, 0.0);
        centers[empty] = to_f64(set.get(far as u32));
    }
}

fn update(set: &VectorSet, assigned: &[(usize, f64)], m: usize) -> Vec<Vec<f64>> {
    let mut members = vec![Vec::new(); m];
    for (i, &(c, _)) in assigned.iter().enumerate() {
        members[c].push(i);
    }
    let dim = set.dim();
    members
        .par_iter()
        .map(|rows| {
            let mut acc = vec![0.0f64; dim];
            for &i in rows {
                for (a, x) in acc.iter_mut().zip(set.get(i as u32)) {
                    *a += f64::from(*x);
                }
            }
            let n = rows.len().max(1) as f64;
            acc.iter_mut().for_each(|a| *a /= n);
            acc
        })
        .collect()
}

/// [`partition_kmeans_with`] with the default tolerance.
pub fn partition_kmeans(
    set: &VectorSet,
    m: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Partitioning> {
    partition_kmeans_with(
        set,
        m,
        seed,
        &KmeansParams {
            max_iters,
            ..KmeansParams::default()
        },
    )
}

/// Clusters `set` into `m` partitions. Runs at most `max_iters` rounds of
/// assignment and update, stopping early once every centroid moves less
/// than `tol`. `inertia[t]` is the objective right after round `t`'s
/// assignment. Results depend only on the inputs, not the thread count.
pub fn partition_kmeans_with(
    set: &VectorSet,
    m: usize,
    seed: u64,
    params: &KmeansParams,
) -> Result<Partitioning> {
    check_m(set, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(set, m, &mut rng);
    let mut assigned = assign(set, &centers, None);
    repair_empty(&mut assigned, &mut centers, set);
    let mut inertia = Vec::new();
    for round in 0..params.max_iters.max(1) {
        if round > 0 {
            let prev: Vec<usize> = assigned.iter().map(|a| a.0).collect();
            assigned = assign(set, &centers, Some(&prev));
            repair_empty(&mut assigned, &mut centers, set);
        }
        inertia.push(assigned.iter().map(|a| a.1).sum());
        let next = update(set, &assigned, m);
        let moved = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        centers = next;
        if moved < params.tol {
            break;
        }
    }
    let spec = PartitionSpec {
        m,
        kind: PartitionKind::Kmeans,
        seed,
        assignments: assigned.iter().map(|a| a.0).collect(),
    };
    assemble(set, spec, inertia)
}
