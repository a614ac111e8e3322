//! Local-sliding ratio of three pivot strategies over a k sweep.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pgraph::Index;
use crate::rnsm::{
    build_reverse_index, expand_neighbors, select_pivots, select_pivots_in_order, MergeParams,
};
use crate::vecstore::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PivotVariant {
    /// Nodes in random order; a node slides if one of its own k nearest
    /// neighbors was already handled, otherwise it is searched naively.
    NsmIterative,
    /// Reverse-neighbor sliding with pivots visited in random order.
    RnsmRandomPivots,
    /// Reverse-neighbor sliding with hub-first pivots.
    Rnsm,
}

impl PivotVariant {
    pub const ALL: [PivotVariant; 3] = [
        PivotVariant::NsmIterative,
        PivotVariant::RnsmRandomPivots,
        PivotVariant::Rnsm,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PivotVariant::NsmIterative => "nsm-iterative",
            PivotVariant::RnsmRandomPivots => "rnsm-random-pivots",
            PivotVariant::Rnsm => "rnsm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantRow {
    pub variant: String,
    pub k: usize,
    pub pivots: usize,
    pub followers: usize,
    pub sliding_ratio: f64,
}

/// Fraction of nodes, visited in `order`, that have an earlier-visited
/// node among their `knn` entries.
pub fn nsm_iterative_ratio(knn: &[Vec<NodeId>], order: &[NodeId]) -> (usize, usize) {
    let mut done = vec![false; knn.len()];
    let mut followers = 0;
    for &x in order {
        if knn[x as usize].iter().any(|&y| done[y as usize]) {
            followers += 1;
        }
        done[x as usize] = true;
    }
    (knn.len() - followers, followers)
}

/// Sliding ratio of each variant at each `k`. Neighborhoods come from one
/// expansion of `source` with `k_plus = max(params.k_plus, max k)`; random
/// orders are seeded and shared across `k`.
pub fn pivot_variant_study(
    source: &Index,
    variants: &[PivotVariant],
    ks: &[usize],
    params: &MergeParams,
    seed: u64,
) -> Result<Vec<VariantRow>> {
    let n = source.len();
    let k_max = ks.iter().copied().max().unwrap_or(0);
    if ks.contains(&0) || k_max >= n {
        return Err(Error::usage(format!("every k must be in 1..{n}")));
    }
    let k_plus = params.k_plus.max(k_max).min(n - 1);
    let expansion = expand_neighbors(source, k_plus, params.expand_pad, params.workers)?;
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rows = Vec::with_capacity(ks.len() * variants.len());
    for &k in ks {
        let rindex = build_reverse_index(&expansion.lists, k);
        for &v in variants {
            let (pivots, followers) = match v {
                PivotVariant::NsmIterative => nsm_iterative_ratio(&rindex.knn, &order),
                PivotVariant::RnsmRandomPivots => {
                    let p = select_pivots_in_order(&rindex, &order);
                    (p.pivots.len(), p.follower_count())
                }
                PivotVariant::Rnsm => {
                    let p = select_pivots(&rindex);
                    (p.pivots.len(), p.follower_count())
                }
            };
            rows.push(VariantRow {
                variant: v.label().to_string(),
                k,
                pivots,
                followers,
                sliding_ratio: followers as f64 / n as f64,
            });
        }
    }
    Ok(rows)
}
