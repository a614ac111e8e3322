//! Relative-neighborhood-graph neighbor selection.

use super::Candidate;
use crate::vecstore::{NodeId, Space};

/// Selects at most `max_degree` neighbors for `query_id` from `candidates`
/// (ascending by distance to `query_id`).
///
/// A candidate `c` survives iff it is strictly closer to the query than to
/// every neighbor already kept. The nearest candidate is always kept. The
/// query itself and repeated ids are skipped. Returns the kept ids in
/// ascending distance order and the number of distances computed.
pub fn prune_rng<S: Space + ?Sized>(
    space: &S,
    query_id: NodeId,
    candidates: &[Candidate],
    max_degree: usize,
) -> (Vec<NodeId>, u64) {
    let mut kept: Vec<Candidate> = Vec::with_capacity(max_degree);
    let mut ndc = 0u64;
    for c in candidates {
        if kept.len() >= max_degree {
            break;
        }
        if c.id == query_id || kept.iter().any(|s| s.id == c.id) {
            continue;
        }
        let mut occluded = false;
        for s in &kept {
            ndc += 1;
            if space.dist2(c.id, s.id) <= c.dist2 {
                occluded = true;
                break;
            }
        }
        if !occluded {
            kept.push(*c);
        }
    }
    (kept.into_iter().map(|c| c.id).collect(), ndc)
}

/// Candidate list for `node` from `ids`, with distances computed and sorted
/// ascending (lower id first on ties). Returns the list and its NDC.
pub(crate) fn rank_by_distance<S: Space + ?Sized>(
    space: &S,
    node: NodeId,
    ids: impl IntoIterator<Item = NodeId>,
) -> (Vec<Candidate>, u64) {
    let q = space.vector(node);
    let mut out: Vec<Candidate> = ids
        .into_iter()
        .map(|id| Candidate::new(id, space.dist2_to(q, id)))
        .collect();
    let ndc = out.len() as u64;
    out.sort_by(Candidate::cmp_by_dist);
    out.dedup_by_key(|c| c.id);
    (out, ndc)
}
