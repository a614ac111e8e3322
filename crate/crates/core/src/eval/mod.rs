//! Ground truth, recall, search benchmarks, strategy comparisons and the
//! CSV reports they produce.

mod compare;
mod report;
mod variants;

pub use compare::{
    compare_merge_orders, compare_merge_strategies, medoid, path_plan, random_regular_plan,
    star_plan, topology_plan, CompareParams, MergeStrategy, OrderRow, StrategyRow, Topology,
};
pub use report::{
    bench_csv, merge_report_csv, multi_merge_csv, order_csv, render_csv, samples_csv, strategy_csv,
    variant_csv, REPORT_HEADER,
};
pub use variants::{nsm_iterative_ratio, pivot_variant_study, PivotVariant, VariantRow};

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mos::separated_search;
use crate::pgraph::{Index, SearchScratch, SearchStats};
use crate::vecstore::{GroundTruth, NodeId, VectorSet};

// Exact scans use their own kernel so they never count as graph NDC.
fn exact_dist2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Exact top-`k` global ids of every query by exhaustive scan, ties to the
/// lower id.
pub fn brute_force_knn(base: &VectorSet, queries: &VectorSet, k: usize) -> Result<GroundTruth> {
    if k == 0 || k > base.len() {
        return Err(Error::usage(format!(
            "k = {k} for a base of {} vectors",
            base.len()
        )));
    }
    if !queries.is_empty() && queries.dim() != base.dim() {
        return Err(Error::usage(format!(
            "dimension mismatch: base {} vs queries {}",
            base.dim(),
            queries.dim()
        )));
    }
    let rows = (0..queries.len())
        .into_par_iter()
        .map(|q| {
            let query = queries.get(q as NodeId);
            let mut all: Vec<(f64, u64)> = (0..base.len())
                .map(|i| {
                    (
                        exact_dist2(query, base.get(i as NodeId)),
                        base.id(i as NodeId),
                    )
                })
                .collect();
            let cmp = |a: &(f64, u64), b: &(f64, u64)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < all.len() {
                all.select_nth_unstable_by(k - 1, cmp);
                all.truncate(k);
            }
            all.sort_by(cmp);
            all.into_iter().map(|(_, id)| id).collect()
        })
        .collect();
    GroundTruth::new(k, rows)
}

/// `|first k of result ∩ first k of truth| / k`.
pub fn recall_at_k(result: &[u64], truth: &[u64], k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let truth = &truth[..truth.len().min(k)];
    let hits = result
        .iter()
        .take(k)
        .filter(|id| truth.contains(id))
        .count();
    hits as f64 / k as f64
}

/// One point of a recall/QPS sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub strategy: String,
    pub ef: usize,
    pub recall_at_k: f64,
    pub qps: f64,
    pub mean_ndc: f64,
    pub mean_hops: f64,
    pub build_or_merge_ms: f64,
}

/// A sweep plus the raw result ids behind every recall number:
/// `ids[e][q]` are query `q`'s global ids at `efs[e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRun {
    pub results: Vec<BenchResult>,
    pub ids: Vec<Vec<Vec<u64>>>,
}

impl BenchRun {
    pub fn with_label(mut self, label: &str, build_or_merge_ms: f64) -> Self {
        for r in &mut self.results {
            r.strategy = label.to_string();
            r.build_or_merge_ms = build_or_merge_ms;
        }
        self
    }
}

fn check_bench_inputs(
    queries: &VectorSet,
    truth: &GroundTruth,
    efs: &[usize],
    k: usize,
) -> Result<()> {
    if truth.query_count() != queries.len() {
        return Err(Error::usage(format!(
            "{} ground-truth rows for {} queries",
            truth.query_count(),
            queries.len()
        )));
    }
    if truth.k() < k || k == 0 {
        return Err(Error::usage(format!(
            "ground truth has k = {}, asked for {k}",
            truth.k()
        )));
    }
    if let Some(ef) = efs.iter().find(|&&ef| ef < k) {
        return Err(Error::usage(format!("ef {ef} is below k = {k}")));
    }
    Ok(())
}

/// Runs every query at every ef on the calling thread.
fn sweep<F>(
    queries: &VectorSet,
    truth: &GroundTruth,
    efs: &[usize],
    k: usize,
    mut search: F,
) -> Result<BenchRun>
where
    F: FnMut(&[f32], usize, &mut SearchScratch) -> Result<(Vec<u64>, SearchStats)>,
{
    check_bench_inputs(queries, truth, efs, k)?;
    let mut scratch = SearchScratch::new();
    let mut run = BenchRun {
        results: Vec::with_capacity(efs.len()),
        ids: Vec::with_capacity(efs.len()),
    };
    let nq = queries.len().max(1) as f64;
    for &ef in efs {
        let mut ids = Vec::with_capacity(queries.len());
        let mut total = SearchStats::default();
        let start = Instant::now();
        for q in queries.iter() {
            let (found, stats) = search(q, ef, &mut scratch)?;
            total.accumulate(&stats);
            ids.push(found);
        }
        let secs = start.elapsed().as_secs_f64();
        let recall = ids
            .iter()
            .enumerate()
            .map(|(q, found)| recall_at_k(found, truth.row(q), k))
            .sum::<f64>()
            / nq;
        run.results.push(BenchResult {
            strategy: String::new(),
            ef,
            recall_at_k: recall,
            qps: if secs > 0.0 {
                queries.len() as f64 / secs
            } else {
                f64::INFINITY
            },
            mean_ndc: total.ndc as f64 / nq,
            mean_hops: total.hops as f64 / nq,
            build_or_merge_ms: 0.0,
        });
        run.ids.push(ids);
    }
    Ok(run)
}

/// Recall, single-threaded QPS, mean NDC and hops of `index` at each ef.
/// Result ids are the index's global ids, matched against `truth`.
pub fn bench_search(
    index: &Index,
    queries: &VectorSet,
    truth: &GroundTruth,
    efs: &[usize],
    k: usize,
) -> Result<BenchRun> {
    if !queries.is_empty() && queries.dim() != index.dim() {
        return Err(Error::usage(format!(
            "dimension mismatch: index {} vs queries {}",
            index.dim(),
            queries.dim()
        )));
    }
    sweep(queries, truth, efs, k, |q, ef, scratch| {
        let (res, stats) = index.search(q, ef, k, scratch)?;
        Ok((res.iter().map(|c| index.vectors.id(c.id)).collect(), stats))
    })
}

/// Same sweep over separate indexes searched one after another.
pub fn bench_separated(
    indexes: &[&Index],
    queries: &VectorSet,
    truth: &GroundTruth,
    efs: &[usize],
    k: usize,
) -> Result<BenchRun> {
    let ids: Vec<u64> = indexes
        .iter()
        .flat_map(|i| i.vectors.ids().iter().copied())
        .collect();
    sweep(queries, truth, efs, k, |q, ef, scratch| {
        let (res, stats) = separated_search(indexes, q, ef, k, scratch)?;
        Ok((res.iter().map(|c| ids[c.id as usize]).collect(), stats))
    })
}

/// Smallest swept ef whose recall reaches `target`.
pub fn calibrate_ef(results: &[BenchResult], target: f64) -> Option<usize> {
    results
        .iter()
        .filter(|r| r.recall_at_k >= target)
        .map(|r| r.ef)
        .min()
}

fn interpolate(points: &mut [(f64, f64)], x: f64) -> Option<f64> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = points.first()?;
    let last = points.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x >= x0 && x <= x1 {
            if x1 == x0 {
                return Some(y0.max(y1));
            }
            return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
        }
    }
    Some(first.1)
}

/// QPS at the given recall, linearly interpolated along the sweep.
/// `None` if the sweep does not span `recall`.
pub fn qps_at_recall(results: &[BenchResult], recall: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = results.iter().map(|r| (r.recall_at_k, r.qps)).collect();
    interpolate(&mut pts, recall)
}

/// Recall at the given QPS, linearly interpolated along the sweep.
pub fn recall_at_qps(results: &[BenchResult], qps: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = results.iter().map(|r| (r.qps, r.recall_at_k)).collect();
    interpolate(&mut pts, qps)
}

/// Mean of `recall_a - recall_b(qps_a)` over the points of `a` whose QPS
/// lies inside `b`'s range. `None` if the curves do not overlap.
pub fn mean_recall_gap(a: &[BenchResult], b: &[BenchResult]) -> Option<f64> {
    let gaps: Vec<f64> = a
        .iter()
        .filter_map(|p| recall_at_qps(b, p.qps).map(|rb| p.recall_at_k - rb))
        .collect();
    if gaps.is_empty() {
        None
    } else {
        Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgraph::BuildParams;
    use crate::vecstore::synth;

    #[test]
    fn line_case() {
        let base = VectorSet::from_rows(&[[0.0f32], [1.0], [2.0]]).unwrap();
        let q = VectorSet::from_rows(&[[0.6f32], [2.0]]).unwrap();
        let gt = brute_force_knn(&base, &q, 2).unwrap();
        assert_eq!(gt.row(0), &[1, 0]);
        assert_eq!(gt.row(1)[0], 2);
        assert!(brute_force_knn(&base, &q, 4).is_err());
    }

    #[test]
    fn recall_cases() {
        let t: Vec<u64> = (0..10).collect();
        assert_eq!(recall_at_k(&t, &t, 10), 1.0);
        assert_eq!(recall_at_k(&(10..20).collect::<Vec<_>>(), &t, 10), 0.0);
        let mut r = t.clone();
        r[9] = 99;
        assert!((recall_at_k(&r, &t, 10) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn full_beam_is_exact() {
        let set = synth::gaussian(300, 6, 3);
        let idx = Index::build(&set, &BuildParams::default()).unwrap().0;
        let q = synth::gaussian(20, 6, 4);
        let gt = brute_force_knn(&set, &q, 10).unwrap();
        let run = bench_search(&idx, &q, &gt, &[300], 10).unwrap();
        assert_eq!(run.results[0].recall_at_k, 1.0);
        assert_eq!(run.ids[0].len(), 20);
    }

    #[test]
    fn interpolation() {
        let pts = |v: &[(f64, f64)]| -> Vec<BenchResult> {
            v.iter()
                .map(|&(r, q)| BenchResult {
                    strategy: String::new(),
                    ef: 0,
                    recall_at_k: r,
                    qps: q,
                    mean_ndc: 0.0,
                    mean_hops: 0.0,
                    build_or_merge_ms: 0.0,
                })
                .collect()
        };
        let a = pts(&[(0.8, 1000.0), (0.9, 500.0), (1.0, 100.0)]);
        assert!((qps_at_recall(&a, 0.95).unwrap() - 300.0).abs() < 1e-9);
        assert!((recall_at_qps(&a, 750.0).unwrap() - 0.85).abs() < 1e-9);
        assert_eq!(qps_at_recall(&a, 0.5), None);
        assert!(mean_recall_gap(&a, &a).unwrap().abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), Some(1.0));
    }
}
