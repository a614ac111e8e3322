//! CSV emission. Every report starts with a version line, then one
//! `# key=value` line per config entry, then a header row.

use serde::Serialize;

use super::{BenchResult, OrderRow, StrategyRow, VariantRow};
use crate::error::{Error, Result};
use crate::mos::MultiMergeReport;
use crate::rnsm::MergeReport;

pub const REPORT_HEADER: &str = "# pgmerge-report v1";

pub fn render_csv<T: Serialize>(config: &[(String, String)], rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(REPORT_HEADER.as_bytes());
    out.push(b'\n');
    for (k, v) in config {
        out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::format(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::format(format!("csv: {e}")))
}

pub fn bench_csv(config: &[(String, String)], rows: &[BenchResult]) -> Result<Vec<u8>> {
    render_csv(config, rows)
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Serialize)]
struct PhaseRow<'a> {
    phase: &'a str,
    pivots: usize,
    followers: usize,
    sliding_ratio: f64,
    total_ndc: u64,
    wall_ms: f64,
}

/// One row per merge phase plus a `total` row.
pub fn merge_report_csv(config: &[(String, String)], r: &MergeReport) -> Result<Vec<u8>> {
    let row = |phase, total_ndc, wall_ms| PhaseRow {
        phase,
        pivots: r.pivots,
        followers: r.followers,
        sliding_ratio: r.sliding_ratio(),
        total_ndc,
        wall_ms,
    };
    let rows = [
        row("expand", r.expand_ndc, ms(r.expand_time)),
        row("select", 0, ms(r.select_time)),
        row("naive", r.naive_ndc, 0.0),
        row("slide", r.slide_ndc, 0.0),
        row("update", r.update_ndc, 0.0),
        row(
            "merge",
            r.naive_ndc + r.slide_ndc + r.update_ndc,
            ms(r.merge_time),
        ),
        row("repair", r.repair_ndc, 0.0),
        row("total", r.total_ndc(), ms(r.wall_time())),
    ];
    render_csv(config, &rows)
}

#[derive(Serialize)]
struct SampleRow {
    pivot_dist: f32,
    slide_ndc: u64,
}

pub fn samples_csv(config: &[(String, String)], r: &MergeReport) -> Result<Vec<u8>> {
    let rows: Vec<SampleRow> = r
        .samples
        .iter()
        .map(|&(pivot_dist, slide_ndc)| SampleRow {
            pivot_dist,
            slide_ndc,
        })
        .collect();
    render_csv(config, &rows)
}

#[derive(Serialize)]
struct EdgeRow {
    edge: String,
    source: String,
    target: String,
    pivots: usize,
    followers: usize,
    sliding_ratio: f64,
    total_ndc: u64,
    wall_ms: f64,
}

/// One row per processed plan edge, then a `total` row.
pub fn multi_merge_csv(config: &[(String, String)], r: &MultiMergeReport) -> Result<Vec<u8>> {
    let mut rows: Vec<EdgeRow> = r
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| EdgeRow {
            edge: i.to_string(),
            source: e.source.to_string(),
            target: e.target.to_string(),
            pivots: e.report.pivots,
            followers: e.report.followers,
            sliding_ratio: e.report.sliding_ratio(),
            total_ndc: e.report.total_ndc(),
            wall_ms: ms(e.report.wall_time()),
        })
        .collect();
    rows.push(EdgeRow {
        edge: "total".into(),
        source: String::new(),
        target: String::new(),
        pivots: r.total.pivots,
        followers: r.total.followers,
        sliding_ratio: r.total.sliding_ratio(),
        total_ndc: r.total_ndc(),
        wall_ms: ms(r.elapsed),
    });
    render_csv(config, &rows)
}

#[derive(Serialize)]
struct StrategyCsvRow<'a> {
    strategy: &'a str,
    edges: usize,
    merge_ms: f64,
    merge_ndc: u64,
    ndc_speedup_vs_nm: f64,
    ndc_speedup_vs_rebuild: f64,
    time_speedup_vs_nm: f64,
    time_speedup_vs_rebuild: f64,
    ef: usize,
    recall_at_k: f64,
    qps: f64,
    mean_ndc: f64,
}

/// One row per (strategy, ef).
pub fn strategy_csv(config: &[(String, String)], rows: &[StrategyRow]) -> Result<Vec<u8>> {
    let flat: Vec<StrategyCsvRow> = rows
        .iter()
        .flat_map(|s| {
            s.bench.results.iter().map(move |b| StrategyCsvRow {
                strategy: s.strategy.label(),
                edges: s.edges,
                merge_ms: s.merge_ms,
                merge_ndc: s.merge_ndc,
                ndc_speedup_vs_nm: s.ndc_speedup_vs_nm,
                ndc_speedup_vs_rebuild: s.ndc_speedup_vs_rebuild,
                time_speedup_vs_nm: s.time_speedup_vs_nm,
                time_speedup_vs_rebuild: s.time_speedup_vs_rebuild,
                ef: b.ef,
                recall_at_k: b.recall_at_k,
                qps: b.qps,
                mean_ndc: b.mean_ndc,
            })
        })
        .collect();
    render_csv(config, &flat)
}

#[derive(Serialize)]
struct OrderCsvRow<'a> {
    topology: &'a str,
    edges: usize,
    cost: f64,
    max_degree: usize,
    diameter: u32,
    merge_ndc: u64,
    merge_ms: f64,
    ef: usize,
    recall_at_k: f64,
    qps: f64,
    mean_ndc: f64,
}

pub fn order_csv(config: &[(String, String)], rows: &[OrderRow]) -> Result<Vec<u8>> {
    let flat: Vec<OrderCsvRow> = rows
        .iter()
        .flat_map(|o| {
            o.bench.results.iter().map(move |b| OrderCsvRow {
                topology: o.topology.label(),
                edges: o.plan.edges().len(),
                cost: o.cost,
                max_degree: o.plan.max_degree(),
                diameter: o.plan.diameter().unwrap_or(u32::MAX),
                merge_ndc: o.merge_ndc,
                merge_ms: o.merge_ms,
                ef: b.ef,
                recall_at_k: b.recall_at_k,
                qps: b.qps,
                mean_ndc: b.mean_ndc,
            })
        })
        .collect();
    render_csv(config, &flat)
}

pub fn variant_csv(config: &[(String, String)], rows: &[VariantRow]) -> Result<Vec<u8>> {
    render_csv(config, rows)
}
