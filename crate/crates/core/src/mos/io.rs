//! `plan.json`: `{"m": int, "edges": [[i, j], ...], "R": int, "delta": int}`.
//! An unbounded diameter is written as `"delta": null`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MergeOrderGraph;
use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub m: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(rename = "R")]
    pub r: usize,
    pub delta: Option<usize>,
}

impl From<&MergeOrderGraph> for PlanFile {
    fn from(g: &MergeOrderGraph) -> Self {
        PlanFile {
            m: g.m(),
            edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
            r: g.degree_bound(),
            delta: g.diameter_bound(),
        }
    }
}

pub fn encode_plan(plan: &MergeOrderGraph) -> Vec<u8> {
    let mut out = serde_json::to_vec(&PlanFile::from(plan)).expect("plan serializes");
    out.push(b'\n');
    out
}

pub fn decode_plan(bytes: &[u8]) -> Result<MergeOrderGraph> {
    let file: PlanFile =
        serde_json::from_slice(bytes).map_err(|e| Error::format(format!("plan json: {e}")))?;
    if file.m == 0 || file.r == 0 || file.delta == Some(0) {
        return Err(Error::format("plan needs m, R and delta of at least 1"));
    }
    let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
    MergeOrderGraph::from_edges(file.m, &edges, file.r, file.delta).map_err(|e| match e {
        Error::Usage(msg) => Error::format(msg),
        other => other,
    })
}

pub fn save_plan(plan: &MergeOrderGraph, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path.as_ref(), &encode_plan(plan))
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<MergeOrderGraph> {
    decode_plan(&fsutil::read(path.as_ref())?)
}
