//! Merge-order planning over many partitions and the multi-index merge that
//! follows a plan.

mod io;
mod multi;
mod plan;

pub use io::{decode_plan, encode_plan, load_plan, save_plan, PlanFile};
pub use multi::{multi_merge, multi_merge_with, separated_search, EdgeMerge, MultiMergeReport};
pub use plan::{default_degree_bound, mos_plan, pairwise_plan, MergeOrderGraph, MosBuilder, Step};

use crate::error::{Error, Result};
use crate::vecstore::VectorSet;

/// Hop count standing in for "unreachable".
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Every pair costs 1 (random partitions).
    RandomUnit,
    /// Distance between partition centroids (clustered partitions).
    Centroid,
}

impl CostKind {
    pub fn label(&self) -> &'static str {
        match self {
            CostKind::RandomUnit => "random",
            CostKind::Centroid => "centroid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" | "random-unit" => Ok(CostKind::RandomUnit),
            "centroid" | "centroid-distance" => Ok(CostKind::Centroid),
            other => Err(Error::usage(format!("unknown cost kind {other:?}"))),
        }
    }
}

/// Symmetric pairwise merge costs with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    m: usize,
    costs: Vec<f64>,
    kind: CostKind,
}

impl CostMatrix {
    pub fn unit(m: usize) -> Self {
        let mut costs = vec![1.0; m * m];
        for i in 0..m {
            costs[i * m + i] = 0.0;
        }
        CostMatrix {
            m,
            costs,
            kind: CostKind::RandomUnit,
        }
    }

    /// Pairwise Euclidean distances between `points`.
    pub fn from_points(points: &[Vec<f32>]) -> Result<Self> {
        let m = points.len();
        if let Some(p) = points.iter().find(|p| p.len() != points[0].len()) {
            return Err(Error::usage(format!(
                "centroid dimensions differ: {} vs {}",
                points[0].len(),
                p.len()
            )));
        }
        let mut costs = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                // Planning distances stay out of the graph NDC counter.
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                costs[i * m + j] = d;
                costs[j * m + i] = d;
            }
        }
        Ok(CostMatrix {
            m,
            costs,
            kind: CostKind::Centroid,
        })
    }

    /// Builds from a full row-major matrix. Rejects asymmetry, a non-zero
    /// diagonal, and negative or non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let mut costs = Vec::with_capacity(m * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::usage(format!(
                    "cost row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            costs.extend_from_slice(row);
        }
        for i in 0..m {
            for j in 0..m {
                let c = costs[i * m + j];
                if !c.is_finite() || c < 0.0 || c != costs[j * m + i] || (i == j && c != 0.0) {
                    return Err(Error::usage(format!("invalid cost at ({i}, {j}): {c}")));
                }
            }
        }
        Ok(CostMatrix {
            m,
            costs,
            kind: CostKind::Centroid,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.m + j]
    }

    /// Total cost of an edge list.
    pub fn total(&self, edges: &[(usize, usize)]) -> f64 {
        edges.iter().map(|&(i, j)| self.get(i, j)).sum()
    }
}

/// Cost matrix over partitions. Centroids are coordinate-wise means.
pub fn build_cost_matrix(partitions: &[&VectorSet], kind: CostKind) -> Result<CostMatrix> {
    if partitions.is_empty() {
        return Err(Error::usage("need at least one partition"));
    }
    if let Some(i) = partitions.iter().position(|p| p.is_empty()) {
        return Err(Error::usage(format!("partition {i} is empty")));
    }
    match kind {
        CostKind::RandomUnit => Ok(CostMatrix::unit(partitions.len())),
        CostKind::Centroid => {
            let centroids: Vec<Vec<f32>> = partitions.iter().filter_map(|p| p.centroid()).collect();
            CostMatrix::from_points(&centroids)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_centroids() {
        let parts: Vec<VectorSet> = [[0.0f32, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
            .iter()
            .map(|c| VectorSet::from_rows(&[[c[0] - 0.5, c[1]], [c[0] + 0.5, c[1]]]).unwrap())
            .collect();
        let refs: Vec<&VectorSet> = parts.iter().collect();
        let c = build_cost_matrix(&refs, CostKind::Centroid).unwrap();
        let s = 2f64.sqrt();
        let want = [
            [0.0, 1.0, s, 1.0],
            [1.0, 0.0, 1.0, s],
            [s, 1.0, 0.0, 1.0],
            [1.0, s, 1.0, 0.0],
        ];
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!((c.get(i, j) - w).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identical_partitions_cost_zero_and_unit_kind() {
        let p = VectorSet::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
        let c = build_cost_matrix(&[&p, &p], CostKind::Centroid).unwrap();
        assert_eq!(c.get(0, 1), 0.0);
        let u = build_cost_matrix(&[&p, &p, &p], CostKind::RandomUnit).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(u.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn empty_partition_rejected() {
        let p = VectorSet::from_rows(&[[1.0f32]]).unwrap();
        assert!(matches!(
            build_cost_matrix(&[&p, &VectorSet::new(1)], CostKind::Centroid),
            Err(Error::Usage(_))
        ));
        assert!(build_cost_matrix(&[], CostKind::RandomUnit).is_err());
        assert!(CostMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    }
}
