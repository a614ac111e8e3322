//! Splitting a dataset into disjoint partitions.
//!
//! Partition `i` owns the contiguous global id range
//! `[offset_i, offset_i + count_i)`, in partition order. Rows inside a
//! partition keep ascending source-row order.

mod kmeans;
mod manifest;

pub use kmeans::{
    partition_kmeans, partition_kmeans_with, KmeansParams, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
pub use manifest::{
    decode_manifest, encode_manifest, load_manifest, part_file_name, save_manifest,
    write_partitions, Manifest, ManifestPart, MANIFEST_VERSION,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vecstore::{NodeId, VectorSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PartitionKind {
    Random,
    Kmeans,
}

impl PartitionKind {
    pub fn label(&self) -> &'static str {
        match self {
            PartitionKind::Random => "random",
            PartitionKind::Kmeans => "kmeans",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PartitionKind::Random),
            "kmeans" => Ok(PartitionKind::Kmeans),
            other => Err(Error::usage(format!("unknown partition kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    pub m: usize,
    pub kind: PartitionKind,
    pub seed: u64,
    /// Partition index of every source row.
    pub assignments: Vec<usize>,
}

impl PartitionSpec {
    /// Source rows of each partition, ascending.
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.m];
        for (row, &p) in self.assignments.iter().enumerate() {
            out[p].push(row as NodeId);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partitioning {
    pub parts: Vec<VectorSet>,
    pub spec: PartitionSpec,
    /// Coordinate-wise mean of each partition.
    pub centroids: Vec<Vec<f32>>,
    /// k-means objective after each assignment step; empty for random splits.
    pub inertia: Vec<f64>,
}

impl Partitioning {
    /// First global id of each partition.
    pub fn offsets(&self) -> Vec<u64> {
        let mut acc = 0;
        self.parts
            .iter()
            .map(|p| {
                let o = acc;
                acc += p.len() as u64;
                o
            })
            .collect()
    }
}

fn check_m(set: &VectorSet, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::usage("partition count must be at least 1"));
    }
    if m > set.len() {
        return Err(Error::usage(format!(
            "{m} partitions for {} vectors",
            set.len()
        )));
    }
    Ok(())
}

/// Materializes partitions from assignments, giving each its id range.
fn assemble(set: &VectorSet, spec: PartitionSpec, inertia: Vec<f64>) -> Result<Partitioning> {
    let mut parts = Vec::with_capacity(spec.m);
    let mut offset = 0u64;
    for rows in spec.members() {
        let ids = (offset..offset + rows.len() as u64).collect();
        offset += rows.len() as u64;
        parts.push(set.select(&rows).with_ids(ids)?);
    }
    let centroids = parts
        .iter()
        .map(|p| p.centroid().unwrap_or_else(|| vec![0.0; set.dim()]))
        .collect();
    Ok(Partitioning {
        parts,
        spec,
        centroids,
        inertia,
    })
}

/// Seeded shuffle, then row `i` of the shuffle goes to partition `i % m`.
pub fn partition_random(set: &VectorSet, m: usize, seed: u64) -> Result<Partitioning> {
    check_m(set, m)?;
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; set.len()];
    for (i, &row) in order.iter().enumerate() {
        assignments[row] = i % m;
    }
    let spec = PartitionSpec {
        m,
        kind: PartitionKind::Random,
        seed,
        assignments,
    };
    assemble(set, spec, Vec::new())
}

/// Dispatches on `kind` with default k-means settings.
pub fn partition(
    set: &VectorSet,
    m: usize,
    kind: PartitionKind,
    seed: u64,
) -> Result<Partitioning> {
    match kind {
        PartitionKind::Random => partition_random(set, m, seed),
        PartitionKind::Kmeans => partition_kmeans(set, m, seed, DEFAULT_MAX_ITERS),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecstore::synth;

    #[test]
    fn ten_into_two() {
        let set = synth::gaussian(10, 3, 1);
        let p = partition_random(&set, 2, 9).unwrap();
        assert_eq!(
            p.parts.iter().map(VectorSet::len).collect::<Vec<_>>(),
            [5, 5]
        );
        assert_eq!(p.parts[0].ids(), &[0, 1, 2, 3, 4]);
        assert_eq!(p.parts[1].ids(), &[5, 6, 7, 8, 9]);
        assert_eq!(p.offsets(), [0, 5]);
    }

    #[test]
    fn single_partition_is_identity() {
        let set = synth::gaussian(17, 4, 2);
        let p = partition_random(&set, 1, 3).unwrap();
        assert_eq!(p.parts[0], set);
    }

    #[test]
    fn too_many_partitions() {
        let set = synth::gaussian(3, 2, 0);
        assert!(matches!(partition_random(&set, 4, 0), Err(Error::Usage(_))));
        assert!(matches!(partition_random(&set, 0, 0), Err(Error::Usage(_))));
        assert_eq!(
            PartitionKind::parse("kmeans").unwrap(),
            PartitionKind::Kmeans
        );
        assert!(PartitionKind::parse("grid").is_err());
    }
}
