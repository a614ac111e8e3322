//! `manifest.json`: which source rows went into which partition file and
//! the global id range each partition owns.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PartitionKind, Partitioning};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::vecstore::{encode_fvecs, load_fvecs, GroundTruth, VectorSet};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPart {
    pub file: String,
    /// First global id; the partition owns `offset..offset + count`.
    pub offset: u64,
    pub count: u64,
    /// Source row of each vector, in file order.
    pub rows: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub kind: String,
    pub m: usize,
    pub seed: u64,
    pub dim: usize,
    pub count: u64,
    pub centroids: String,
    pub partitions: Vec<ManifestPart>,
}

impl Manifest {
    pub fn from_partitioning(p: &Partitioning, dim: usize) -> Self {
        let members = p.spec.members();
        let partitions = p
            .offsets()
            .into_iter()
            .zip(&members)
            .enumerate()
            .map(|(i, (offset, rows))| ManifestPart {
                file: part_file_name(i),
                offset,
                count: rows.len() as u64,
                rows: rows.iter().map(|&r| u64::from(r)).collect(),
            })
            .collect();
        Manifest {
            version: MANIFEST_VERSION,
            kind: p.spec.kind.label().to_string(),
            m: p.spec.m,
            seed: p.spec.seed,
            dim,
            count: p.spec.assignments.len() as u64,
            centroids: "centroids.fvecs".to_string(),
            partitions,
        }
    }

    /// Source row of a global id, `None` if no partition owns it.
    pub fn source_row(&self, global: u64) -> Option<u64> {
        self.partitions
            .iter()
            .find(|p| global >= p.offset && global < p.offset + p.count)
            .map(|p| p.rows[(global - p.offset) as usize])
    }

    /// Global id of every source row, indexed by row.
    pub fn global_ids(&self) -> Vec<u64> {
        let mut out = vec![0; self.count as usize];
        for p in &self.partitions {
            for (j, &r) in p.rows.iter().enumerate() {
                out[r as usize] = p.offset + j as u64;
            }
        }
        out
    }

    /// Rewrites ground truth computed over the source file (ids = rows)
    /// into global ids.
    pub fn translate_truth(&self, truth: &GroundTruth) -> Result<GroundTruth> {
        let map = self.global_ids();
        let rows = truth
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&r| {
                        map.get(r as usize).copied().ok_or_else(|| {
                            Error::format(format!("ground truth row {r} not in manifest"))
                        })
                    })
                    .collect::<Result<Vec<u64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        GroundTruth::new(truth.k(), rows)
    }

    /// Loads partition `i` from the directory holding the manifest, with
    /// its global ids attached.
    pub fn load_part(&self, dir: impl AsRef<Path>, i: usize) -> Result<VectorSet> {
        let entry = self
            .partitions
            .get(i)
            .ok_or_else(|| Error::usage(format!("partition {i} out of range (m = {})", self.m)))?;
        let set = load_fvecs(dir.as_ref().join(&entry.file))?;
        if set.len() as u64 != entry.count {
            return Err(Error::format(format!(
                "{} holds {} vectors, manifest says {}",
                entry.file,
                set.len(),
                entry.count
            )));
        }
        set.with_ids((entry.offset..entry.offset + entry.count).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::format(format!(
                "unsupported manifest version {}",
                self.version
            )));
        }
        PartitionKind::parse(&self.kind)
            .map_err(|_| Error::format(format!("unknown kind {:?}", self.kind)))?;
        if self.m == 0 || self.m != self.partitions.len() {
            return Err(Error::format(format!(
                "m = {} but {} partitions listed",
                self.m,
                self.partitions.len()
            )));
        }
        // Bound the allocation below by what the file actually lists.
        let listed: u64 = self.partitions.iter().map(|p| p.rows.len() as u64).sum();
        if listed != self.count {
            return Err(Error::format(format!(
                "partitions list {listed} of {} rows",
                self.count
            )));
        }
        let mut next = 0u64;
        let mut seen = vec![false; listed as usize];
        for (i, p) in self.partitions.iter().enumerate() {
            if p.offset != next || p.count != p.rows.len() as u64 {
                return Err(Error::format(format!(
                    "partition {i} id range is not contiguous"
                )));
            }
            next += p.count;
            for &r in &p.rows {
                match seen.get_mut(r as usize) {
                    Some(s) if !*s => *s = true,
                    _ => {
                        return Err(Error::format(format!(
                            "partition {i} lists row {r} twice or out of range"
                        )))
                    }
                }
            }
        }
        if next != self.count {
            return Err(Error::format(format!(
                "partitions cover {next} of {} rows",
                self.count
            )));
        }
        Ok(())
    }
}

pub fn part_file_name(i: usize) -> String {
    format!("part_{i:03}.fvecs")
}

pub fn encode_manifest(m: &Manifest) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(m).expect("manifest serializes");
    out.push(b'\n');
    out
}

pub fn decode_manifest(bytes: &[u8]) -> Result<Manifest> {
    let m: Manifest =
        serde_json::from_slice(bytes).map_err(|e| Error::format(format!("manifest json: {e}")))?;
    m.validate()?;
    Ok(m)
}

pub fn save_manifest(m: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path, &encode_manifest(m))
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    decode_manifest(&fsutil::read(path)?)
}

/// Writes `part_000.fvecs`, ..., `centroids.fvecs` and `manifest.json`
/// into `dir`, creating it if needed.
pub fn write_partitions(p: &Partitioning, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let dim = p
        .parts
        .iter()
        .map(VectorSet::dim)
        .find(|&d| d > 0)
        .unwrap_or(0);
    let manifest = Manifest::from_partitioning(p, dim);
    for (part, entry) in p.parts.iter().zip(&manifest.partitions) {
        fsutil::write_atomic(dir.join(&entry.file), &encode_fvecs(part))?;
    }
    let centroids = VectorSet::from_rows(&p.centroids)?;
    fsutil::write_atomic(dir.join(&manifest.centroids), &encode_fvecs(&centroids))?;
    save_manifest(&manifest, dir.join("manifest.json"))?;
    Ok(manifest)
}
