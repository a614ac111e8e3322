//! fvecs / ivecs codecs.
//!
//! Both formats are a flat sequence of little-endian records: a 32-bit
//! signed count `d` followed by `d` 32-bit values (floats for fvecs, signed
//! ints for ivecs). fvecs requires every record to share one positive `d`;
//! ivecs rows may differ in length and may be empty.

use std::path::Path;

use super::VectorSet;
use crate::error::{Error, Result};
use crate::fsutil;

fn read_header(bytes: &[u8], pos: usize) -> Result<usize> {
    let raw = bytes
        .get(pos..pos + 4)
        .ok_or_else(|| Error::format(format!("truncated record header at byte {pos}")))?;
    let d = i32::from_le_bytes(raw.try_into().unwrap());
    usize::try_from(d)
        .map_err(|_| Error::format(format!("negative record length {d} at byte {pos}")))
}

fn record_body(bytes: &[u8], pos: usize, d: usize) -> Result<&[u8]> {
    let len = d
        .checked_mul(4)
        .ok_or_else(|| Error::format("record length overflow"))?;
    bytes
        .get(pos..)
        .and_then(|rest| rest.get(..len))
        .ok_or_else(|| Error::format(format!("truncated record at byte {pos}: need {d} values")))
}

/// Decodes an fvecs byte stream. Ids are assigned `0..count`.
pub fn parse_fvecs(bytes: &[u8]) -> Result<VectorSet> {
    let mut pos = 0;
    let mut dim = 0usize;
    let mut data = Vec::new();
    while pos < bytes.len() {
        let d = read_header(bytes, pos)?;
        if d == 0 {
            return Err(Error::format(format!(
                "zero-dimension record at byte {pos}"
            )));
        }
        if dim == 0 {
            dim = d;
        } else if d != dim {
            return Err(Error::format(format!(
                "record at byte {pos} has dimension {d}, expected {dim}"
            )));
        }
        pos += 4;
        let body = record_body(bytes, pos, d)?;
        data.extend(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
        );
        pos += body.len();
    }
    VectorSet::from_flat(dim, data)
}

pub fn encode_fvecs(set: &VectorSet) -> Vec<u8> {
    let dim = set.dim();
    let mut out = Vec::with_capacity(set.len() * (dim + 1) * 4);
    for row in set.iter() {
        out.extend_from_slice(&(dim as i32).to_le_bytes());
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn parse_ivecs(bytes: &[u8]) -> Result<Vec<Vec<i32>>> {
    let mut pos = 0;
    let mut rows = Vec::new();
    while pos < bytes.len() {
        let d = read_header(bytes, pos)?;
        pos += 4;
        let body = record_body(bytes, pos, d)?;
        rows.push(
            body.chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        );
        pos += body.len();
    }
    Ok(rows)
}

pub fn encode_ivecs(rows: &[Vec<i32>]) -> Vec<u8> {
    let total: usize = rows.iter().map(|r| r.len() + 1).sum();
    let mut out = Vec::with_capacity(total * 4);
    for row in rows {
        out.extend_from_slice(&(row.len() as i32).to_le_bytes());
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<VectorSet> {
    parse_fvecs(&fsutil::read(path)?)
}

pub fn save_fvecs(set: &VectorSet, path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path, &encode_fvecs(set))
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    parse_ivecs(&fsutil::read(path)?)
}

pub fn save_ivecs(rows: &[Vec<i32>], path: impl AsRef<Path>) -> Result<()> {
    fsutil::write_atomic(path, &encode_ivecs(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_record() {
        let mut bytes = 2i32.to_le_bytes().to_vec();
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&2.0f32.to_le_bytes());
        let set = parse_fvecs(&bytes).unwrap();
        assert_eq!((set.dim(), set.len()), (2, 1));
        assert_eq!(set.get(0), &[1.0, 2.0]);
        assert_eq!(set.ids(), &[0]);
    }

    #[test]
    fn empty_file_is_empty_set() {
        let set = parse_fvecs(&[]).unwrap();
        assert_eq!((set.dim(), set.len()), (0, 0));
    }

    #[test]
    fn inconsistent_dim_rejected() {
        let mut set = VectorSet::new(2);
        set.push(&[1.0, 2.0]).unwrap();
        let mut bytes = encode_fvecs(&set);
        bytes.extend_from_slice(&3i32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 12]);
        assert!(matches!(parse_fvecs(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_rejected() {
        let mut set = VectorSet::new(3);
        set.push(&[1.0, 2.0, 3.0]).unwrap();
        let bytes = encode_fvecs(&set);
        for cut in 1..bytes.len() {
            assert!(matches!(parse_fvecs(&bytes[..cut]), Err(Error::Format(_))));
        }
        assert!(matches!(parse_ivecs(&[1, 0, 0]), Err(Error::Format(_))));
    }

    #[test]
    fn ivecs_small_and_empty_rows() {
        let rows = vec![vec![1, 2], vec![3, 4]];
        assert_eq!(parse_ivecs(&encode_ivecs(&rows)).unwrap(), rows);
        let rows = vec![vec![]];
        let bytes = encode_ivecs(&rows);
        assert_eq!(bytes, 0i32.to_le_bytes());
        assert_eq!(parse_ivecs(&bytes).unwrap(), rows);
    }

    #[test]
    fn thousand_vectors_round_trip_through_files() {
        let set = crate::vecstore::synth::gaussian(1000, 12, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.fvecs");
        save_fvecs(&set, &path).unwrap();
        let back = load_fvecs(&path).unwrap();
        assert_eq!(back, set);
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(encode_fvecs(&back), raw);
    }

    proptest! {
        #[test]
        fn fvecs_bytes_round_trip(dim in 1usize..9, bits in prop::collection::vec(any::<u32>(), 0..64)) {
            let n = bits.len() / dim;
            let mut bytes = Vec::new();
            for row in bits[..n * dim].chunks(dim) {
                bytes.extend_from_slice(&(dim as i32).to_le_bytes());
                for b in row {
                    bytes.extend_from_slice(&b.to_le_bytes());
                }
            }
            // Arbitrary bit patterns, NaN payloads included, survive the trip.
            let set = parse_fvecs(&bytes).unwrap();
            prop_assert_eq!(encode_fvecs(&set), bytes);
        }

        #[test]
        fn ivecs_round_trip(rows in prop::collection::vec(prop::collection::vec(any::<i32>(), 0..6), 0..10)) {
            let bytes = encode_ivecs(&rows);
            prop_assert_eq!(parse_ivecs(&bytes).unwrap(), rows);
        }
    }
}
