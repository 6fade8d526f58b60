use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use tracing::warn;

use crate::{Error, Result};

pub(crate) const FEATURE_MAGIC: &[u8; 4] = b"AFV1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub painting_id: String,
    pub values: Vec<f32>,
    /// Whether the Euclidean norm is 1 within 1e-6.
    pub normalized: bool,
}

impl FeatureVector {
    pub fn new(painting_id: impl Into<String>, values: Vec<f32>) -> Self {
        let norm = l2_norm(&values);
        FeatureVector { painting_id: painting_id.into(), normalized: (norm - 1.0).abs() <= 1e-6, values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

pub(crate) fn l2_norm(values: &[f32]) -> f64 {
    values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
}

/// Feature vectors keyed by painting id, all of one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureSet {
    dim: usize,
    vectors: IndexMap<String, FeatureVector>,
}

impl FeatureSet {
    pub fn with_dim(dim: usize) -> Self {
        FeatureSet { dim, vectors: IndexMap::new() }
    }

    /// Builds a set from vectors, taking the dimension from the first one.
    /// Later duplicates replace earlier ones.
    pub fn from_vectors(vectors: impl IntoIterator<Item = FeatureVector>) -> Result<Self> {
        let mut iter = vectors.into_iter().peekable();
        let dim = iter.peek().map(FeatureVector::dim).unwrap_or(0);
        let mut set = FeatureSet::with_dim(dim);
        for v in iter {
            set.insert(v)?;
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Inserts a vector; returns the replaced vector if the id was already present.
    pub fn insert(&mut self, v: FeatureVector) -> Result<Option<FeatureVector>> {
        if self.vectors.is_empty() && self.dim == 0 {
            self.dim = v.dim();
        }
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch { id: v.painting_id, expected: self.dim, found: v.values.len() });
        }
        Ok(self.vectors.insert(v.painting_id.clone(), v))
    }

    pub fn get(&self, id: &str) -> Option<&FeatureVector> {
        self.vectors.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vectors.contains_key(id)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &FeatureVector> {
        self.vectors.values()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn into_vectors(self) -> impl Iterator<Item = FeatureVector> {
        self.vectors.into_values()
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.vectors.retain(|id, _| keep(id));
    }
}

/// Serialises records as `u32 count, u32 dim` followed by `u32 id_len, id, dim × f32`,
/// all little-endian.
pub(crate) fn encode_records<'a>(
    out: &mut Vec<u8>,
    dim: usize,
    records: impl ExactSizeIterator<Item = (&'a str, &'a [f32])>,
) {
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for (id, values) in records {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!("expected {n} bytes for {what} at offset {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub(crate) type Records = Vec<(String, Vec<f32>)>;

/// Decodes the `count, dim, records...` body. Returns `(dim, records)`.
pub(crate) fn decode_records(reader: &mut ByteReader<'_>) -> Result<(usize, Records)> {
    let count = reader.u32("record count")? as usize;
    let dim = reader.u32("dimension")? as usize;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let id_len = reader.u32(&format!("id length of record {i}"))? as usize;
        let id = std::str::from_utf8(reader.take(id_len, &format!("id of record {i}"))?)
            .map_err(|e| Error::InvalidFeatureFile(format!("record {i}: id is not UTF-8: {e}")))?
            .to_string();
        let raw = reader.take(dim * 4, &format!("values of record {i} (`{id}`)"))?;
        let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        records.push((id, values));
    }
    Ok((dim, records))
}

/// Encodes a feature set in the `AFV1` binary layout.
pub fn encode_features(features: &FeatureSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + features.len() * (8 + features.dim() * 4));
    out.extend_from_slice(FEATURE_MAGIC);
    encode_records(&mut out, features.dim(), features.iter().map(|v| (v.painting_id.as_str(), v.values.as_slice())));
    out
}

/// Decodes an `AFV1` buffer. Duplicate ids keep the last record; their ids are returned.
pub fn decode_features(bytes: &[u8]) -> Result<(FeatureSet, Vec<String>)> {
    let mut reader = ByteReader::new(bytes);
    let magic = reader.take(4, "magic")?;
    if magic != FEATURE_MAGIC {
        return Err(Error::InvalidFeatureFile(format!("bad magic {magic:?}")));
    }
    let (dim, records) = decode_records(&mut reader)?;
    if reader.remaining() != 0 {
        return Err(Error::InvalidFeatureFile(format!("{} trailing bytes", reader.remaining())));
    }
    let mut set = FeatureSet::with_dim(dim);
    let mut duplicates = Vec::new();
    for (id, values) in records {
        if set.insert(FeatureVector::new(id.clone(), values))?.is_some() {
            duplicates.push(id);
        }
    }
    Ok((set, duplicates))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (set, duplicates) = decode_features(&bytes)?;
    for id in &duplicates {
        warn!(painting_id = %id, "duplicate feature vector, keeping the last one");
    }
    Ok(set)
}

pub fn write_features(path: impl AsRef<Path>, features: &FeatureSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_features(features)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vectors() -> FeatureSet {
        FeatureSet::from_vectors([
            FeatureVector::new("a", vec![1.0, 2.0, 3.0, 4.0]),
            FeatureVector::new("b", vec![0.5, 0.5, 0.5, 0.5]),
        ])
        .unwrap()
    }

    #[test]
    fn two_vectors_load() {
        let (set, dups) = decode_features(&encode_features(&two_vectors())).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), 4);
        assert!(dups.is_empty());
        assert!(set.get("b").unwrap().normalized);
        assert!(!set.get("a").unwrap().normalized);
    }

    #[test]
    fn short_last_record_is_truncated() {
        let mut bytes = encode_features(&two_vectors());
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(decode_features(&bytes), Err(Error::Truncated(_))));
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode_features(&two_vectors());
        bytes[0] = b'X';
        assert!(matches!(decode_features(&bytes), Err(Error::InvalidFeatureFile(_))));
    }

    #[test]
    fn duplicate_ids_last_wins() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(FEATURE_MAGIC);
        let a1 = [1.0f32, 0.0];
        let a2 = [0.0f32, 1.0];
        encode_records(&mut bytes, 2, [("a", &a1[..]), ("a", &a2[..])].into_iter());
        let (set, dups) = decode_features(&bytes).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(dups, vec!["a".to_string()]);
        assert_eq!(set.get("a").unwrap().values, vec![0.0, 1.0]);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let r = FeatureSet::from_vectors([FeatureVector::new("a", vec![1.0]), FeatureVector::new("b", vec![1.0, 2.0])]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
