//! Exact cosine nearest-neighbour search over painting feature vectors.
//!
//! Rows are L2-normalised at build time, so the cosine distance between two paintings is
//! `1 - <a, b>`. Queries are a brute-force scan; ties on distance are broken by painting id
//! so every result is fully deterministic.
//!
//! Distances are snapped to a grid of [`DISTANCE_RESOLUTION`]. Rows are stored as `f32`, so
//! geometrically equal distances (say, two parallel vectors of different length) can differ by
//! rounding noise; snapping makes them compare equal and fall through to the id tie-break.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::features::{decode_records, encode_records, l2_norm, ByteReader};
use crate::corpus::{FeatureSet, FeatureVector};
use crate::{Error, Result};

const CACHE_MAGIC: &[u8; 4] = b"AFVI";
pub const CACHE_FORMAT_VERSION: u32 = 1;
pub const DISTANCE_RESOLUTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub painting_id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub query_id: String,
    pub neighbors: Vec<Neighbor>,
}

#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    ids: Vec<String>,
    positions: HashMap<String, usize>,
    /// Row-major `len × dim`, unit-norm rows.
    matrix: Vec<f32>,
    dim: usize,
}

impl SimilarityIndex {
    pub fn build(features: &FeatureSet) -> Result<Self> {
        Self::from_rows(features.iter().map(|v| (v.painting_id.as_str(), v.values.as_slice())))
    }

    pub fn from_rows<'a>(rows: impl IntoIterator<Item = (&'a str, &'a [f32])>) -> Result<Self> {
        let mut ids = Vec::new();
        let mut positions = HashMap::new();
        let mut matrix = Vec::new();
        let mut dim = None;
        for (id, values) in rows {
            let d = *dim.get_or_insert(values.len());
            if values.len() != d {
                return Err(Error::DimensionMismatch { id: id.to_string(), expected: d, found: values.len() });
            }
            let norm = l2_norm(values);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::ZeroVector(id.to_string()));
            }
            if positions.insert(id.to_string(), ids.len()).is_some() {
                return Err(Error::InvalidRecord(format!("duplicate id `{id}` in index input")));
            }
            ids.push(id.to_string());
            matrix.extend(values.iter().map(|&v| (f64::from(v) / norm) as f32));
        }
        let dim = dim.ok_or(Error::Empty("feature set"))?;
        if dim == 0 {
            return Err(Error::InvalidParameter("zero-dimensional features".into()));
        }
        Ok(SimilarityIndex { ids, positions, matrix, dim })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    /// The stored (normalised) row for a painting.
    pub fn row(&self, id: &str) -> Option<&[f32]> {
        self.positions.get(id).map(|&i| self.row_at(i))
    }

    fn row_at(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.positions.get(id).copied().ok_or_else(|| Error::UnknownPainting(id.to_string()))
    }

    fn distance_at(&self, a: usize, b: usize) -> f64 {
        let dot: f64 = self.row_at(a).iter().zip(self.row_at(b)).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
        ((1.0 - dot).max(0.0) / DISTANCE_RESOLUTION).round() * DISTANCE_RESOLUTION
    }

    /// Cosine distance between two indexed paintings.
    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.distance_at(self.position(a)?, self.position(b)?))
    }

    fn order(&self, a: &(f64, usize), b: &(f64, usize)) -> Ordering {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| self.ids[a.1].cmp(&self.ids[b.1]))
    }

    /// The `k` nearest paintings to `query_id`, excluding itself.
    pub fn query(&self, query_id: &str, k: usize) -> Result<NeighborList> {
        let q = self.position(query_id)?;
        let others = self.len() - 1;
        if k == 0 || k > others {
            return Err(Error::InvalidParameter(format!("k={k} outside 1..={others}")));
        }
        Ok(NeighborList { query_id: query_id.to_string(), neighbors: self.top_k(q, k, |_| true) })
    }

    /// Up to `k` nearest paintings accepted by `keep`, excluding the query itself.
    /// Returns fewer than `k` when not enough paintings pass the filter.
    pub fn query_filtered(&self, query_id: &str, k: usize, keep: impl Fn(&str) -> bool) -> Result<Vec<Neighbor>> {
        let q = self.position(query_id)?;
        Ok(self.top_k(q, k, keep))
    }

    fn top_k(&self, q: usize, k: usize, keep: impl Fn(&str) -> bool) -> Vec<Neighbor> {
        let mut scored: Vec<(f64, usize)> =
            (0..self.len()).filter(|&i| i != q && keep(&self.ids[i])).map(|i| (self.distance_at(q, i), i)).collect();
        if k < scored.len() {
            scored.select_nth_unstable_by(k, |a, b| self.order(a, b));
            scored.truncate(k);
        }
        scored.sort_unstable_by(|a, b| self.order(a, b));
        scored.into_iter().map(|(distance, i)| Neighbor { painting_id: self.ids[i].clone(), distance }).collect()
    }

    /// [`SimilarityIndex::query`] for many ids, in parallel. Results are per id and in input order.
    pub fn batch_query(&self, ids: &[impl AsRef<str> + Sync], k: usize) -> Vec<Result<NeighborList>> {
        ids.par_iter().map(|id| self.query(id.as_ref(), k)).collect()
    }

    /// Writes the normalised rows with a format-version header.
    pub fn save_cache(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::with_capacity(16 + self.matrix.len() * 4);
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_FORMAT_VERSION.to_le_bytes());
        encode_records(&mut out, self.dim, self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), self.row_at(i))));
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Loads a cache written by [`SimilarityIndex::save_cache`]. Returns `Ok(None)` when the
    /// cache is stale: wrong format version or an id set different from `features`.
    pub fn load_cache(path: impl AsRef<Path>, features: &FeatureSet) -> Result<Option<Self>> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut reader = ByteReader::new(&bytes);
        if reader.take(4, "magic")? != CACHE_MAGIC {
            return Err(Error::InvalidFeatureFile("not an index cache".into()));
        }
        if reader.u32("format version")? != CACHE_FORMAT_VERSION {
            return Ok(None);
        }
        let (dim, records) = decode_records(&mut reader)?;
        let cached: BTreeSet<&str> = records.iter().map(|(id, _)| id.as_str()).collect();
        let wanted: BTreeSet<&str> = features.ids().collect();
        if cached != wanted || (dim != features.dim() && !features.is_empty()) {
            return Ok(None);
        }
        let mut ids = Vec::with_capacity(records.len());
        let mut positions = HashMap::with_capacity(records.len());
        let mut matrix = Vec::with_capacity(records.len() * dim);
        for (id, values) in records {
            positions.insert(id.clone(), ids.len());
            ids.push(id);
            matrix.extend(values);
        }
        Ok(Some(SimilarityIndex { ids, positions, matrix, dim }))
    }

    /// The stored rows as feature vectors (all flagged normalised).
    pub fn to_features(&self) -> FeatureSet {
        FeatureSet::from_vectors(
            self.ids.iter().enumerate().map(|(i, id)| FeatureVector::new(id.clone(), self.row_at(i).to_vec())),
        )
        .expect("index rows share one dimension")
    }
}
