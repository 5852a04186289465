//! Clone pairs from vectors: thresholded cosine similarity, optional fusion
//! with externally produced per-sample vectors, and the token-overlap
//! baseline.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Range;

use sha2::{Digest, Sha256};

use crate::embed::EmbeddingMatrix;
use crate::graph::NodeId;
use crate::lexis::{TokenKind, TokenStream};
use crate::linalg::Dense;

#[derive(Debug, Clone, PartialEq)]
pub enum DetectError {
    InvalidQuery(String),
    TooFewSamples(usize),
    IdMismatch {
        missing_individual: Vec<String>,
        missing_global: Vec<String>,
    },
    DimMismatch {
        global: usize,
        individual: usize,
    },
    EmptyStream,
    BadVectors(String),
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::InvalidQuery(msg) => write!(f, "invalid similarity query: {msg}"),
            DetectError::TooFewSamples(n) => {
                write!(f, "need at least 2 sample vectors, found {n}")
            }
            DetectError::IdMismatch {
                missing_individual,
                missing_global,
            } => write!(
                f,
                "vector sets cover different samples (no individual vector: {missing_individual:?}; no global vector: {missing_global:?})"
            ),
            DetectError::DimMismatch { global, individual } => write!(
                f,
                "sum mode needs equal dimensions (global {global}, individual {individual}); use concat mode instead"
            ),
            DetectError::EmptyStream => write!(f, "token stream has no comparable tokens"),
            DetectError::BadVectors(msg) => write!(f, "invalid vector set: {msg}"),
        }
    }
}

impl core::error::Error for DetectError {}

/// Value of a cosine computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// Set when a vector has zero norm; the value is then 0.
    pub degenerate: bool,
}

/// `Σ xᵢyᵢ / (√Σxᵢ² · √Σyᵢ²)` in 64-bit.
///
/// # Panics
/// If the lengths differ.
pub fn cosine(x: &[f64], y: &[f64]) -> Cosine {
    assert_eq!(
        x.len(),
        y.len(),
        "cosine of vectors with different dimensions"
    );
    let mut xy = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for (a, b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let denom = libm::sqrt(xx) * libm::sqrt(yy);
    if denom == 0.0 {
        return Cosine {
            value: 0.0,
            degenerate: true,
        };
    }
    Cosine {
        value: (xy / denom).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    AllPairs,
    /// Only these pairs are scored.
    Pairs(Vec<(String, String)>),
    /// The `k` most similar partners of every sample.
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityQuery {
    pub threshold: f64,
    pub scope: Scope,
    pub tile_size: usize,
}

pub const DEFAULT_TILE_SIZE: usize = 4096;

impl SimilarityQuery {
    pub fn all_pairs(threshold: f64) -> Self {
        SimilarityQuery {
            threshold,
            scope: Scope::AllPairs,
            tile_size: DEFAULT_TILE_SIZE,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(DetectError::InvalidQuery(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        if self.tile_size == 0 {
            return Err(DetectError::InvalidQuery(
                "tile size must be at least 1".to_string(),
            ));
        }
        if self.scope == Scope::TopK(0) {
            return Err(DetectError::InvalidQuery("top-k needs k >= 1".to_string()));
        }
        Ok(())
    }
}

/// A reported pair with `id_a < id_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClonePair {
    pub id_a: String,
    pub id_b: String,
    pub similarity: f64,
}

impl ClonePair {
    /// Orders the ids; returns `None` for a self-pair.
    pub fn new(a: &str, b: &str, similarity: f64) -> Option<Self> {
        let (id_a, id_b) = match a.cmp(b) {
            Ordering::Less => (a, b),
            Ordering::Greater => (b, a),
            Ordering::Equal => return None,
        };
        Some(ClonePair {
            id_a: id_a.to_string(),
            id_b: id_b.to_string(),
            similarity,
        })
    }

    pub fn key(&self) -> (&str, &str) {
        (&self.id_a, &self.id_b)
    }
}

/// Unit-normalized sample vectors, sorted by id. Zero vectors stay zero and
/// score 0 against everything.
#[derive(Debug, Clone)]
pub struct SampleBlock {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl SampleBlock {
    pub fn from_embedding(e: &EmbeddingMatrix) -> Self {
        SampleBlock::from_rows(e.dim(), e.sample_rows())
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> Self {
        let mut rows: Vec<(&str, &[f64])> = rows.into_iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (_, row) in &rows {
            assert_eq!(row.len(), dim, "row dimension mismatch");
            let n = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            data.extend(row.iter().map(|v| if n > 0.0 { v / n } else { 0.0 }));
        }
        SampleBlock {
            ids: rows.iter().map(|(id, _)| id.to_string()).collect(),
            dim,
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|p| p.as_str().cmp(id)).ok()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Inner product of two normalized rows, clamped to [−1, 1].
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        dot_lanes(self.vector(i), self.vector(j)).clamp(-1.0, 1.0)
    }

    /// Like [`SampleBlock::scan_tile`] but reports row indices. Ids are
    /// sorted, so index order is id order.
    pub fn scan_tile_indices(
        &self,
        rows: Range<usize>,
        cols: Range<usize>,
        threshold: f64,
        out: &mut Vec<(u32, u32, f64)>,
    ) {
        for i in rows {
            let a = self.vector(i);
            let start = cols.start.max(i + 1);
            for j in start..cols.end {
                let s = dot_lanes(a, self.vector(j)).clamp(-1.0, 1.0);
                if s >= threshold {
                    out.push((i as u32, j as u32, s));
                }
            }
        }
    }

    /// Pairs `(i, j)` with `i < j`, `i ∈ rows`, `j ∈ cols` and similarity at
    /// or above `threshold`, appended in row-major order.
    pub fn scan_tile(
        &self,
        rows: Range<usize>,
        cols: Range<usize>,
        threshold: f64,
        out: &mut Vec<ClonePair>,
    ) {
        let mut hits = Vec::new();
        self.scan_tile_indices(rows, cols, threshold, &mut hits);
        out.extend(
            hits.into_iter()
                .map(|(i, j, s)| self.pair(i as usize, j as usize, s)),
        );
    }

    /// The pair of rows `i < j` with a precomputed similarity.
    pub fn pair(&self, i: usize, j: usize, similarity: f64) -> ClonePair {
        ClonePair {
            id_a: self.ids[i].clone(),
            id_b: self.ids[j].clone(),
            similarity,
        }
    }

    /// Up to `k` most similar partners of row `i` at or above `threshold`,
    /// ties broken by id.
    pub fn top_k(&self, i: usize, k: usize, threshold: f64) -> Vec<ClonePair> {
        let mut best: Vec<(f64, usize)> = (0..self.len())
            .filter(|&j| j != i)
            .map(|j| (self.similarity(i, j), j))
            .filter(|&(s, _)| s >= threshold)
            .collect();
        best.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        best.truncate(k);
        best.into_iter()
            .filter_map(|(s, j)| ClonePair::new(&self.ids[i], &self.ids[j], s))
            .collect()
    }
}

/// Dot product with eight independent accumulators, which lets the compiler
/// vectorize it. The summation order is fixed, so results are reproducible.
fn dot_lanes(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Upper-triangular tile grid `(rows, cols)` over `n` samples, in canonical
/// processing order.
pub fn tile_grid(n: usize, tile: usize) -> Vec<(Range<usize>, Range<usize>)> {
    let tile = tile.max(1);
    let starts: Vec<usize> = (0..n).step_by(tile).collect();
    let mut out = Vec::new();
    for (a, &ra) in starts.iter().enumerate() {
        for &rb in &starts[a..] {
            out.push((ra..(ra + tile).min(n), rb..(rb + tile).min(n)));
        }
    }
    out
}

/// Sorts by `(id_a, id_b)` and removes duplicates.
pub fn canonicalize_pairs(pairs: &mut Vec<ClonePair>) {
    pairs.sort_by(|a, b| a.key().cmp(&b.key()));
    pairs.dedup_by(|a, b| a.key() == b.key());
}

/// Pairs of sample rows whose cosine is at least `q.threshold`, sorted by
/// `(id_a, id_b)`.
pub fn detect_all_pairs(
    e: &EmbeddingMatrix,
    q: &SimilarityQuery,
) -> Result<Vec<ClonePair>, DetectError> {
    detect_in_block(&SampleBlock::from_embedding(e), q)
}

pub fn detect_in_block(
    block: &SampleBlock,
    q: &SimilarityQuery,
) -> Result<Vec<ClonePair>, DetectError> {
    q.validate()?;
    if block.len() < 2 {
        return Err(DetectError::TooFewSamples(block.len()));
    }
    let mut out = Vec::new();
    match &q.scope {
        Scope::AllPairs => {
            for (rows, cols) in tile_grid(block.len(), q.tile_size) {
                block.scan_tile(rows, cols, q.threshold, &mut out);
            }
        }
        Scope::Pairs(pairs) => {
            for (a, b) in pairs {
                let (Some(i), Some(j)) = (block.index_of(a), block.index_of(b)) else {
                    continue;
                };
                let s = block.similarity(i, j);
                if s >= q.threshold {
                    out.extend(ClonePair::new(a, b, s));
                }
            }
        }
        Scope::TopK(k) => {
            for i in 0..block.len() {
                out.extend(block.top_k(i, *k, q.threshold));
            }
        }
    }
    canonicalize_pairs(&mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Sum,
    Concat,
}

impl CombineMode {
    pub fn name(self) -> &'static str {
        match self {
            CombineMode::Sum => "sum",
            CombineMode::Concat => "concat",
        }
    }
}

impl core::str::FromStr for CombineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(CombineMode::Sum),
            "concat" => Ok(CombineMode::Concat),
            _ => Err(format!(
                "unknown combine mode `{s}` (expected sum or concat)"
            )),
        }
    }
}

/// Provenance of a combined vector set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combination {
    pub mode: CombineMode,
    pub global_digest: [u8; 32],
    pub individual_digest: [u8; 32],
}

/// Per-sample vectors from an external producer.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualVectors {
    vectors: BTreeMap<String, Vec<f64>>,
    dim: usize,
}

impl IndividualVectors {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Result<Self, DetectError> {
        let dim = vectors.values().next().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(DetectError::BadVectors(
                "no vectors or zero dimension".to_string(),
            ));
        }
        if let Some((id, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(DetectError::BadVectors(format!(
                "vector for {id} has dimension {} instead of {dim}",
                v.len()
            )));
        }
        if let Some((id, _)) = vectors
            .iter()
            .find(|(_, v)| v.iter().any(|x| !x.is_finite()))
        {
            return Err(DetectError::BadVectors(format!(
                "vector for {id} is not finite"
            )));
        }
        Ok(IndividualVectors { vectors, dim })
    }

    /// Sample rows of an embedding used as individual vectors.
    pub fn from_embedding(e: &EmbeddingMatrix) -> Result<Self, DetectError> {
        IndividualVectors::new(
            e.sample_rows()
                .map(|(id, r)| (id.to_string(), r.to_vec()))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// SHA-256 over ids and the bit patterns of every value, in id order.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (id, v) in &self.vectors {
            h.update((id.len() as u64).to_le_bytes());
            h.update(id.as_bytes());
            for x in v {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        v.to_vec()
    }
}

/// Fuses global sample vectors with individual vectors.
///
/// Both parts are scaled to unit length first so neither dominates; zero
/// vectors stay zero. `Sum` adds them (equal dimensions required),
/// `Concat` appends them. The result is re-normalized and holds sample rows
/// only.
pub fn combine_vectors(
    global: &EmbeddingMatrix,
    individual: &IndividualVectors,
    mode: CombineMode,
) -> Result<EmbeddingMatrix, DetectError> {
    let global_ids: BTreeSet<&str> = global.sample_rows().map(|(id, _)| id).collect();
    let indiv_ids: BTreeSet<&str> = individual.ids().collect();
    if global_ids != indiv_ids {
        return Err(DetectError::IdMismatch {
            missing_individual: global_ids
                .difference(&indiv_ids)
                .map(|s| s.to_string())
                .collect(),
            missing_global: indiv_ids
                .difference(&global_ids)
                .map(|s| s.to_string())
                .collect(),
        });
    }
    let out_dim = match mode {
        CombineMode::Sum if global.dim() != individual.dim() => {
            return Err(DetectError::DimMismatch {
                global: global.dim(),
                individual: individual.dim(),
            })
        }
        CombineMode::Sum => global.dim(),
        CombineMode::Concat => global.dim() + individual.dim(),
    };

    let mut node_index = Vec::new();
    let mut data = Vec::with_capacity(global_ids.len() * out_dim);
    for (id, g) in global.sample_rows() {
        let g = unit(g);
        let ind = unit(individual.get(id).expect("ids checked above"));
        let mut row: Vec<f64> = match mode {
            CombineMode::Sum => g.iter().zip(&ind).map(|(a, b)| a + b).collect(),
            CombineMode::Concat => g.iter().chain(&ind).copied().collect(),
        };
        let n = libm::sqrt(row.iter().map(|x| x * x).sum::<f64>());
        if n > 0.0 {
            row.iter_mut().for_each(|x| *x /= n);
        }
        node_index.push(NodeId::sample(id));
        data.extend(row);
    }

    let combination = Combination {
        mode,
        global_digest: global.graph_digest,
        individual_digest: individual.digest(),
    };
    let mut h = Sha256::new();
    h.update(b"combine:");
    h.update(mode.name().as_bytes());
    h.update(combination.global_digest);
    h.update(combination.individual_digest);
    let mut config = global.config;
    config.dim = out_dim;
    Ok(EmbeddingMatrix {
        vectors: Dense::from_row_major(node_index.len(), out_dim, data),
        node_index,
        config,
        graph_digest: h.finalize().into(),
        combination: Some(combination),
    })
}

/// Token-overlap baseline for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapBaselineResult {
    pub id_a: String,
    pub id_b: String,
    /// Size of the multiset intersection.
    pub shared: usize,
    /// Larger of the two token counts.
    pub t_max: usize,
    pub ratio: f64,
    pub is_clone: bool,
}

/// Multiset of comparable lexemes. Operators and separators are dropped, as
/// overlap-based detectors compare keywords, identifiers and literals only.
pub fn overlap_tokens(stream: &TokenStream) -> BTreeMap<&str, usize> {
    let mut bag = BTreeMap::new();
    for t in stream.iter() {
        if matches!(
            t.kind,
            TokenKind::Keyword | TokenKind::Identifier | TokenKind::Literal
        ) {
            *bag.entry(t.lexeme.as_str()).or_insert(0) += 1;
        }
    }
    bag
}

/// `|C1 ∩ C2| / max(|C1|, |C2|)` over token multisets; a clone when the
/// ratio is at least `theta`.
pub fn overlap_baseline(
    id_a: &str,
    stream_a: &TokenStream,
    id_b: &str,
    stream_b: &TokenStream,
    theta: f64,
) -> Result<OverlapBaselineResult, DetectError> {
    let a = overlap_tokens(stream_a);
    let b = overlap_tokens(stream_b);
    overlap_from_bags(id_a, &a, id_b, &b, theta)
}

pub fn overlap_from_bags(
    id_a: &str,
    a: &BTreeMap<&str, usize>,
    id_b: &str,
    b: &BTreeMap<&str, usize>,
    theta: f64,
) -> Result<OverlapBaselineResult, DetectError> {
    let size_a: usize = a.values().sum();
    let size_b: usize = b.values().sum();
    if size_a == 0 || size_b == 0 {
        return Err(DetectError::EmptyStream);
    }
    let shared = a
        .iter()
        .map(|(tok, &n)| n.min(b.get(tok).copied().unwrap_or(0)))
        .sum();
    let t_max = size_a.max(size_b);
    let ratio = shared as f64 / t_max as f64;
    let (id_a, id_b) = if id_a <= id_b {
        (id_a, id_b)
    } else {
        (id_b, id_a)
    };
    Ok(OverlapBaselineResult {
        id_a: id_a.to_string(),
        id_b: id_b.to_string(),
        shared,
        t_max,
        ratio,
        is_clone: ratio >= theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbedConfig;
    use crate::lexis::tokenize;
    use alloc::vec;

    fn matrix(rows: &[(&str, &[f64])]) -> EmbeddingMatrix {
        let dim = rows[0].1.len();
        EmbeddingMatrix {
            node_index: rows.iter().map(|(id, _)| NodeId::sample(*id)).collect(),
            vectors: Dense::from_row_major(
                rows.len(),
                dim,
                rows.iter().flat_map(|(_, r)| r.iter().copied()).collect(),
            ),
            config: EmbedConfig::with_dim(dim),
            graph_digest: [0; 32],
            combination: None,
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).value, 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).value, 0.0);
        assert!(
            (cosine(&[1.0, 1.0], &[1.0, 0.0]).value - core::f64::consts::FRAC_1_SQRT_2).abs()
                < 1e-12
        );
        let z = cosine(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(z.value, 0.0);
        assert!(z.degenerate);
    }

    #[test]
    fn pair_canonicalization() {
        let p = ClonePair::new("b", "a", 0.9).unwrap();
        assert_eq!(p.key(), ("a", "b"));
        assert!(ClonePair::new("a", "a", 1.0).is_none());
    }

    #[test]
    fn query_validation() {
        assert!(SimilarityQuery::all_pairs(1.1).validate().is_err());
        assert!(SimilarityQuery::all_pairs(0.0).validate().is_err());
        assert!(SimilarityQuery::all_pairs(1.0).validate().is_ok());
        let mut q = SimilarityQuery::all_pairs(0.7);
        q.tile_size = 0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn threshold_filters_pairs() {
        // pairwise cosines: (a,b) high, (a,c) and (b,c) lower
        let e = matrix(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.99, 0.141]),
            ("c", &[0.5, 0.866]),
        ]);
        let pairs = detect_all_pairs(&e, &SimilarityQuery::all_pairs(0.7)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].key(), ("a", "b"));
        assert!(detect_all_pairs(&e, &SimilarityQuery::all_pairs(1.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn threshold_is_inclusive() {
        let e = matrix(&[("a", &[1.0, 0.0]), ("b", &[1.0, 0.0])]);
        let pairs = detect_all_pairs(&e, &SimilarityQuery::all_pairs(1.0)).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn too_few_samples() {
        let e = matrix(&[("a", &[1.0, 0.0])]);
        assert_eq!(
            detect_all_pairs(&e, &SimilarityQuery::all_pairs(0.5)).unwrap_err(),
            DetectError::TooFewSamples(1)
        );
    }

    #[test]
    fn pairs_and_topk_scopes() {
        let e = matrix(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.9, 0.1]),
            ("c", &[0.8, 0.3]),
            ("d", &[0.0, 1.0]),
        ]);
        let q = SimilarityQuery {
            threshold: 0.5,
            scope: Scope::Pairs(vec![
                ("c".into(), "a".into()),
                ("a".into(), "d".into()),
                ("a".into(), "zz".into()),
            ]),
            tile_size: 7,
        };
        let got = detect_all_pairs(&e, &q).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].key(), ("a", "c"));

        let q = SimilarityQuery {
            threshold: 0.1,
            scope: Scope::TopK(1),
            tile_size: 7,
        };
        let keys: Vec<(String, String)> = detect_all_pairs(&e, &q)
            .unwrap()
            .iter()
            .map(|p| (p.id_a.clone(), p.id_b.clone()))
            .collect();
        assert_eq!(
            keys,
            [
                ("a".into(), "b".into()),
                ("b".into(), "c".into()),
                ("c".into(), "d".into())
            ]
        );
    }

    #[test]
    fn tile_grid_covers_upper_triangle_once() {
        for (n, t) in [(10, 3), (7, 7), (5, 1), (4, 100)] {
            let mut seen = BTreeSet::new();
            for (r, c) in tile_grid(n, t) {
                for i in r.clone() {
                    for j in c.clone() {
                        if i < j {
                            assert!(seen.insert((i, j)));
                        }
                    }
                }
            }
            assert_eq!(seen.len(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn combine_sum_example() {
        let g = matrix(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let ind = IndividualVectors::new(
            [
                ("a".to_string(), vec![0.0, 1.0]),
                ("b".to_string(), vec![0.0, 1.0]),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap();
        let c = combine_vectors(&g, &ind, CombineMode::Sum).unwrap();
        let r = c.row(0);
        assert!((r[0] - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((r[1] - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(c.combination.unwrap().mode, CombineMode::Sum);
    }

    #[test]
    fn combine_contract_checks() {
        let g = matrix(&[("a", &[1.0; 32]), ("b", &[0.5; 32])]);
        let ind = IndividualVectors::new(
            [
                ("a".to_string(), vec![1.0; 128]),
                ("b".to_string(), vec![2.0; 128]),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap();
        assert_eq!(
            combine_vectors(&g, &ind, CombineMode::Sum).unwrap_err(),
            DetectError::DimMismatch {
                global: 32,
                individual: 128
            }
        );
        assert_eq!(
            combine_vectors(&g, &ind, CombineMode::Concat)
                .unwrap()
                .dim(),
            160
        );

        let partial =
            IndividualVectors::new([("a".to_string(), vec![1.0; 32])].into_iter().collect())
                .unwrap();
        match combine_vectors(&g, &partial, CombineMode::Sum).unwrap_err() {
            DetectError::IdMismatch {
                missing_individual, ..
            } => assert_eq!(missing_individual, ["b"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_individual_vectors_preserve_similarities() {
        let g = matrix(&[
            ("a", &[0.6, 0.8, 0.0]),
            ("b", &[0.0, 0.6, 0.8]),
            ("c", &[1.0, 0.0, 0.0]),
        ]);
        let ind = IndividualVectors::new(
            ["a", "b", "c"]
                .iter()
                .map(|id| (id.to_string(), vec![0.0; 3]))
                .collect(),
        )
        .unwrap();
        let c = combine_vectors(&g, &ind, CombineMode::Sum).unwrap();
        let bg = SampleBlock::from_embedding(&g);
        let bc = SampleBlock::from_embedding(&c);
        for i in 0..3 {
            for j in 0..3 {
                assert!((bg.similarity(i, j) - bc.similarity(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn overlap_examples() {
        let a = tokenize("int x = foo(1);").unwrap();
        let r = overlap_baseline("p", &a, "q", &a, 0.7).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert!(r.is_clone);
        let b = tokenize("bar baz").unwrap();
        let c = tokenize("qux").unwrap();
        let r = overlap_baseline("p", &b, "q", &c, 0.7).unwrap();
        assert_eq!((r.shared, r.t_max, r.ratio), (0, 2, 0.0));
        assert!(!r.is_clone);
        let ops = tokenize("+ ;").unwrap();
        assert_eq!(
            overlap_baseline("p", &ops, "q", &c, 0.7).unwrap_err(),
            DetectError::EmptyStream
        );
    }

    #[test]
    fn overlap_is_symmetric() {
        let a = tokenize("int a = b + c; return a;").unwrap();
        let b = tokenize("int q = b; return q + 1;").unwrap();
        let ab = overlap_baseline("x", &a, "y", &b, 0.5).unwrap();
        let ba = overlap_baseline("y", &b, "x", &a, 0.5).unwrap();
        assert_eq!(ab, ba);
    }
}
