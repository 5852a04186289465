//! Two-stage spectral node embedding of the global sample graph.
//!
//! Stage one factorizes a log-shifted proximity matrix of the symmetrized
//! graph with a randomized truncated SVD. Stage two propagates that initial
//! embedding through a Chebyshev expansion of a Bessel-weighted spectral
//! filter on the normalized Laplacian, smooths it over one hop and
//! L2-normalizes every row.
//!
//! Every node (samples and info nodes) gets a row; only sample rows are used
//! for detection.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::detect::Combination;
use crate::graph::{GlobalGraph, NodeId};
use crate::linalg::{Csr, Dense};
use crate::rsvd::{label_key, randomized_svd, GaussianSource};

/// Negative-sampling ratio of the proximity matrix.
const NEGATIVE_RATIO: f64 = 1.0;
/// Floor applied before taking logarithms.
const LOG_FLOOR: f64 = 1e-9;
/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    pub dim: usize,
    pub seed: u64,
    /// Highest Chebyshev term used by the propagation filter.
    pub order: usize,
    pub mu: f64,
    pub theta: f64,
    pub oversampling: usize,
    pub power_iters: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 64,
            seed: 42,
            order: 10,
            mu: 0.2,
            theta: 0.5,
            oversampling: 10,
            power_iters: 5,
        }
    }
}

impl EmbedConfig {
    pub fn with_dim(dim: usize) -> Self {
        EmbedConfig {
            dim,
            ..EmbedConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |msg: String| Err(EmbedError::InvalidConfig(msg));
        if self.dim < 2 {
            return bad(format!("dim must be at least 2, got {}", self.dim));
        }
        if self.order < 1 {
            return bad("chebyshev order must be at least 1".to_string());
        }
        if !self.mu.is_finite() || !self.theta.is_finite() {
            return bad("mu and theta must be finite".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedError {
    InvalidConfig(String),
    EmptyGraph,
    ZeroDegree(NodeId),
    /// Node order passed by the caller is not a permutation of the graph's
    /// nodes.
    BadNodeOrder,
    NonFinite {
        iteration: usize,
    },
    DegenerateRow(NodeId),
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::InvalidConfig(msg) => write!(f, "invalid embedding config: {msg}"),
            EmbedError::EmptyGraph => write!(f, "graph has no edges"),
            EmbedError::ZeroDegree(node) => write!(f, "node {node} has zero degree"),
            EmbedError::BadNodeOrder => {
                write!(f, "node order is not a permutation of the graph nodes")
            }
            EmbedError::NonFinite { iteration } => {
                write!(
                    f,
                    "non-finite value in spectral propagation at chebyshev term {iteration}"
                )
            }
            EmbedError::DegenerateRow(node) => write!(f, "embedding of node {node} is all zero"),
        }
    }
}

impl core::error::Error for EmbedError {}

/// Symmetrized adjacency `A = W + Wᵀ` with its degrees and the normalized
/// operator `D^-1/2 A D^-1/2`.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    pub order: Vec<NodeId>,
    pub adjacency: Csr,
    pub degree: Vec<f64>,
    pub normalized: Csr,
}

impl NormalizedAdjacency {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Builds the symmetric normalized operator over the canonical node order.
pub fn symmetrize_normalize(graph: &GlobalGraph) -> Result<NormalizedAdjacency, EmbedError> {
    symmetrize_normalize_ordered(graph, graph.node_order())
}

/// As [`symmetrize_normalize`], with rows in the caller's `order`.
pub fn symmetrize_normalize_ordered(
    graph: &GlobalGraph,
    order: Vec<NodeId>,
) -> Result<NormalizedAdjacency, EmbedError> {
    if graph.n_edges() == 0 {
        return Err(EmbedError::EmptyGraph);
    }
    let canonical: BTreeSet<NodeId> = graph.node_order().into_iter().collect();
    let given: BTreeSet<&NodeId> = order.iter().collect();
    if given.len() != order.len()
        || order.len() != canonical.len()
        || !order.iter().all(|n| canonical.contains(n))
    {
        return Err(EmbedError::BadNodeOrder);
    }
    let mut position: alloc::collections::BTreeMap<&NodeId, usize> =
        alloc::collections::BTreeMap::new();
    for (i, n) in order.iter().enumerate() {
        position.insert(n, i);
    }
    let n = order.len();
    let mut triplets = Vec::with_capacity(graph.n_edges() * 2);
    for e in graph.edges() {
        let s = position[&e.src];
        let d = position[&e.dst];
        triplets.push((s, d, e.weight));
        triplets.push((d, s, e.weight));
    }
    let adjacency = Csr::from_triplets(n, n, triplets);
    let degree: Vec<f64> = (0..n).map(|i| adjacency.row_sum(i)).collect();
    if let Some(i) = degree.iter().position(|&d| d <= 0.0) {
        return Err(EmbedError::ZeroDegree(order[i].clone()));
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    let normalized = adjacency.map_values(|r, c, v| v * inv_sqrt[r] * inv_sqrt[c]);
    Ok(NormalizedAdjacency {
        order,
        adjacency,
        degree,
        normalized,
    })
}

/// `M_ij = max(0, ln(max(ε, r_ij)) − ln(λ/n))` on the stored entries of the
/// row-normalized adjacency `r = D^-1 A`.
pub fn proximity_matrix(adj: &NormalizedAdjacency) -> Csr {
    let shift = libm::log(NEGATIVE_RATIO / adj.len() as f64);
    adj.adjacency.map_values(|r, _, v| {
        let p = v / adj.degree[r];
        (libm::log(p.max(LOG_FLOOR)) - shift).max(0.0)
    })
}

#[derive(Debug, Clone)]
pub struct Factorization {
    /// `n × dim` initial embedding `U_d · diag(√σ_d)`.
    pub embedding: Dense,
    pub singular_values: Vec<f64>,
    /// Number of trailing columns zeroed because of rank collapse.
    pub collapsed: usize,
}

/// First stage: randomized SVD of the proximity matrix.
///
/// The Gaussian test matrix is keyed by `(cfg.seed, key)` and by each
/// node's label, so the draw does not depend on row order.
pub fn factorize(adj: &NormalizedAdjacency, cfg: &EmbedConfig, key: &[u8; 32]) -> Factorization {
    let m = proximity_matrix(adj);
    let source = GaussianSource::new(cfg.seed, key);
    let row_keys: Vec<u64> = adj
        .order
        .iter()
        .map(|n| label_key(&n.to_string()))
        .collect();
    let svd = randomized_svd(
        &m,
        cfg.dim,
        cfg.oversampling,
        cfg.power_iters,
        &source,
        &row_keys,
    );

    let top = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut collapsed = 0;
    let mut embedding = svd.u;
    for (j, &s) in svd.singular_values.iter().enumerate() {
        let scale = if s > RANK_TOLERANCE * top && s > 0.0 {
            libm::sqrt(s)
        } else {
            collapsed += 1;
            0.0
        };
        for i in 0..embedding.rows() {
            let v = embedding.get(i, j) * scale;
            embedding.set(i, j, v);
        }
    }
    if collapsed > 0 {
        log::warn!(
            "rank collapse: {collapsed} of {} embedding columns zero-padded ({} nodes)",
            cfg.dim,
            adj.len()
        );
    }
    Factorization {
        embedding,
        singular_values: svd.singular_values,
        collapsed,
    }
}

/// Modified Bessel function of the first kind `I_n(x)`, by its power series.
pub fn bessel_i(n: usize, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = half * half;
    for m in 1..200 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Chebyshev coefficients `c_0 = I_0(θ)`, `c_j = 2 (−1)^j I_j(θ)` of the
/// filter `exp(−θ x)`, for `j = 0..=order`.
pub fn chebyshev_coefficients(order: usize, theta: f64) -> Vec<f64> {
    (0..=order)
        .map(|j| {
            let i = bessel_i(j, theta);
            match j {
                0 => i,
                _ if j % 2 == 0 => 2.0 * i,
                _ => -2.0 * i,
            }
        })
        .collect()
}

/// Second stage: spectral propagation.
///
/// With `L = I − Â` and `M = L − μI`, accumulates `S = Σ c_j T_j` where
/// `T_0 = R`, `T_1 = M R`, `T_{j+1} = 2 M T_j − T_{j−1}`, then returns the
/// row-normalized one-hop smoothing `D^-1 A S`. An `order` of zero keeps only
/// the `T_0` term.
pub fn propagate(
    initial: &Dense,
    adj: &NormalizedAdjacency,
    cfg: &EmbedConfig,
) -> Result<Dense, EmbedError> {
    let coeffs = chebyshev_coefficients(cfg.order, cfg.theta);
    let shift = 1.0 - cfg.mu;
    // M x = (1 − μ) x − Â x
    let apply = |x: &Dense| -> Dense {
        let mut out = adj.normalized.mul_dense(x);
        out.scale(-1.0);
        out.axpy(shift, x);
        out
    };

    let mut acc = initial.clone();
    acc.scale(coeffs[0]);
    if cfg.order >= 1 {
        let mut prev = initial.clone();
        let mut cur = apply(initial);
        if !cur.is_finite() {
            return Err(EmbedError::NonFinite { iteration: 1 });
        }
        acc.axpy(coeffs[1], &cur);
        for (j, &c) in coeffs.iter().enumerate().skip(2) {
            let mut next = apply(&cur);
            next.scale(2.0);
            next.axpy(-1.0, &prev);
            if !next.is_finite() {
                return Err(EmbedError::NonFinite { iteration: j });
            }
            acc.axpy(c, &next);
            prev = cur;
            cur = next;
        }
    }
    if !acc.is_finite() {
        return Err(EmbedError::NonFinite {
            iteration: cfg.order,
        });
    }

    let mut out = adj.adjacency.mul_dense(&acc);
    for (i, &d) in adj.degree.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|v| *v /= d);
    }
    if let Some(i) = out.normalize_rows() {
        return Err(EmbedError::DegenerateRow(adj.order[i].clone()));
    }
    Ok(out)
}

/// Node vectors in canonical node order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub node_index: Vec<NodeId>,
    /// `n × d`, one row per entry of `node_index`.
    pub vectors: Dense,
    pub config: EmbedConfig,
    /// SHA-256 of the canonical edge list (or of the combination inputs).
    pub graph_digest: [u8; 32],
    /// Set when the matrix was produced by combining vector sets.
    pub combination: Option<Combination>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.node_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_index.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    /// `(sample id, row)` for every sample node, in node order.
    pub fn sample_rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.node_index
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.sample_id().map(|id| (id, self.vectors.row(i))))
    }

    pub fn n_samples(&self) -> usize {
        self.node_index.iter().filter(|n| n.is_sample()).count()
    }

    /// Row index of a node.
    pub fn position(&self, node: &NodeId) -> Option<usize> {
        self.node_index.iter().position(|n| n == node)
    }
}

/// Full embedding of `graph` in canonical node order.
pub fn embed(graph: &GlobalGraph, cfg: &EmbedConfig) -> Result<EmbeddingMatrix, EmbedError> {
    embed_ordered(graph, graph.node_order(), cfg)
}

/// Embedding with rows in the caller's node order.
pub fn embed_ordered(
    graph: &GlobalGraph,
    order: Vec<NodeId>,
    cfg: &EmbedConfig,
) -> Result<EmbeddingMatrix, EmbedError> {
    cfg.validate()?;
    let digest = graph.digest();
    let adj = symmetrize_normalize_ordered(graph, order)?;
    let initial = factorize(&adj, cfg, &digest);
    let vectors = propagate(&initial.embedding, &adj, cfg)?;
    Ok(EmbeddingMatrix {
        node_index: adj.order,
        vectors,
        config: *cfg,
        graph_digest: digest,
        combination: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // I_0(0.5), I_1(0.5), I_2(0.5), I_3(1.0) from standard tables
        assert!((bessel_i(0, 0.5) - 1.063_483_370_741_323_6).abs() < 1e-15);
        assert!((bessel_i(1, 0.5) - 0.257_894_305_390_896_3).abs() < 1e-15);
        assert!((bessel_i(2, 0.5) - 0.031_906_149_177_738_24).abs() < 1e-15);
        assert!((bessel_i(3, 1.0) - 0.022_168_424_924_331_9).abs() < 1e-15);
        assert_eq!(bessel_i(0, 0.0), 1.0);
        assert_eq!(bessel_i(2, 0.0), 0.0);
    }

    #[test]
    fn chebyshev_series_reproduces_exponential() {
        // Σ c_j T_j(x) = exp(−θx) on [−1, 1]
        let theta = 0.5;
        let c = chebyshev_coefficients(12, theta);
        for x in [-1.0, -0.3, 0.0, 0.4, 1.0] {
            let (mut t0, mut t1) = (1.0, x);
            let mut s = c[0] * t0 + c[1] * t1;
            for cj in &c[2..] {
                let t2 = 2.0 * x * t1 - t0;
                s += cj * t2;
                t0 = t1;
                t1 = t2;
            }
            assert!((s - libm::exp(-theta * x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(EmbedConfig::default().validate().is_ok());
        assert!(EmbedConfig::with_dim(1).validate().is_err());
        let cfg = EmbedConfig {
            order: 0,
            ..EmbedConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
